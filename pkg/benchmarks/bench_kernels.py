"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from levynet import kernels


def cases(rng):
    # shallow network of the Monte Carlo construction: n = 4096 call units, 1000 grid points
    n, P = 4096, 1000
    W1 = rng.lognormal(0.0, 0.2, (n, 1))
    b1 = -np.ones(n)
    W2 = np.full((1, n), 1.0 / n)
    b2 = np.zeros(1)
    X = np.linspace(0.5, 1.5, P)[:, None]
    yield "shallow_realize d=1", lambda be: kernels.shallow_realize(W1, b1, W2, b2, X, backend=be)
    # 5 inputs, 2048 hidden units
    d, H = 5, 2048
    W1d = rng.normal(size=(H, d))
    b1d = rng.normal(size=H)
    W2d = rng.normal(size=(1, H))
    Xd = rng.uniform(0.5, 1.5, (2000, d))
    yield "shallow_realize d=5", lambda be: kernels.shallow_realize(W1d, b1d, W2d, b2, Xd, backend=be)
    scale = rng.lognormal(0.0, 0.2, 1 << 14)
    s = np.linspace(0.5, 1.5, 1000)
    yield "scaled_call_average", lambda be: kernels.scaled_call_average(scale, s, 1.0, backend=be)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    try:
        from levynet import _kernels  # noqa: F401
        backends = ["python", "compiled"]
    except ImportError:
        backends = ["python"]
        print("compiled extension not built; timing the numpy fallback only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<24}" + "".join(f"{b:>14}" for b in backends) + ("   speedup  max|diff|" if len(backends) == 2 else ""))
    for name, fn in cases(rng):
        times, outs = [], []
        for be in backends:
            outs.append(fn(be))
            times.append(min(timeit.repeat(lambda: fn(be), number=1, repeat=args.repeat)))
        row = f"{name:<24}" + "".join(f"{t * 1e3:>11.2f} ms" for t in times)
        if len(backends) == 2:
            row += f"{times[0] / times[1]:>10.2f}  {np.max(np.abs(outs[0] - outs[1])):.1e}"
        print(row)


if __name__ == "__main__":
    main()
