"""Experiments: call-chain calibration, the dimension sweep and the separable-basket check."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .constructive import (EXEC_LIMIT, ConstructionConfig, ErrorMeter, construct, linear_fit,
                           loglog_fit, trial_errors)
from .levy_models import LevyModel1D, LevyModelD, triplet_bounds
from .payoffs import PayoffSpec
from .pricing_oracle import price_fourier_1d, price_mc
from .relu_net import ReluNetwork, metrics, payoff_net


# ---------------------------------------------------------------------------
# calibration to a call chain
# ---------------------------------------------------------------------------


@dataclass
class CalibrationResult:
    N: int
    epsilon: float
    delta: float
    mse: float
    met_target: bool
    n: int
    M: int
    L: int
    sup_error: float
    a: float
    b: float
    weights_times_eps: float
    weights_times_delta2: float
    seed: int


def call_chain(model: LevyModel1D, S0: float, strikes, T: float) -> np.ndarray:
    """C(T, K_i) = K_i u(T, S0 / K_i) for the unit-strike call payoff."""
    K = np.asarray(strikes, dtype=float)
    return K * price_fourier_1d(model, PayoffSpec.call(1.0), T, S0 / K).value


def calibration_mse(net: ReluNetwork, S0: float, strikes, C_hat) -> float:
    """(1/N) sum_i (C_i / K_i - R(net)(S0 / K_i))^2."""
    K = np.asarray(strikes, dtype=float)
    r = np.asarray(C_hat, dtype=float) / K - net(S0 / K)
    return float(np.mean(r * r))


def strike_range(lo: float, hi: float, N: int) -> np.ndarray:
    return np.linspace(lo, hi, N) if N > 1 else np.array([0.5 * (lo + hi)])


def calib_experiment(model: LevyModel1D, S0: float, strikes, T: float, epsilon: float, seed: int = 0,
                     n_start: int = 256, n_max: int = EXEC_LIMIT, grid_points: int = 201,
                     C_hat: Optional[np.ndarray] = None) -> tuple[ReluNetwork, CalibrationResult]:
    """Network psi with (1/N) sum (C_i/K_i - R(psi)(S0/K_i))^2 <= epsilon.

    The construction targets sup error delta = sqrt(epsilon) on [min S0/K_i, max S0/K_i]
    (measured on a grid together with the strike points) and doubles n from
    n_start until the target is met.
    """
    K = np.asarray(strikes, dtype=float)
    if np.any(K <= 0):
        raise ValueError("strikes must be positive")
    x = S0 / K
    a, b = float(x.min()), float(x.max())
    if b - a < 1e-9 * b:
        a, b = a * (1 - 1e-3), b * (1 + 1e-3)
    if C_hat is None:
        C_hat = call_chain(model, S0, K, T)
    delta = math.sqrt(epsilon)
    spec = PayoffSpec.call(1.0)
    pts = np.concatenate([np.linspace(a, b, grid_points), x])[:, None]
    meter = ErrorMeter.on_points(model, spec, T, pts, seed)
    n = n_start
    while True:
        cfg = ConstructionConfig(epsilon=min(delta, 1.0), a=a, b=b, n_override=n, attempts=1, seed=seed)
        net, rep = construct(model, spec, T, cfg, meter=meter, require_target=False)
        if rep.met_target or 2 * n > n_max:
            break
        n *= 2
    mse = calibration_mse(net, S0, K, C_hat)
    m = metrics(net)
    res = CalibrationResult(int(K.size), epsilon, delta, mse, mse <= epsilon, n, m.M, m.L, rep.sup_error,
                            a, b, m.M * epsilon, m.M * delta**2, seed)
    return net, res


# ---------------------------------------------------------------------------
# dimension sweep
# ---------------------------------------------------------------------------


@dataclass
class SweepRow:
    d: int
    n: int
    M: int
    L: int
    error: float
    oracle_error: float
    B: float
    sampling: str


@dataclass
class SweepResult:
    rows: list
    target: float
    poly_exponent: float
    poly_r2: float
    exp_rate: float
    exp_r2: float
    polynomial_preferred: bool
    evaluations: dict = field(default_factory=dict)


def basket_model(sigma: float, d: int):
    m1 = LevyModel1D.black_scholes(sigma)
    return m1 if d == 1 else LevyModelD.independent(m1, d)


def basket_spec(d: int, K: float) -> PayoffSpec:
    # the one-asset basket is the plain call, priced by the Fourier oracle
    return PayoffSpec.call(K) if d == 1 else PayoffSpec.basket_call([1.0 / d] * d, K)


def sweep_meter(model, spec: PayoffSpec, T: float, box: tuple, d: int, seed: int,
                lhs_points: int = 256, oracle_samples: int = 1 << 18) -> ErrorMeter:
    per_dim = {1: 201, 2: 21, 3: 9}.get(d, 2)
    return ErrorMeter(model, spec, T, box, per_dim, lhs_points, seed, oracle_samples)


def dimension_sweep(sigma: float, d_list: Sequence[int], target: float, T: float = 1.0,
                    box: tuple = (0.5, 1.5), K: float = 1.0, seed: int = 0, trials: int = 32,
                    headroom: float = 0.8, n_lo: int = 2, n_hi: int = 1 << 12,
                    lhs_points: int = 256, oracle_samples: int = 1 << 18) -> SweepResult:
    """Smallest n (by bisection) whose mean sup error over `trials` constructions meets
    headroom * target, for each d.

    Every n reuses the sampling streams of the first rate-study entry, so the
    d = 1 row reproduces rate_study(n_list=[n]) with the same seed. Fits log M
    against log d (polynomial) and against d (exponential).
    """
    rows, evals = [], {}
    goal = headroom * target
    for d in d_list:
        model, spec = basket_model(sigma, d), basket_spec(d, K)
        meter = sweep_meter(model, spec, T, box, d, seed, lhs_points, oracle_samples)
        phi, _ = payoff_net(spec, d)
        cache: dict = {}

        def run(n):
            if n not in cache:
                D = math.inf if d == 1 else math.log(n)
                errs, m = trial_errors(phi, model, T, n, D, trials, seed, 0, meter)
                cache[n] = (float(np.mean(errs)), m)
            return cache[n]

        lo, hi = n_lo, n_hi
        while run(hi)[0] > goal:
            lo, hi = hi, 2 * hi
            if hi > EXEC_LIMIT:
                raise RuntimeError(f"no n <= {EXEC_LIMIT} meets the target at d = {d}")
        if run(lo)[0] <= goal:
            hi = lo
        while hi - lo > max(1, lo // 16):
            mid = int(round(math.sqrt(lo * hi)))
            mid = min(max(mid, lo + 1), hi - 1)
            if run(mid)[0] <= goal:
                hi = mid
            else:
                lo = mid
        err, m = run(hi)
        rows.append(SweepRow(int(d), int(hi), m.M, m.L, err, float(meter.errors.max()),
                             float(triplet_bounds(model, 2.0)), meter.sampling))
        evals[int(d)] = sorted((int(n), v[0]) for n, v in cache.items())
    ds = np.array([r.d for r in rows], float)
    Ms = np.array([r.M for r in rows], float)
    pe, _, pr2 = loglog_fit(ds, Ms)
    er, _, er2 = linear_fit(ds, np.log(Ms))
    return SweepResult(rows, target, pe, pr2, er, er2, pr2 > er2, evals)


@dataclass
class SeparableCheck:
    d: int
    max_z: float
    max_diff: float
    se: list


def separable_check(sigma: float, d: int, K: float, T: float, S: np.ndarray, n_mc: int,
                    seed: int) -> SeparableCheck:
    """d-dimensional MC price of sum_i (1/d)(s_i - K)^+ against the sum of 1d Fourier prices."""
    model = basket_model(sigma, d)
    spec = PayoffSpec.separable_calls([1.0 / d] * d, K)
    S = np.asarray(S, dtype=float).reshape(-1, d)
    mc = price_mc(model, spec, T, S, n_mc, seed, stream=(7,))
    m1 = LevyModel1D.black_scholes(sigma)
    exact = sum(price_fourier_1d(m1, PayoffSpec.call(K), T, S[:, i]).value for i in range(d)) / d
    se = mc.error_bound / 3.0
    diff = np.abs(mc.value - exact)
    return SeparableCheck(d, float(np.max(diff / se)), float(diff.max()), se.tolist())


def as_dict(obj) -> dict:
    return asdict(obj)
