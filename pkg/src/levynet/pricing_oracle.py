"""Reference prices u(tau, s) = E[phi(s exp(X_tau))] (zero rates) and log-price derivatives.

1d: cosine expansion of the law of X_tau (calls, butterflies) and Fourier
quadrature of exp(-tau psi) v0_hat for square-integrable log payoffs.
d > 1: seeded Monte Carlo with a 3-standard-error half width.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from .errors import DampingFailure, NotSimulable, SectorViolation
from .levy_models import (
    LevyModel1D,
    LevyModelD,
    TemperedStableJumps,
    rng_stream,
    sample_increments,
    symbol,
)
from .payoffs import LogPayoff, PayoffSpec

MC_BLOCK = 1 << 15


@dataclass
class OracleResult:
    value: np.ndarray
    error_bound: np.ndarray
    kind: str
    confidence: Optional[np.ndarray] = None
    n: Optional[int] = None
    seed: Optional[int] = None
    info: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def _lognormal_call(s, K, m, v):
    """E[(s e^X - K)^+] for X ~ N(m, v)."""
    s = np.asarray(s, dtype=float)
    if v <= 0:
        return np.maximum(s * np.exp(m) - K, 0.0)
    sd = np.sqrt(v)
    d1 = (np.log(s / K) + m + v) / sd
    return s * np.exp(m + 0.5 * v) * special.ndtr(d1) - K * special.ndtr(d1 - sd)


def closed_form_reference(kind: str, params: dict):
    """Analytic call prices; a missing `gamma` means martingale drift."""
    sigma, tau = float(params["sigma"]), float(params["tau"])
    s, K = params["s"], float(params["K"])
    if kind == "BlackScholesCall":
        g = params.get("gamma", -0.5 * sigma**2)
        return _lognormal_call(s, K, g * tau, sigma**2 * tau)
    if kind == "MertonCall":
        lam, mj, sj = float(params["lam"]), float(params["muJ"]), float(params["sigmaJ"])
        terms = int(params.get("terms", 50))
        model = LevyModel1D.merton(sigma, lam, mj, sj, params.get("gamma"))
        # drift of X net of the compensated small-jump mean
        b = model.gamma - lam * model.jumps.law.trunc_mean(1.0)
        out = 0.0
        for j in range(terms):
            w = math.exp(-lam * tau + j * math.log(lam * tau) - math.lgamma(j + 1)) if lam > 0 else float(j == 0)
            out = out + w * _lognormal_call(s, K, b * tau + j * mj, sigma**2 * tau + j * sj**2)
        return out
    raise ValueError(f"unknown closed form {kind!r}")


# ---------------------------------------------------------------------------
# cosine expansion
# ---------------------------------------------------------------------------


def _strip(model: LevyModel1D) -> tuple[float, float]:
    """Open interval of real u where E[exp(u X)] is finite."""
    j = model.jumps
    if j is None or (not isinstance(j, TemperedStableJumps) and j.lam == 0):
        return -np.inf, np.inf
    if isinstance(j, TemperedStableJumps):
        return -j.G, j.M
    law = j.law
    if hasattr(law, "eta_plus"):
        return -law.eta_minus, law.eta_plus
    return -np.inf, np.inf


def _chernoff_tail(model: LevyModel1D, tau: float, lo: float, hi: float) -> float:
    """Upper bound on P(X_tau < lo) + P(X_tau > hi)."""
    a, b = _strip(model)
    thetas = np.geomspace(1e-3, 1e6, 200)
    best_lo = best_hi = 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        for th in thetas:
            if -th > a:
                v = float(np.exp(tau * model.cumulant(-th).real + th * lo))
                best_lo = min(best_lo, v) if np.isfinite(v) else best_lo
            if th < b:
                v = float(np.exp(tau * model.cumulant(th).real - th * hi))
                best_hi = min(best_hi, v) if np.isfinite(v) else best_hi
    return best_lo + best_hi


def _cos_puts(model: LevyModel1D, tau: float, x: np.ndarray, K: float, N: int, A: float, B: float):
    """Put prices K E[(1 - e^{x + X})^+] by a cosine series of X on [A, B]."""
    k = np.arange(N)
    w = k * np.pi / (B - A)
    phi = np.exp(tau * model.cumulant(1j * w))
    F = (phi * np.exp(-1j * w * A)).real
    F[0] *= 0.5
    out = np.empty(x.shape[0])
    step = max(1, (1 << 21) // N)
    for lo in range(0, x.shape[0], step):
        xs = x[lo:lo + step]
        u = np.minimum(B, -xs)  # integrate over X in [A, u]
        valid = u > A
        uu = np.where(valid, u, A)[:, None]
        arg_u = w[None, :] * (uu - A)
        eu = np.exp(uu)
        ea = np.exp(A)
        with np.errstate(divide="ignore", invalid="ignore"):
            psi = np.where(k[None, :] == 0, uu - A, np.sin(arg_u) / np.where(w == 0, 1, w)[None, :])
        chi = (np.cos(arg_u) * eu - ea + w[None, :] * np.sin(arg_u) * eu) / (1 + w[None, :] ** 2)
        V = 2.0 / (B - A) * K * (psi - np.exp(xs)[:, None] * chi)
        V[~valid] = 0.0
        out[lo:lo + step] = V @ F
    return out


def _cos_call(model: LevyModel1D, tau: float, s: np.ndarray, K: float, L: float = 12.0,
              tol: float = 1e-13, n_max: int = 1 << 14):
    c = tau * model.cumulants(4)
    width = L * math.sqrt(max(c[1], 0.0) + math.sqrt(abs(c[3])))
    a, b = _strip(model)
    if b <= 1:
        raise DampingFailure("the call needs a finite first exponential moment")
    A, B = c[0] - width, c[0] + width
    x = np.log(s / K)
    N = 64
    prev = _cos_puts(model, tau, x, K, N, A, B)
    while True:
        N *= 2
        cur = _cos_puts(model, tau, x, K, N, A, B)
        diff = np.abs(cur - prev)
        if diff.max() <= tol * max(1.0, K) or N >= n_max:
            break
        prev = cur
    tail = K * _chernoff_tail(model, tau, A, B)
    fwd = s * np.exp(tau * model.cumulant(1.0).real)
    call = cur + fwd - K
    return call, diff + tail + 4 * np.finfo(float).eps * np.maximum(1.0, fwd), N


def price_fourier_1d(model: LevyModel1D, spec: PayoffSpec, tau: float, s_grid) -> OracleResult:
    """Price on a grid of spots via the cosine expansion of the law of X_tau.

    Butterflies are priced as a combination of three calls.
    """
    if isinstance(model, LevyModelD):
        if model.d != 1:
            raise ValueError("price_fourier_1d needs a univariate model")
        model = model.marginal(0)
    s = np.atleast_1d(np.asarray(s_grid, dtype=float))
    if tau == 0:
        return OracleResult(spec.evaluate(s), np.zeros_like(s), "Analytic")
    if spec.kind == "Constant":
        return OracleResult(np.full(s.shape, spec.value), np.zeros_like(s), "Analytic")
    if spec.kind == "Call":
        legs = [(1.0, spec.K)]
    elif spec.kind == "Butterfly":
        w1, w2 = spec.butterfly_weights
        legs = [(1.0, spec.K1), (-w1, spec.K), (w2, spec.K2)]
    else:
        raise ValueError(f"{spec.kind} is not a univariate payoff")
    val = np.zeros_like(s)
    err = np.zeros_like(s)
    Ns = []
    for wt, K in legs:
        v, e, N = _cos_call(model, tau, s, K)
        val += wt * v
        err += abs(wt) * e
        Ns.append(N)
    return OracleResult(val, err, "Fourier", info={"terms": Ns})


# ---------------------------------------------------------------------------
# Fourier quadrature for L2 log payoffs
# ---------------------------------------------------------------------------

_GL_HI = np.polynomial.legendre.leggauss(24)
_GL_LO = np.polynomial.legendre.leggauss(16)


def fourier_radius(model, v0: LogPayoff, tau: float, k: int, rel_tol: float = 1e-17,
                   r_max: float = 2.0**14):
    """Truncation radius R and tail estimate for int |xi|^k e^{-tau Re psi} |v0_hat|."""
    if not isinstance(model, LevyModel1D):
        raise TypeError("fourier_radius expects a univariate model")
    r = np.concatenate([[0.0], np.geomspace(1e-2, r_max, 400)])
    with np.errstate(over="ignore", invalid="ignore"):
        env = r**k * np.exp(-tau * symbol(model, r).real) * v0.envelope(r)
    env = np.nan_to_num(env)
    peak = env.max()
    if peak == 0:
        return 1.0, 0.0
    small = env < rel_tol * peak
    if not small[-1]:
        raise SectorViolation("exp(-tau Re psi) does not damp the integrand on the truncation range")
    # first grid index after which the envelope stays below tolerance
    last_big = np.nonzero(~small)[0].max()
    i = last_big + 1
    R = float(r[i])
    widths = np.diff(r[i:])
    tail = 2 * float(np.sum(env[i:-1] * widths)) / np.sqrt(2 * np.pi)
    return R, tail


def _panels(R: float, h: float, gl):
    nodes, weights = gl
    n = max(1, int(math.ceil(2 * R / h)))
    edges = np.linspace(-R, R, n + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    xi = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    wt = (half[:, None] * weights[None, :]).ravel()
    return xi, wt


def derivative_fourier(model: LevyModel1D, v0: LogPayoff, tau: float, k: int, x_grid,
                       panel_width: float = 0.5) -> OracleResult:
    """D^k_x v(tau, x) = (2 pi)^{-1/2} int (i xi)^k e^{i x xi} e^{-tau psi(xi)} v0_hat(xi) dxi."""
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    R, tail = fourier_radius(model, v0, tau, k)
    vals = []
    for gl in (_GL_HI, _GL_LO):
        xi, wt = _panels(R, panel_width, gl)
        g = (1j * xi) ** k * np.exp(-tau * symbol(model, xi)) * v0.fourier(xi) * wt / np.sqrt(2 * np.pi)
        out = np.empty(x.shape[0])
        step = max(1, (1 << 22) // xi.shape[0])
        for lo in range(0, x.shape[0], step):
            out[lo:lo + step] = (np.exp(1j * np.outer(x[lo:lo + step], xi)) @ g).real
        vals.append(out)
    disc = np.abs(vals[0] - vals[1])
    scale = float(np.sum(np.abs(g)))  # rounding floor of the sum
    err = disc + tail + 64 * np.finfo(float).eps * scale
    return OracleResult(vals[0], err, "Fourier", info={"R": R, "tail": tail})


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def payoff_on_samples(spec: PayoffSpec, s: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """phi(s_p * exp(X_k)) as a (P, n) array for spots s (P, d) and increments X (n, d)."""
    E = np.exp(Y)
    k = spec.kind
    if k == "Constant":
        return np.full((s.shape[0], Y.shape[0]), spec.value)
    if k == "BasketCall":
        wE = E * np.asarray(spec.weights)[None, :]
        return np.maximum(s @ wE.T - spec.K, 0.0)
    if k in ("Call", "Butterfly"):
        return spec.evaluate(np.multiply.outer(s[:, 0], E[:, 0]).ravel()).reshape(s.shape[0], -1)
    if k == "SeparableCalls":
        out = np.zeros((s.shape[0], Y.shape[0]))
        for i, wi in enumerate(spec.weights):
            out += wi * np.maximum(np.multiply.outer(s[:, i], E[:, i]) - spec.K, 0.0)
        return out
    if k == "CallOnMax":
        m = np.multiply.outer(s[:, 0], E[:, 0])
        for i in range(1, s.shape[1]):
            np.maximum(m, np.multiply.outer(s[:, i], E[:, i]), out=m)
        return np.maximum(m - spec.K, 0.0)
    raise ValueError(k)


def mc_blocks(n: int, block: int = MC_BLOCK) -> list[int]:
    return [min(block, n - lo) for lo in range(0, n, block)]


def price_mc(model, spec: PayoffSpec, tau: float, s, n: int, seed: int,
             block: int = MC_BLOCK, stream: tuple = ()) -> OracleResult:
    """Monte Carlo price at one spot (d,) or a grid (P, d) with common random numbers.

    Block b draws from rng_stream(seed, *stream, b); per-block sums are combined in block order.
    """
    if isinstance(model, LevyModel1D):
        model = model.to_multivariate()
    if not model.simulable:
        raise NotSimulable("Monte Carlo needs a simulable model")
    if n < 100:
        raise ValueError("n must be at least 100")
    d = model.d
    s = np.asarray(s, dtype=float)
    single = s.ndim <= 1 and (s.size == d)
    S = s.reshape(-1, d)
    sums = []
    sq = []
    for b, m in enumerate(mc_blocks(n, block)):
        Y = sample_increments(model, tau, m, rng_stream(seed, *stream, b))
        V = payoff_on_samples(spec, S, Y)
        sums.append(V.sum(axis=1))
        sq.append((V * V).sum(axis=1))
    tot = np.sum(np.array(sums), axis=0)
    tot2 = np.sum(np.array(sq), axis=0)
    mean = tot / n
    var = np.maximum(tot2 / n - mean * mean, 0.0) * n / (n - 1)
    se = np.sqrt(var / n)
    half = 3 * se
    if single:
        mean, half, se = mean[0], half[0], se[0]
    return OracleResult(mean, half, "MonteCarlo", confidence=half, n=n, seed=seed,
                        info={"se": se, "block": block, "blocks": len(mc_blocks(n, block)), "threads": 1})
