"""Barron norms and two-layer ReLU fits.

Fourier transforms use the unitary convention of levynet.payoffs.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, linalg, optimize
from scipy.stats import qmc

from .errors import DimensionTooLarge, Diverges, SingularFit
from .levy_models import LevyModel1D, symbol
from .relu_net import ReluNetwork

_GL_HI = np.polynomial.legendre.leggauss(24)
_GL_LO = np.polynomial.legendre.leggauss(16)

N_POINTS = 100_000


@dataclass
class BarronFunction:
    """f on R^d given through |f_hat|; `f` (spatial values) is needed only for fitting.

    fhat takes (P,) for d = 1 and (P, d) otherwise. With `radial` set, fhat
    depends on |xi| only and `envelope(r)` may equal it.
    """

    d: int
    fhat: Callable
    envelope: Callable
    f: Optional[Callable] = None
    radial: bool = False
    exact_norm: Optional[float] = None


def gaussian_function(d: int = 1, width: float = 1.0, amplitude: float = 1.0) -> BarronFunction:
    """f(x) = amplitude exp(-|x|^2 / (2 width^2)), f_hat(xi) = amplitude width^d exp(-width^2 |xi|^2 / 2)."""
    c = amplitude * width**d

    def fhat(xi):
        xi = np.asarray(xi, dtype=float)
        r2 = xi * xi if d == 1 else np.sum(xi * xi, axis=-1)
        return c * np.exp(-0.5 * width**2 * r2)

    def env(r):
        r = np.asarray(r, dtype=float)
        return c * np.exp(-0.5 * width**2 * r * r)

    def f(x):
        x = np.asarray(x, dtype=float)
        r2 = x * x if d == 1 else np.sum(x * x, axis=-1)
        return amplitude * np.exp(-0.5 * r2 / width**2)

    area = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    exact = c * area * 2 ** ((d - 1) / 2) * math.gamma((d + 1) / 2) / width ** (d + 1)
    return BarronFunction(d, fhat, env, f, radial=True, exact_norm=exact)


def _sphere_area(d: int) -> float:
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


def _check_decay(g: Callable, d: int):
    """Reject integrands r^d env(r) whose tail mass does not vanish."""
    probe = np.array([1e4, 1e6, 1e8])
    with np.errstate(over="ignore", invalid="ignore"):
        tail = probe * probe**d * np.asarray(g(probe), dtype=float)
    base = abs(integrate.quad(lambda r: r**d * float(g(np.array([r]))[0]), 0, 1)[0]) + 1e-300
    if not np.all(np.isfinite(tail)) or tail[-1] > 1e-6 * max(base, 1.0) or tail[-1] > tail[0] > 0:
        raise Diverges("|xi| |f_hat(xi)| is not integrable according to its envelope")


def _radial_integral(h: Callable, rtol: float = 1e-10) -> tuple[float, float]:
    """int_0^inf h(r) dr split at geometric breakpoints."""
    edges = [0.0, 0.5, 1, 2, 4, 8, 16, 32, 64, 128, np.inf]
    val = err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(edges[:-1], edges[1:]):
            v, e = integrate.quad(h, a, b, epsabs=0, epsrel=rtol, limit=400)
            val += v
            err += e
    return val, err


def _radial_nodes(R: float, gl) -> tuple[np.ndarray, np.ndarray]:
    nodes, w = gl
    n = max(1, int(math.ceil(R / 0.5)))
    edges = np.linspace(0.0, R, n + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    return (mid[:, None] + half[:, None] * nodes).ravel(), (half[:, None] * w).ravel()


def _sphere_rule(d: int, n_ang: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit directions and weights integrating smooth functions on S^{d-1} (d = 2, 3)."""
    phi = 2 * math.pi * np.arange(n_ang) / n_ang
    if d == 2:
        return np.stack([np.cos(phi), np.sin(phi)], axis=1), np.full(n_ang, 2 * math.pi / n_ang)
    z, wz = np.polynomial.legendre.leggauss(n_ang // 2)
    rho = np.sqrt(1 - z * z)
    U = np.stack([np.multiply.outer(rho, np.cos(phi)), np.multiply.outer(rho, np.sin(phi)),
                  np.repeat(z[:, None], n_ang, axis=1)], axis=-1).reshape(-1, 3)
    return U, np.repeat(wz, n_ang) * (2 * math.pi / n_ang)


def _spherical_integral(h: Callable, d: int, envelope: Callable) -> tuple[float, float]:
    """int_{R^d} h over a ball sized by the envelope, in spherical coordinates (d = 2, 3).

    Along rays the integrand r^{d-1} h(r u) is smooth even though |xi| is not
    at the origin, so Gauss-Legendre in r with a periodic rule in angle
    converges fast. The error estimate compares two rules of different order.
    """
    if d > 3:
        raise DimensionTooLarge("non-radial Barron integrals are implemented for d <= 3")
    r = np.linspace(0, 400, 40001)
    env = r**d * envelope(r)
    big = np.nonzero(env >= 1e-17 * env.max())[0]
    R = float(r[big.max()]) + 1.0
    vals = []
    for gl, n_ang in ((_GL_HI, 384 if d == 2 else 64), (_GL_LO, 288 if d == 2 else 48)):
        rr, wr = _radial_nodes(R, gl)
        U, wu = _sphere_rule(d, n_ang)
        tot = 0.0
        step = max(1, (1 << 20) // U.shape[0])
        for i in range(0, rr.size, step):
            rs, ws = rr[i:i + step], wr[i:i + step]
            X = (rs[:, None, None] * U[None, :, :]).reshape(-1, d)
            vals_h = np.asarray(h(X), dtype=float).reshape(rs.size, U.shape[0])
            tot += float(np.sum((ws * rs ** (d - 1))[:, None] * vals_h * wu[None, :]))
        vals.append(tot)
    return vals[0], abs(vals[0] - vals[1])


def barron_norm(f: BarronFunction, rtol: float = 1e-6) -> float:
    """int |xi| |f_hat(xi)| dxi with relative error estimate at most rtol."""
    _check_decay(f.envelope, f.d)
    if f.d == 1 or f.radial:
        if f.d == 1:
            h = lambda r: r * (abs(float(f.fhat(np.array([r]))[0])) + abs(float(f.fhat(np.array([-r]))[0])))
            area = 1.0
        else:
            h = lambda r: r**f.d * abs(float(f.envelope(np.array([r]))[0]))
            area = _sphere_area(f.d)
        val, err = _radial_integral(h)
        val, err = area * val, area * err
    else:
        h = lambda X: np.linalg.norm(X, axis=1) * np.abs(f.fhat(X))
        val, err = _spherical_integral(h, f.d, f.envelope)
    if not math.isfinite(val) or err > rtol * max(abs(val), 1e-300) and val != 0:
        raise Diverges(f"quadrature did not converge (value {val}, error {err})")
    return float(val)


def evolved_norm(f: BarronFunction, model, tau: float, rtol: float = 1e-6) -> float:
    """Barron norm of xi -> exp(-tau Re psi(xi)) |f_hat(xi)|, never above barron_norm(f)."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    d = f.d
    if (d == 1) != isinstance(model, LevyModel1D) or (d > 1 and model.d != d):
        raise ValueError("model and function dimensions differ")
    _check_decay(f.envelope, d)
    if d == 1:
        def h(r):
            xi = np.array([r, -r])
            damp = np.exp(-tau * symbol(model, xi).real)
            return r * float(np.sum(damp * np.abs(f.fhat(xi))))
        val, err = _radial_integral(h)
    else:
        h = lambda X: np.linalg.norm(X, axis=1) * np.exp(-tau * symbol(model, X).real) * np.abs(f.fhat(X))
        val, err = _spherical_integral(h, d, f.envelope)
    if not math.isfinite(val) or (val != 0 and err > rtol * abs(val)):
        raise Diverges(f"quadrature did not converge (value {val}, error {err})")
    return float(val)


# ---------------------------------------------------------------------------
# two-layer fits
# ---------------------------------------------------------------------------


@dataclass
class TwoLayerFit:
    """R(net)(x) = (1/m) sum_i a_i relu(w_i . x + b_i) with l2pi_error on the sample points."""

    m: int
    method: str
    a: np.ndarray
    W: np.ndarray
    b: np.ndarray
    l2pi_error: float
    regularized: bool = False
    info: dict = field(default_factory=dict)

    @property
    def net(self) -> ReluNetwork:
        return ReluNetwork([(self.W, self.b), (self.a[None, :] / self.m, np.zeros(1))])


def sample_points(d: int, R: float, n: int, seed: int) -> np.ndarray:
    """n scrambled Sobol points, uniform on [-R, R]^d."""
    sob = qmc.Sobol(d, scramble=True, seed=np.random.default_rng([seed, 3]))
    u = sob.random_base2(int(math.ceil(math.log2(max(n, 2)))))[:n]
    return (2 * u - 1) * R


def _values(f, X: np.ndarray, d: int) -> np.ndarray:
    fun = f.f if isinstance(f, BarronFunction) else f
    return np.asarray(fun(X[:, 0] if d == 1 else X), dtype=float).reshape(-1)


def fit_two_layer(f, d: int, R: float, m: int, method: str = "Greedy", seed: int = 0,
                  n_points: int = N_POINTS, X: Optional[np.ndarray] = None) -> TwoLayerFit:
    """Fit (1/m) sum a_i relu(w_i . x + b_i) to f on [-R, R]^d under the uniform measure."""
    return fit_two_layer_path(f, d, R, [m], method, seed, n_points, X)[0]


def fit_two_layer_path(f, d: int, R: float, m_list: Sequence[int], method: str = "Greedy",
                       seed: int = 0, n_points: int = N_POINTS, X: Optional[np.ndarray] = None,
                       **kw) -> list:
    """Fits for every m in m_list; Greedy fits are nested, so errors are nonincreasing in m."""
    m_list = sorted(int(m) for m in m_list)
    if m_list[0] < 1:
        raise ValueError("m must be at least 1")
    if X is None:
        X = sample_points(d, R, n_points, seed)
    y = _values(f, X, d)
    if method == "Greedy":
        if d == 1:
            return _greedy_1d(X[:, 0], y, R, m_list, **kw)
        return _greedy_dictionary(X, y, R, m_list, seed, **kw)
    if method == "RandomFeatures":
        return [_random_features(X, y, R, m, seed) for m in m_list]
    raise ValueError(f"unknown method {method!r}")


def _rms(r: np.ndarray) -> float:
    return float(np.sqrt(np.mean(r * r)))


def _spline_units(t: np.ndarray, c: np.ndarray, R: float, m: int):
    """ReLU units reproducing the linear spline with coefficients c on knots [-R, t..., R]."""
    grid = np.concatenate([[-R], t, [R]])
    slopes = np.diff(c) / np.diff(grid)
    beta = c[0] / (2 * R)
    alpha = slopes[0] + beta
    kinks = np.diff(slopes)
    W = np.concatenate([[1.0, -1.0], np.ones(t.size)])
    b = np.concatenate([[R, R], -t])
    a = np.concatenate([[alpha, beta], kinks]) * m
    return W[:, None], b, a


def _lsq_linear_spline(xs: np.ndarray, ys: np.ndarray, grid: np.ndarray):
    """Least-squares linear spline on sorted breakpoints: node values and residual.

    The hat-basis normal equations are tridiagonal and assembled with bincount.
    """
    k = grid.size
    j = np.clip(np.searchsorted(grid, xs, side="right") - 1, 0, k - 2)
    th = (xs - grid[j]) / (grid[j + 1] - grid[j])
    u, v = 1 - th, th
    diag = np.bincount(j, u * u, k) + np.bincount(j + 1, v * v, k)
    off = np.bincount(j, u * v, k - 1)
    rhs = np.bincount(j, u * ys, k) + np.bincount(j + 1, v * ys, k)
    ab = np.zeros((2, k))
    ab[0, 1:] = off
    ab[1] = diag + 1e-14 * diag.max()  # pins nodes whose hats see no data
    c = linalg.solveh_banded(ab, rhs)
    return c, ys - (c[j] * u + c[j + 1] * v)


def _greedy_1d(x: np.ndarray, y: np.ndarray, R: float, m_list: list, pool_size: int = 8192,
               batch_frac: float = 1 / 32, refine_below: int = 32) -> list:
    """Knot selection by residual correlation followed by an exact least-squares refit.

    The span of relu(x + R), relu(R - x) and relu(x - t_k) on [-R, R] is the
    linear spline space with knots t_k, so the refit is a banded spline fit.
    A candidate knot t adds the hat function on its current interval, and
    candidates are scored by |<residual, hat>| / ||hat||. Knots are added in
    batches of about batch_frac times the current count; while fewer than
    refine_below knots are placed, each new knot is moved to the position that
    minimizes the refit residual within its pool cell.
    """
    order = np.argsort(x)
    xs, ys = x[order], y[order]
    pool = -R + 2 * R * (np.arange(pool_size) + 0.5) / pool_size
    cell = 2 * R / pool_size
    pos = np.searchsorted(xs, pool)

    def prefix(v):
        return np.concatenate([[0.0], np.cumsum(v)])

    P0, P1, P2 = prefix(np.ones_like(xs)), prefix(xs), prefix(xs * xs)
    used = np.zeros(pool_size, dtype=bool)
    knots = np.empty(0)
    out = []

    def refit(kn):
        return _lsq_linear_spline(xs, ys, np.concatenate([[-R], np.sort(kn), [R]]))

    @np.errstate(divide="ignore", invalid="ignore")
    def scores(r):
        grid = np.concatenate([[-R], knots, [R]])
        g = np.clip(np.searchsorted(grid, pool) - 1, 0, grid.size - 2)
        ka, kb = grid[g], grid[g + 1]
        ia, ib = np.searchsorted(xs, ka), np.searchsorted(xs, kb)
        R0, R1 = prefix(r), prefix(r * xs)
        left = ((R1[pos] - R1[ia]) - ka * (R0[pos] - R0[ia])) / (pool - ka)
        right = (kb * (R0[ib] - R0[pos]) - (R1[ib] - R1[pos])) / (kb - pool)
        nl = ((P2[pos] - P2[ia]) - 2 * ka * (P1[pos] - P1[ia]) + ka * ka * (P0[pos] - P0[ia])) / (pool - ka) ** 2
        nr = ((P2[ib] - P2[pos]) - 2 * kb * (P1[ib] - P1[pos]) + kb * kb * (P0[ib] - P0[pos])) / (kb - pool) ** 2
        sc = np.nan_to_num(np.abs(left + right) / np.sqrt(np.maximum(nl + nr, 1e-300)))
        sc[used] = -1.0
        return sc

    def polish(others, t0, lo, hi):
        """Position of one knot in (lo, hi) with the other knots fixed.

        The search uses the data between the second neighbours of (lo, hi);
        the move is kept only if the global residual decreases.
        """
        gap = 1e-9 * R
        lo, hi = lo + gap, hi - gap
        if hi <= lo:
            return t0
        below, above = others[others < lo], others[others > hi]
        wl = below[-2] if below.size > 1 else -R
        wr = above[1] if above.size > 1 else R
        ia, ib = np.searchsorted(xs, wl), np.searchsorted(xs, wr)
        inner = others[(others > wl) & (others < wr)]

        def obj(t):
            grid = np.sort(np.concatenate([[wl], inner, [t], [wr]]))
            return float(np.sum(_lsq_linear_spline(xs[ia:ib], ys[ia:ib], grid)[1] ** 2))

        res = optimize.minimize_scalar(obj, bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-14 * R})
        if res.fun >= obj(t0):
            return t0
        glob = lambda t: float(np.sum(refit(np.append(others, t))[1] ** 2))
        return float(res.x) if glob(res.x) < glob(t0) else t0

    def neighbours(kn, t0):
        left = kn[kn < t0]
        right = kn[kn > t0]
        return (left[-1] if left.size else -R), (right[0] if right.size else R)

    def sweep(kn):
        kn = kn.copy()
        for i in range(kn.size):
            others = np.delete(kn, i)
            lo, hi = neighbours(others, kn[i])
            kn[i] = polish(others, kn[i], lo, hi)
            kn = np.sort(kn)
        return kn

    if m_list[0] == 1:
        # a single unit: best of the two affine ramps by one-dimensional least squares
        best = None
        for w in (1.0, -1.0):
            phi = np.maximum(w * xs + R, 0)
            a = float(phi @ ys / (phi @ phi))
            err = _rms(ys - a * phi)
            if best is None or err < best[0]:
                best = (err, w, a)
        err, w, a = best
        out.append(TwoLayerFit(1, "Greedy", np.array([a]), np.array([[w]]), np.array([R]), err))
        m_list = m_list[1:]
    if not m_list:
        return out
    c, r = refit(knots)
    for m in m_list:
        target = m - 2
        while knots.size < target:
            score = scores(r)
            peaks = np.nonzero((score >= np.roll(score, 1)) & (score >= np.roll(score, -1)) & ~used)[0]
            if peaks.size == 0:
                peaks = np.nonzero(~used)[0]
            if peaks.size == 0 or not np.any(score[peaks] > 0):
                break
            batch = min(max(1, int(knots.size * batch_frac)), target - knots.size, peaks.size)
            pick = peaks[np.argsort(score[peaks])[::-1][:batch]]
            used[pick] = True
            new = pool[pick]
            refining = batch == 1 and knots.size < refine_below
            if refining:
                t0 = float(new[0])
                lo, hi = neighbours(knots, t0)
                new = np.array([polish(knots, t0, max(lo, t0 - cell), min(hi, t0 + cell))])
            knots = np.sort(np.concatenate([knots, new]))
            if refining and (knots.size == refine_below or knots.size == target):
                knots = sweep(knots)
            c, r = refit(knots)
        W, b, a = _spline_units(knots, c, R, m)
        pad = m - W.shape[0]
        if pad > 0:
            W = np.vstack([W, np.ones((pad, 1))])
            b = np.concatenate([b, np.full(pad, -R)])
            a = np.concatenate([a, np.zeros(pad)])
        out.append(TwoLayerFit(m, "Greedy", a, W, b, _rms(r), info={"knots": int(knots.size)}))
    return out


def _directions(d: int, n: int, rng) -> np.ndarray:
    v = rng.normal(size=(n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _solve(Phi: np.ndarray, y: np.ndarray):
    coef, _, rank, sv = linalg.lstsq(Phi, y, lapack_driver="gelsd")
    k = Phi.shape[1]
    if rank < k or (sv.size and sv[-1] < 1e-12 * sv[0]):
        lam = 1e-10 * float(np.sum(sv**2)) / max(k, 1)
        coef = linalg.solve(Phi.T @ Phi + lam * np.eye(k), Phi.T @ y, assume_a="pos")
        if not np.all(np.isfinite(coef)):
            raise SingularFit("regularized least squares failed")
        return coef, True
    return coef, False


def _greedy_dictionary(X: np.ndarray, y: np.ndarray, R: float, m_list: list, seed: int,
                       n_dirs: int = 64, n_bias: int = 32) -> list:
    """Orthogonal matching pursuit over a fixed dictionary of ReLU ridge functions."""
    d = X.shape[1]
    rng = np.random.default_rng([seed, 4])
    dirs = _directions(d, n_dirs, rng)
    rad = R * math.sqrt(d)
    biases = -rad + 2 * rad * (np.arange(n_bias) + 0.5) / n_bias
    Wd = np.repeat(dirs, n_bias, axis=0)
    bd = np.tile(biases, n_dirs)
    chosen: list = []
    r = y.copy()
    coef = np.zeros(0)
    reg = False
    out = []
    for m in m_list:
        while len(chosen) < m:
            best, best_s = -1, -1.0
            for lo in range(0, Wd.shape[0], 512):
                F = np.maximum(X @ Wd[lo:lo + 512].T + bd[lo:lo + 512], 0.0)
                nrm = np.sqrt(np.sum(F * F, axis=0)) + 1e-300
                s = np.abs(r @ F) / nrm
                s[[i - lo for i in chosen if lo <= i < lo + 512]] = -1.0
                j = int(np.argmax(s))
                if s[j] > best_s:
                    best, best_s = lo + j, float(s[j])
            chosen.append(best)
            Phi = np.maximum(X @ Wd[chosen].T + bd[chosen], 0.0)
            coef, flag = _solve(Phi, y)
            reg = reg or flag
            r = y - Phi @ coef
        out.append(TwoLayerFit(m, "Greedy", coef * m, Wd[chosen].copy(), bd[chosen].copy(), _rms(r), reg))
    return out


def _random_features(X: np.ndarray, y: np.ndarray, R: float, m: int, seed: int) -> TwoLayerFit:
    """Fixed proposal (uniform directions, uniform offsets) and least squares for a."""
    d = X.shape[1]
    rng = np.random.default_rng([seed, 5, m])
    W = _directions(d, m, rng) if d > 1 else rng.choice([-1.0, 1.0], size=(m, 1))
    b = rng.uniform(-R * math.sqrt(d), R * math.sqrt(d), size=m)
    n_fit = min(X.shape[0], max(20 * m, 4096))
    Phi = np.maximum(X[:n_fit] @ W.T + b, 0.0)
    coef, reg = _solve(Phi, y[:n_fit])
    pred = np.empty_like(y)
    step = max(1, (1 << 22) // m)
    for lo in range(0, X.shape[0], step):
        pred[lo:lo + step] = np.maximum(X[lo:lo + step] @ W.T + b, 0.0) @ coef
    resid = y - pred
    return TwoLayerFit(m, "RandomFeatures", coef * m, W, b, _rms(resid), reg)


def barron_bound(norm: float, R: float, m: int) -> float:
    """max(1, R) m^{-1/2} ||f||_B."""
    return max(1.0, R) * norm / math.sqrt(m)
