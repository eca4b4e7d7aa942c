"""Taylor coefficients of prices in log coordinates, their summability and sparse partial sums."""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .errors import DimensionTooLarge, RhoTooSmall, SectorViolation
from .levy_models import LevyModel1D, SymbolSector, check_sector, symbol
from .payoffs import LogPayoff
from .relu_net import (ReluNetwork, compose, constant_net, identity_net, linear_net, metrics,
                       product_error, product_net, stack)

MAX_DIM = 3
MAX_ORDER = 12
_GL_HI = np.polynomial.legendre.leggauss(24)
_GL_LO = np.polynomial.legendre.leggauss(16)


def tau0(d: int, rho: float, q: float, C1: float) -> float:
    """Smallest horizon with q-summable Taylor coefficients: d^{2 rho/q} / (2 rho C1)."""
    if not 0 < q <= 1:
        raise ValueError("q must lie in (0, 1]")
    return d ** (2 * rho / q) / (2 * rho * C1)


def _rhos(sector: SymbolSector, d: int) -> np.ndarray:
    if sector.rho_vec is not None:
        r = np.asarray(sector.rho_vec, dtype=float)
        if r.shape != (d,):
            raise ValueError(f"rho_vec has length {r.size}, expected {d}")
        return r
    return np.full(d, float(sector.rho))


def rho_prime(sector: SymbolSector, d: int) -> float:
    rho = float(np.min(_rhos(sector, d)))
    if rho <= 0.5:
        raise RhoTooSmall(f"coefficient bounds need rho > 1/2, got {rho}")
    return 1.0 - 1.0 / (2.0 * rho)


def b_sequence(tau: float, sector: SymbolSector, d: int) -> np.ndarray:
    """b_j = (2 rho_j tau C1)^{-1/(2 rho_j rho')}."""
    rp = rho_prime(sector, d)
    r = _rhos(sector, d)
    return (2 * r * tau * sector.C1) ** (-1.0 / (2 * r * rp))


def coeff_bound(nu, tau: float, sector: SymbolSector, v0hat_l1: float) -> float:
    """(2 pi)^{-d/2} ||v0_hat||_{L1} (b^nu / nu!)^{rho'}."""
    nu = np.atleast_1d(np.asarray(nu, dtype=int))
    d = nu.size
    b = b_sequence(tau, sector, d)
    rp = rho_prime(sector, d)
    log_t = float(np.sum(nu * np.log(b)) - sum(math.lgamma(k + 1) for k in nu))
    return (2 * math.pi) ** (-d / 2) * v0hat_l1 * math.exp(rp * log_t)


def _bounds_for(indices: np.ndarray, tau: float, sector: SymbolSector, v0hat_l1: float) -> np.ndarray:
    d = indices.shape[1]
    b = b_sequence(tau, sector, d)
    rp = rho_prime(sector, d)
    log_t = indices @ np.log(b) - np.sum(gammaln(indices + 1), axis=1)
    return (2 * math.pi) ** (-d / 2) * v0hat_l1 * np.exp(rp * log_t)


def total_degree_set(d: int, max_order: int) -> np.ndarray:
    """All nu in N_0^d with |nu|_1 <= max_order, ordered by degree then lexicographically."""
    out = [nu for nu in itertools.product(range(max_order + 1), repeat=d) if sum(nu) <= max_order]
    out.sort(key=lambda nu: (sum(nu), tuple(-k for k in nu)))
    return np.array(out, dtype=int).reshape(-1, d)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


def _psi_rows(model, Xi: np.ndarray) -> np.ndarray:
    if isinstance(model, LevyModel1D):
        return symbol(model, Xi[:, 0])
    return symbol(model, Xi)


def _nodes_1d(R: float, h: float, gl):
    nodes, weights = gl
    n = max(1, int(math.ceil(2 * R / h)))
    edges = np.linspace(-R, R, n + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    return (mid[:, None] + half[:, None] * nodes).ravel(), (half[:, None] * weights).ravel()


def _lower_rate(sector: SymbolSector, d: int):
    """(rho, scale) with Re psi(xi) >= C1 (|xi| / scale)^{2 rho} outside the unit cube."""
    if sector.rho_vec is None:
        return float(sector.rho), 1.0
    return float(np.min(sector.rho_vec)), math.sqrt(d)


def _radial_tail(v0: LogPayoff, tau: float, sector: SymbolSector, d: int, k: int, R: float) -> float:
    """(2 pi)^{-d/2} int_{|xi|>R} |xi|^k exp(-tau C1 (|xi|/s)^{2 rho}) env(|xi|) dxi."""
    rho, s = _lower_rate(sector, d)
    area = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    f = lambda r: r ** (d - 1 + k) * math.exp(-tau * sector.C1 * (r / s) ** (2 * rho)) * float(v0.envelope(r))
    val = integrate.quad(f, R, np.inf, epsabs=1e-300, epsrel=1e-8, limit=200)[0]
    return (2 * math.pi) ** (-d / 2) * area * val


def quadrature_radius(v0: LogPayoff, tau: float, sector: SymbolSector, d: int, kmax: int,
                      rel_tol: float = 1e-17) -> float:
    """Box half-width R beyond which every order-k integrand envelope (k <= kmax) is negligible."""
    rho, s = _lower_rate(sector, d)
    r = np.linspace(0, 200, 40001)[1:]
    R = 1.0
    with np.errstate(over="ignore", under="ignore"):
        for k in range(kmax + 1):
            env = r ** (d - 1 + k) * np.exp(-tau * sector.C1 * (r / s) ** (2 * rho)) * v0.envelope(r)
            peak = env.max()
            big = np.nonzero(env >= rel_tol * peak)[0]
            R = max(R, float(r[big.max()]))
    return R


def _tensor_integrals(model, v0: LogPayoff, tau: float, d: int, R: float, h: float, gl,
                      powers: int, x: Optional[np.ndarray] = None):
    """Either monomial moment tensors or point values of the inverse transform.

    With x None returns T[nu] = (2 pi)^{-d/2} int (i xi)^nu e^{-tau psi} v0_hat dxi for nu_j <= powers.
    Otherwise returns the inverse transform at the rows of x.
    """
    g1, w1 = _nodes_1d(R, h, gl)
    grids = np.meshgrid(*([g1] * d), indexing="ij")
    Xi = np.stack([g.ravel() for g in grids], axis=1)
    G = np.exp(-tau * _psi_rows(model, Xi)) * v0.fourier(Xi if d > 1 else Xi[:, 0])
    W = np.ones(1)
    for _ in range(d):
        W = np.multiply.outer(W, w1)
    G = (G * W.ravel()).reshape([g1.size] * d) * (2 * math.pi) ** (-d / 2)
    if x is None:
        P = (1j * g1)[None, :] ** np.arange(powers + 1)[:, None]
        T = G
        for _ in range(d):
            T = np.tensordot(P, T, axes=([1], [0]))
            T = np.moveaxis(T, 0, -1)
        return T
    out = np.empty(x.shape[0])
    flat = G.ravel()
    step = max(1, (1 << 22) // flat.size)
    for lo in range(0, x.shape[0], step):
        ph = np.exp(1j * (x[lo:lo + step] @ Xi.T))
        out[lo:lo + step] = (ph @ flat).real
    return out


def _check_model(model, v0: LogPayoff, sector: SymbolSector, d: int, rng_seed: int = 7):
    if d > MAX_DIM:
        raise DimensionTooLarge(f"coefficients are computed for d <= {MAX_DIM}, got d = {d}")
    if v0.d != d:
        raise ValueError(f"payoff dimension {v0.d} does not match model dimension {d}")
    rng = np.random.default_rng(rng_seed)
    probe = np.concatenate([rng.normal(size=(400, d)) * s for s in (0.3, 3.0, 30.0)])
    if d == 1:
        probe = probe[:, 0]
    if not check_sector(model, sector, probe).holds:
        raise SectorViolation("declared sector lower bound fails for this model")


def fourier_value(model, v0: LogPayoff, tau: float, x, sector: SymbolSector, h: float = 1.0):
    """v(tau, x) on points x of shape (P, d) with an error estimate (rule difference + tail)."""
    d = v0.d
    x = np.asarray(x, dtype=float).reshape(-1, d)
    R = quadrature_radius(v0, tau, sector, d, 0)
    hi = _tensor_integrals(model, v0, tau, d, R, h, _GL_HI, 0, x)
    lo = _tensor_integrals(model, v0, tau, d, R, h, _GL_LO, 0, x)
    tail = _radial_tail(v0, tau, sector, d, 0, R)
    return hi, np.abs(hi - lo) + tail + 1e-15 * np.max(np.abs(hi))


# ---------------------------------------------------------------------------
# expansion
# ---------------------------------------------------------------------------


@dataclass
class ChaosExpansion:
    d: int
    tau: float
    indices: np.ndarray
    t: np.ndarray
    t_error: np.ndarray
    bounds: np.ndarray
    rho_prime: float
    b: np.ndarray
    v0hat_l1: float
    sector: SymbolSector
    model: object = field(repr=False)
    v0: LogPayoff = field(repr=False)

    def lookup(self) -> dict:
        return {tuple(int(k) for k in nu): i for i, nu in enumerate(self.indices)}

    def to_records(self) -> list:
        return [{"nu": [int(k) for k in nu], "t": float(t), "bound": float(b)}
                for nu, t, b in zip(self.indices, self.t, self.bounds)]


def taylor_coeffs(model, v0: LogPayoff, tau: float, sector: SymbolSector,
                  candidates: Optional[np.ndarray] = None, max_order: int = 8, q: float = 1.0,
                  h: float = 1.0) -> ChaosExpansion:
    """t_nu = (1/nu!) d^nu_x v(tau, x) at x = 0 for every candidate index.

    Computed as (2 pi)^{-d/2} int (i xi)^nu e^{-tau psi} v0_hat dxi / nu! by tensor
    Gauss-Legendre quadrature; t_error is the 24-vs-16 node difference plus a
    certified bound on the integral outside the quadrature box.
    """
    d = v0.d
    _check_model(model, v0, sector, d)
    if candidates is None:
        candidates = total_degree_set(d, max_order)
    candidates = np.asarray(candidates, dtype=int).reshape(-1, d)
    K = int(candidates.sum(axis=1).max())
    if K > MAX_ORDER:
        raise ValueError(f"coefficient orders above {MAX_ORDER} are not supported")
    t0 = tau0(d, float(np.min(_rhos(sector, d))), q, sector.C1)
    if tau <= t0:
        warnings.warn(f"tau = {tau} does not exceed tau0 = {t0}; coefficients need not be q-summable")
    R = quadrature_radius(v0, tau, sector, d, K)
    kmax = int(candidates.max())
    hi = _tensor_integrals(model, v0, tau, d, R, h, _GL_HI, kmax)
    lo = _tensor_integrals(model, v0, tau, d, R, h, _GL_LO, kmax)
    idx = tuple(candidates.T)
    fact = np.exp(np.sum(gammaln(candidates + 1), axis=1))
    t = hi[idx].real / fact
    tails = np.array([_radial_tail(v0, tau, sector, d, k, R) for k in range(K + 1)])
    err = np.abs(hi[idx] - lo[idx]) / fact + tails[candidates.sum(axis=1)] / fact
    err += 1e-15 * np.abs(hi[idx]) / fact
    l1 = float(v0.fourier_l1())
    return ChaosExpansion(d, tau, candidates, t, err, _bounds_for(candidates, tau, sector, l1),
                          rho_prime(sector, d), b_sequence(tau, sector, d), l1, sector, model, v0)


# ---------------------------------------------------------------------------
# index sets
# ---------------------------------------------------------------------------


def index_sequence(indices: np.ndarray, bounds: np.ndarray, n_max: int, rtol: float = 1e-12) -> list:
    """Greedy growth of a downward closed set by largest bound among admissible indices.

    Indices whose bounds tie (relative rtol) are added as one group, so the
    prefix sets respect any symmetry of the bounds. Returns the list of groups.
    """
    indices = np.asarray(indices, dtype=int)
    d = indices.shape[1]
    value = {tuple(int(k) for k in nu): float(b) for nu, b in zip(indices, bounds)}
    zero = (0,) * d
    if zero not in value:
        raise ValueError("the candidate set must contain the zero index")
    chosen = {zero}
    groups = [[zero]]
    frontier = set(_children(zero, value))
    size = 1
    while size < n_max and frontier:
        admissible = [nu for nu in frontier if all(p in chosen for p in _parents(nu))]
        if not admissible:
            break
        top = max(value[nu] for nu in admissible)
        group = sorted((nu for nu in admissible if value[nu] >= top * (1 - rtol)), reverse=True)
        groups.append(group)
        size += len(group)
        for nu in group:
            chosen.add(nu)
            frontier.discard(nu)
            frontier.update(c for c in _children(nu, value) if c not in chosen)
    return groups


def _parents(nu: tuple):
    for j, k in enumerate(nu):
        if k > 0:
            yield nu[:j] + (k - 1,) + nu[j + 1:]


def _children(nu: tuple, value: dict):
    for j in range(len(nu)):
        c = nu[:j] + (nu[j] + 1,) + nu[j + 1:]
        if c in value:
            yield c


def build_index_set(indices: np.ndarray, bounds: np.ndarray, n: int,
                    groups: Optional[list] = None) -> list:
    """Lambda_n: the longest prefix of the greedy groups with at most n indices."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if groups is None:
        groups = index_sequence(indices, bounds, n)
    out = []
    for g in groups:
        if len(out) + len(g) > n:
            break
        out.extend(g)
    return out


def is_downward_closed(S) -> bool:
    S = set(map(tuple, S))
    return all(p in S for nu in S for p in _parents(nu))


# ---------------------------------------------------------------------------
# partial sums, errors and summability
# ---------------------------------------------------------------------------


def _monomials(x: np.ndarray, nus: np.ndarray) -> np.ndarray:
    return np.prod(x[:, None, :] ** nus[None, :, :], axis=2)


def remainder_bound(exp: ChaosExpansion, extra: int = 80) -> float:
    """Sum of coefficient bounds over indices outside the candidate set."""
    d = exp.d
    kmax = int(exp.indices.sum(axis=1).max()) + extra
    k = np.arange(kmax + 1)
    logs = [exp.rho_prime * (k * math.log(bj) - gammaln(k + 1)) for bj in exp.b]
    total = np.zeros([kmax + 1] * d)
    for j in range(d):
        shape = [1] * d
        shape[j] = kmax + 1
        total = total + logs[j].reshape(shape)
    terms = (2 * math.pi) ** (-d / 2) * exp.v0hat_l1 * np.exp(total)
    mask = np.ones(terms.shape, dtype=bool)
    mask[tuple(exp.indices.T)] = False
    return float(np.sum(terms[mask]))


@dataclass
class SparseRow:
    n: int
    size: int
    sup_error: float
    tail_bound: float
    oracle_error: float


def sparse_eval_and_error(exp: ChaosExpansion, n_list: Sequence[int], x_grid,
                          oracle: Optional[tuple] = None) -> list:
    """Sup error of sum_{nu in Lambda_n} t_nu x^nu against v(tau, x) on the grid.

    tail_bound sums the coefficient bounds outside Lambda_n, both over the
    remaining candidates and beyond them. oracle_error also carries the
    quadrature error of the coefficients kept.
    """
    x = np.asarray(x_grid, dtype=float).reshape(-1, exp.d)
    if oracle is None:
        oracle = fourier_value(exp.model, exp.v0, exp.tau, x, exp.sector)
    ref, ref_err = oracle
    look = exp.lookup()
    beyond = remainder_bound(exp)
    groups = index_sequence(exp.indices, exp.bounds, max(n_list))
    rows = []
    for n in n_list:
        lam = build_index_set(exp.indices, exp.bounds, n, groups)
        sel = np.array([look[nu] for nu in lam])
        mon = _monomials(x, exp.indices[sel])
        approx = mon @ exp.t[sel]
        rest = np.ones(exp.indices.shape[0], dtype=bool)
        rest[sel] = False
        tail = float(np.sum(exp.bounds[rest])) + beyond
        oerr = float(np.max(ref_err)) + float(np.sum(exp.t_error[sel]))
        rows.append(SparseRow(int(n), len(lam), float(np.max(np.abs(approx - ref))), tail, oerr))
    return rows


@dataclass
class SummabilityCertificate:
    lq_norm_bound: float
    finite: bool
    ratio: float


def summability_certificate(d: int, tau: float, sector: SymbolSector, v0hat_l1: float,
                            q: float) -> SummabilityCertificate:
    """Bound on sum_nu |t_nu|^q; finite iff d (2 rho tau C1)^{-q/(2 rho)} < 1."""
    if not 0 < q <= 1:
        raise ValueError("q must lie in (0, 1]")
    rho = float(np.min(_rhos(sector, d)))
    ratio = d * (2 * rho * tau * sector.C1) ** (-q / (2 * rho))
    if ratio >= 1:
        return SummabilityCertificate(math.inf, False, ratio)
    val = v0hat_l1**q * (2 * math.pi) ** (-d * q / 2) / (1 - ratio)
    return SummabilityCertificate(val, True, ratio)


# ---------------------------------------------------------------------------
# ReLU emulation of a sparse polynomial on [-1, 1]^d
# ---------------------------------------------------------------------------


@dataclass
class SparseNet:
    net: ReluNetwork
    M: int
    L: int
    m: int


def _select(rows: list, width: int) -> np.ndarray:
    S = np.zeros((len(rows), width))
    for i, j in enumerate(rows):
        S[i, j] = 1.0
    return S


def sparse_to_relu(exp: ChaosExpansion, lam: Sequence[tuple], delta_net: float) -> SparseNet:
    """Network realizing sum_{nu in lam} t_nu x^nu on [-1, 1]^d within delta_net.

    Monomials of degree s are products of a degree s-1 parent with one
    coordinate; each product costs one product_net with parameter m.
    """
    d = exp.d
    if d > MAX_DIM:
        raise DimensionTooLarge(f"sparse emulation is implemented for d <= {MAX_DIM}")
    lam = [tuple(int(k) for k in nu) for nu in lam]
    if not is_downward_closed(lam):
        raise ValueError("index set must be downward closed")
    look = exp.lookup()
    coef = {nu: float(exp.t[look[nu]]) for nu in lam}
    zero = (0,) * d
    c0 = coef.get(zero, 0.0)
    K = max(sum(nu) for nu in lam)
    if K == 0:
        return _finish(constant_net(c0, d), 0)
    # live vector: the d coordinates followed by computed monomials of degree >= 2
    live = [tuple(int(i == j) for i in range(d)) for j in range(d)]
    coef_l1 = sum(abs(c) for nu, c in coef.items() if sum(nu) >= 2)
    m = 1
    while coef_l1 * K * (1 + 2.0**-m) ** K * product_error(m) > delta_net:
        m += 1
    net = identity_net(d, 1)
    for s in range(2, K + 1):
        new = [nu for nu in lam if sum(nu) == s]
        if not new:
            continue
        V = len(live)
        pos = {nu: i for i, nu in enumerate(live)}
        sel = []
        for nu in new:
            j = max(i for i, k in enumerate(nu) if k > 0)
            parent = nu[:j] + (nu[j] - 1,) + nu[j + 1:]
            sel += [pos[parent], j]
        sel += list(range(V))
        stage = stack([product_net(m)] * len(new) + [identity_net(V, m + 2)])
        stage = compose(stage, linear_net(_select(sel, V)))
        # outputs: products then the old live vector; reorder to old live followed by new
        order = list(range(len(new), len(new) + V)) + list(range(len(new)))
        stage = compose(linear_net(_select(order, len(new) + V)), stage)
        net = compose(stage, net)
        live += new
    w = np.array([[coef.get(nu, 0.0) for nu in live]])
    return _finish(compose(linear_net(w, [c0]), net), m)


def _finish(net: ReluNetwork, m: int) -> SparseNet:
    met = metrics(net)
    return SparseNet(net, met.M, met.L, m)


def sparse_poly_eval(exp: ChaosExpansion, lam: Sequence[tuple], x) -> np.ndarray:
    look = exp.lookup()
    sel = np.array([look[tuple(nu)] for nu in lam])
    x = np.asarray(x, dtype=float).reshape(-1, exp.d)
    return _monomials(x, exp.indices[sel]) @ exp.t[sel]
