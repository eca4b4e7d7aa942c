"""Gevrey bounds, parabolic smoothing constants and Chebyshev approximation of prices."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.fft import dct

from .errors import SectorViolation
from .levy_models import LevyModel1D, SymbolSector, check_sector, symbol
from .payoffs import LogPayoff, PayoffSpec
from .pricing_oracle import fourier_radius, price_fourier_1d, _panels, _GL_HI
from .relu_net import ReluNetwork, compose, linear_net, metrics, polynomial_emulator


def max_exp_opt(m: float, kappa: float, mu: float) -> float:
    """max_{eta >= 0} eta^m exp(-kappa eta^mu) = (m / (kappa mu e))^{m/mu}."""
    if m == 0:
        return 1.0
    return float((m / (kappa * mu * math.e)) ** (m / mu))


def gevrey_delta(rho: float) -> float:
    return 1.0 / min(1.0, 2.0 * rho)


def A_tau_rho(tau: float, rho: float, C1: float) -> float:
    return (2.0 * tau * C1 * rho) ** (-1.0 / (2.0 * rho))


def gevrey_bound(k: int, tau: float, sector: SymbolSector, v0_l2: float) -> float:
    """L2 bound A(tau,rho)^k (k!)^{1/(2 rho)} ||v0|| on the k-th derivative of v(tau, .)."""
    A = A_tau_rho(tau, sector.rho, sector.C1)
    return float(A**k * math.exp(math.lgamma(k + 1) / (2 * sector.rho)) * v0_l2)


def gevrey_bound_sharp(k: int, tau: float, sector: SymbolSector, v0_l2: float) -> float:
    """The intermediate bound (k / (2 tau C1 rho e))^{k/(2 rho)} ||v0|| (before k^k <= k! e^k)."""
    return float(math.sqrt(max_exp_opt(2 * k, 2 * tau * sector.C1, 2 * sector.rho)) * v0_l2)


@dataclass
class GevreyProfile:
    delta: float
    A_tau_rho: float
    v0_l2: float
    bounds: list


def gevrey_profile(kmax: int, tau: float, sector: SymbolSector, v0_l2: float) -> GevreyProfile:
    return GevreyProfile(gevrey_delta(sector.rho), A_tau_rho(tau, sector.rho, sector.C1), v0_l2,
                         [gevrey_bound(k, tau, sector, v0_l2) for k in range(kmax + 1)])


def derivative_l2_norm(model: LevyModel1D, v0: LogPayoff, tau: float, k: int,
                       method: str = "spatial") -> float:
    """||D^k_x v(tau, .)||_{L2}.

    "spatial": trapezoid sum in x of the Fourier-evaluated derivative.
    "plancherel": int |xi|^{2k} |exp(-tau psi)|^2 |v0_hat|^2 dxi.
    """
    if method == "plancherel":
        R, _ = fourier_radius(model, v0, 2 * tau, 2 * k, rel_tol=1e-30)
        xi, wt = _panels(R, 0.5, _GL_HI)
        g = xi ** (2 * k) * np.exp(-2 * tau * symbol(model, xi).real) * np.abs(v0.fourier(xi)) ** 2
        return float(np.sqrt(np.sum(g * wt)))
    R, _ = fourier_radius(model, v0, tau, k)
    lo, hi = _spatial_range(model, v0, tau)
    # |D^k v|^2 is band limited to [-2R, 2R] up to the truncation tail, so the
    # trapezoid sum with spacing below pi / R is exact apart from the end cut
    n = int(math.ceil((hi - lo) * 1.25 * R / math.pi)) + 1
    x = np.linspace(lo, hi, n)
    w = np.full(n, x[1] - x[0])
    xi, wt = _panels(R, 0.5, _GL_HI)
    g = (1j * xi) ** k * np.exp(-tau * symbol(model, xi)) * v0.fourier(xi) * wt / math.sqrt(2 * math.pi)
    vals = np.empty(x.shape[0])
    step = max(1, (1 << 22) // xi.shape[0])
    for a in range(0, x.shape[0], step):
        ph = np.outer(x[a:a + step], xi)
        vals[a:a + step] = np.cos(ph) @ g.real - np.sin(ph) @ g.imag
    return float(np.sqrt(np.sum(vals * vals * w)))


def _spatial_range(model: LevyModel1D, v0: LogPayoff, tau: float) -> tuple[float, float]:
    c = tau * model.cumulants(4)
    spread = 14 * math.sqrt(max(c[1], 0) + math.sqrt(abs(c[3]))) + 1.0
    a, b = getattr(v0, "support", (-8 * getattr(v0, "width", 1.0), 8 * getattr(v0, "width", 1.0)))
    return a - c[0] - spread, b - c[0] + spread


# ---------------------------------------------------------------------------
# smoothing constants
# ---------------------------------------------------------------------------


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def smoothing_integral(d: int, tau: float, rho: float, C1: float) -> float:
    """int_{R^d} exp(-2 tau C1 |xi|^{2 rho}) dxi in closed form."""
    kappa = 2 * tau * C1
    return d * unit_ball_volume(d) * math.gamma(d / (2 * rho)) / (2 * rho) * kappa ** (-d / (2 * rho))


def smoothing_integral_quadrature(d: int, tau: float, rho: float, C1: float) -> float:
    """Radial quadrature of the same integral (independent check)."""
    kappa = 2 * tau * C1
    f = lambda r: r ** (d - 1) * math.exp(-kappa * r ** (2 * rho))
    scale = kappa ** (-1 / (2 * rho))
    val = sum(integrate.quad(f, lo * scale, hi * scale, epsabs=0, epsrel=1e-13, limit=200)[0]
              for lo, hi in ((0, 1), (1, 4), (4, 16), (16, 64)))
    return d * unit_ball_volume(d) * val


def C_d_tau(d: int, tau: float, sector: SymbolSector) -> float:
    """(2 pi)^{-d/2} (int exp(-2 tau C1 |xi|^{2 rho}) dxi)^{1/2}."""
    return (2 * math.pi) ** (-d / 2) * math.sqrt(smoothing_integral(d, tau, sector.rho, sector.C1))


def C_d_tau_printed(d: int, tau: float, sector: SymbolSector) -> float:
    """Alternative closed form (pi/(rho d)) (2 tau C1)^{-d/(2rho)} pi^{d/2} Gamma(d/(2rho))/Gamma(d/2+1).

    Kept for comparison; it differs from the defining integral by sqrt(2 pi / d^2)
    and is not used for any bound.
    """
    rho, C1 = sector.rho, sector.C1
    inner = (math.pi / (rho * d)) * (2 * tau * C1) ** (-d / (2 * rho)) * unit_ball_volume(d) * math.gamma(d / (2 * rho))
    return (2 * math.pi) ** (-d / 2) * math.sqrt(inner)


@dataclass
class SmoothingConstants:
    C_d_tau: float
    C_d_tau_quadrature: float
    C_d_tau_printed: float
    tau_threshold: float
    dA_product: float


def smoothing_constants(d: int, tau: float, sector: SymbolSector) -> SmoothingConstants:
    rho, C1 = sector.rho, sector.C1
    cq = (2 * math.pi) ** (-d / 2) * math.sqrt(smoothing_integral_quadrature(d, tau, rho, C1))
    return SmoothingConstants(
        C_d_tau=C_d_tau(d, tau, sector),
        C_d_tau_quadrature=cq,
        C_d_tau_printed=C_d_tau_printed(d, tau, sector),
        tau_threshold=d ** (2 * rho) / (2 * rho * C1),
        dA_product=d * A_tau_rho(tau, rho, C1),
    )


# ---------------------------------------------------------------------------
# Chebyshev approximation and emulation
# ---------------------------------------------------------------------------


def cheb_points(p: int, a: float, b: float) -> np.ndarray:
    """Second-kind (extrema) points mapped to [a, b], j = 0..p."""
    if p == 0:
        return np.array([(a + b) / 2])
    return (a + b) / 2 + (b - a) / 2 * np.cos(np.pi * np.arange(p + 1) / p)


def cheb_coeffs_from_values(f: np.ndarray) -> np.ndarray:
    """Interpolant coefficients from values at second-kind points (DCT-I)."""
    p = f.shape[0] - 1
    if p == 0:
        return f.astype(float).copy()
    c = dct(f, type=1) / p
    c[0] /= 2
    c[-1] /= 2
    return c


@dataclass
class ChebRow:
    p: int
    sup_error: float
    coeffs: np.ndarray


@dataclass
class ChebResult:
    a: float
    b: float
    tau: float
    rows: list
    delta: float
    decay_coefficient: float
    fit_r2: float
    fit_max_rel_residual: float
    oracle_error: float
    grid: np.ndarray = field(repr=False)
    oracle: np.ndarray = field(repr=False)

    def row(self, p: int) -> ChebRow:
        return next(r for r in self.rows if r.p == p)


def _to_unit(s, a, b):
    return (2 * np.asarray(s, float) - (a + b)) / (b - a)


def cheb_approx(model: LevyModel1D, spec: PayoffSpec, tau: float, interval: tuple, p_list: Sequence[int],
                sector: Optional[SymbolSector] = None, grid_points: int = 2000) -> ChebResult:
    """Chebyshev interpolants of s -> u(tau, s) on [a, b] and their sup errors on a grid.

    Fits log(error) against p^{1/delta}; the decay coefficient is minus the slope.
    """
    a, b = interval
    if sector is not None:
        rep = check_sector(model, sector, np.linspace(-200, 200, 801))
        if not rep.holds:
            raise SectorViolation("declared sector lower bound fails for this model")
    delta = gevrey_delta(sector.rho) if sector is not None else 1.0
    grid = np.linspace(a, b, grid_points)
    ref = price_fourier_1d(model, spec, tau, grid)
    rows = []
    for p in p_list:
        nodes = cheb_points(p, a, b)
        f = price_fourier_1d(model, spec, tau, nodes).value
        c = cheb_coeffs_from_values(f)
        err = float(np.max(np.abs(np.polynomial.chebyshev.chebval(_to_unit(grid, a, b), c) - ref.value)))
        rows.append(ChebRow(int(p), err, c))
    ps = np.array([r.p for r in rows], float)
    es = np.array([r.sup_error for r in rows])
    keep = es > 0
    slope, r2, rel = 0.0, 1.0, 0.0
    if keep.sum() >= 2:
        x = ps[keep] ** (1 / delta)
        y = np.log(es[keep])
        slope, icpt = np.polyfit(x, y, 1)
        resid = y - (slope * x + icpt)
        span = y.max() - y.min()
        rel = float(np.max(np.abs(resid)) / span) if span > 0 else 0.0
        ss = np.sum((y - y.mean()) ** 2)
        r2 = float(1 - np.sum(resid**2) / ss) if ss > 0 else 1.0
    return ChebResult(a, b, tau, rows, delta, float(-slope), r2, rel, float(ref.error_bound.max()), grid, ref.value)


@dataclass
class EmulationResult:
    net: ReluNetwork
    M: int
    L: int
    measured_error: float
    cheb_error: float
    emulation_error: float
    delta_net: float


def spectral_emulate(cheb: ChebResult, p: int, delta_net: float) -> EmulationResult:
    """ReLU emulation of the degree-p interpolant composed with [a, b] -> [-1, 1]."""
    row = cheb.row(p)
    a, b = cheb.a, cheb.b
    poly = polynomial_emulator(row.coeffs, delta_net)
    affine = linear_net([[2.0 / (b - a)]], [-(a + b) / (b - a)])
    net = compose(poly, affine)
    out = net(cheb.grid)
    measured = float(np.max(np.abs(out - cheb.oracle)))
    emul = float(np.max(np.abs(out - np.polynomial.chebyshev.chebval(_to_unit(cheb.grid, a, b), row.coeffs))))
    m = metrics(net)
    return EmulationResult(net, m.M, m.L, measured, row.sup_error, emul, delta_net)
