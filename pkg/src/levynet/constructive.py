"""Monte-Carlo averaging construction of price networks.

psi(s) = (1/n) sum_k R(phi)(s * exp(X_k)) with X_k i.i.d. copies of X_T
(capped componentwise at D in dimension d >= 2), assembled by the block
averaging of relu_net.average_diagonal.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import AttemptsExhausted, NotSimulable
from .levy_models import (
    LevyModel1D,
    LevyModelD,
    exp_moment,
    exp_moment_bound,
    rng_stream,
    sample_increments,
    triplet_bounds,
)
from .payoffs import PayoffSpec
from .pricing_oracle import price_fourier_1d, price_mc
from .relu_net import NetMetrics, PayoffConstants, ReluNetwork, average_diagonal, metrics, payoff_net

EXEC_LIMIT = 1 << 20  # largest n ever sampled


class InfeasibleConstruction(ValueError):
    pass


@dataclass
class ConstructionConfig:
    epsilon: float = 0.01
    a: float = 0.5
    b: float = 1.5
    mode: str = "practical"  # "practical" | "paper" (n and D from the error bound)
    n_override: Optional[int] = None
    D_override: Optional[float] = None
    attempts: int = 10
    grid_points_per_dim: Optional[int] = None
    lhs_points: int = 1024
    oracle_samples: int = 1 << 16
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.a < self.b < np.inf:
            raise ValueError("need 0 < a < b < inf")
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0,1]")
        if self.attempts < 1:
            raise ValueError("attempts must be >= 1")
        if self.mode not in ("practical", "paper"):
            raise ValueError("mode must be 'practical' or 'paper'")

    def grid_points(self, d: int) -> int:
        if self.grid_points_per_dim is not None:
            return self.grid_points_per_dim
        return 1000 if d == 1 else 64


@dataclass
class ConstantsReport:
    d: int
    path: str  # "1d" (no capping) or "multi"
    c: float
    q: float
    q_tilde: float
    p: float
    B: float
    c1: float
    c_tilde1: float
    c2: float
    eps_bar: float
    n: int
    D: float
    size_bound: float
    kappa: float
    d_exponent: float
    eps_exponent: float


@dataclass
class ConstructionReport:
    constants: dict
    eps_bar: float
    n: int
    D: float
    capped: bool
    M: int
    L: int
    sup_error: float
    oracle_error: float
    argmax: list
    sampling: str
    attempts_used: int
    attempt_errors: list
    seed: int
    mode: str
    size_bound: float
    met_target: bool

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, np.integer):
        return int(x)
    return x


def _dim(model) -> int:
    return 1 if isinstance(model, LevyModel1D) else model.d


def constants_report(model, pc: PayoffConstants, T: float, epsilon: float, b: float,
                     path: Optional[str] = None) -> ConstantsReport:
    """All constants of the error analysis and the resulting (eps_bar, n, D, size bound)."""
    d = _dim(model)
    path = path or ("1d" if d == 1 else "multi")
    c, q, qt, p = pc.c, pc.q, pc.q_tilde, pc.p
    B = triplet_bounds(model, p)
    if path == "1d":
        E1 = float(np.max(exp_moment(model, 1.0, T)))
        E2 = float(np.max(exp_moment(model, 2.0, T)))
        c1 = c * (1 + b * E1)
        c2 = 4 * b * c * math.sqrt(E2)
        ct1 = 0.0
        eps_bar = epsilon / (c1 + 1)
        n = 1 if c2 == 0 else math.ceil((2 * c2 / eps_bar) ** 2)
        D = math.inf
        kappa = c * (1 + 4 * c2**2) * (c1 + 1) ** (2 + q)
        d_exp = 0.0
    else:
        Ep = float(np.max(exp_moment(model, p, T)))
        c1 = c * max(1.0, b**p) * (1 + Ep)
        ct1 = 2 * b * c * math.exp(5 * T * p * B + 2 * T * math.exp(p) * p * B)
        c2 = 4 * math.sqrt(math.pi / 2) * c * b * math.exp(5 * B * T * p / 2 + B * T * p * math.exp(p))
        eps_bar = epsilon / (c1 * d ** (qt + p / 2 + 0.5) + 2)
        n = 1 if c2 == 0 else math.ceil((2 * c2 * d ** (qt + 1) / eps_bar) ** 2)
        D = math.inf if ct1 == 0 else math.log(d ** (qt + 1) * ct1 / eps_bar)
        kappa = (1 + 4 * c2**2) * c * (c1 + 2) ** (2 + q)
        d_exp = (qt + p / 2 + 0.5) * (2 + q) + 3 * qt + 2
    size_bound = kappa * d**d_exp * epsilon ** (-2 - q)
    return ConstantsReport(d, path, c, q, qt, p, B, c1, ct1, c2, eps_bar, n, D, size_bound,
                           kappa, d_exp, -2 - q)


# ---------------------------------------------------------------------------
# oracle on evaluation points
# ---------------------------------------------------------------------------


def evaluation_points(d: int, a: float, b: float, per_dim: int, lhs_points: int, seed: int):
    """Full tensor grid for d <= 3, Latin hypercube sample of the box otherwise."""
    if d <= 3:
        g = np.linspace(a, b, per_dim)
        mesh = np.meshgrid(*([g] * d), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1), "grid"
    sampler = qmc.LatinHypercube(d=d, seed=np.random.default_rng(rng_stream(seed, 3).integers(2**63)))
    return a + (b - a) * sampler.random(lhs_points), "lhs"


def _separable_margins(model) -> Optional[list]:
    if isinstance(model, LevyModel1D):
        return [model]
    if model.common is not None and model.common.lam > 0:
        return None
    if np.count_nonzero(model.A - np.diag(np.diag(model.A))):
        return None
    return [model.marginal(i) for i in range(model.d)]


def oracle_values(model, spec: PayoffSpec, tau: float, S: np.ndarray, seed: int,
                  n_mc: int = 1 << 16):
    """(values, error bounds, kind) of u(tau, s) at the rows of S."""
    d = S.shape[1]
    if d == 1 and spec.kind in ("Call", "Butterfly", "Constant"):
        m1 = model if isinstance(model, LevyModel1D) else model.marginal(0)
        r = price_fourier_1d(m1, spec, tau, S[:, 0])
        return r.value, r.error_bound, "Fourier"
    if spec.kind == "Constant":
        return np.full(S.shape[0], spec.value), np.zeros(S.shape[0]), "Analytic"
    margins = _separable_margins(model)
    if spec.kind == "SeparableCalls" and margins is not None:
        val = np.zeros(S.shape[0])
        err = np.zeros(S.shape[0])
        for i, (wi, mi) in enumerate(zip(spec.weights, margins)):
            r = price_fourier_1d(mi, PayoffSpec.call(spec.K), tau, S[:, i])
            val += wi * r.value
            err += abs(wi) * r.error_bound
        return val, err, "Fourier"
    r = price_mc(model, spec, tau, S, n_mc, seed, stream=(1,))
    return r.value, r.error_bound, "MonteCarlo"


@dataclass
class SupError:
    sup_error: float
    argmax: np.ndarray
    oracle_error: float
    sampling: str
    n_points: int


class ErrorMeter:
    """Caches oracle values on the evaluation points so many nets can be scored."""

    def __init__(self, model, spec: PayoffSpec, tau: float, box: tuple, grid_points_per_dim: int,
                 lhs_points: int = 1024, seed: int = 0, n_mc: int = 1 << 16):
        d = _dim(model)
        self.S, self.sampling = evaluation_points(d, box[0], box[1], grid_points_per_dim, lhs_points, seed)
        self.values, self.errors, self.kind = oracle_values(model, spec, tau, self.S, seed, n_mc)

    @classmethod
    def on_points(cls, model, spec: PayoffSpec, tau: float, S: np.ndarray, seed: int = 0,
                  n_mc: int = 1 << 16, sampling: str = "points") -> "ErrorMeter":
        self = cls.__new__(cls)
        self.S = np.asarray(S, dtype=float).reshape(S.shape[0], -1)
        self.sampling = sampling
        self.values, self.errors, self.kind = oracle_values(model, spec, tau, self.S, seed, n_mc)
        return self

    def __call__(self, net: ReluNetwork) -> SupError:
        diff = np.abs(net(self.S) - self.values)
        i = int(np.argmax(diff))
        return SupError(float(diff[i]), self.S[i].copy(), float(self.errors.max()), self.sampling,
                        self.S.shape[0])


def measure_sup_error(net: ReluNetwork, model, spec: PayoffSpec, tau: float, box: tuple,
                      grid_points_per_dim: int, lhs_points: int = 1024, seed: int = 0,
                      n_mc: int = 1 << 16) -> SupError:
    return ErrorMeter(model, spec, tau, box, grid_points_per_dim, lhs_points, seed, n_mc)(net)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def sample_scales(model, T: float, n: int, D: float, rng) -> np.ndarray:
    """exp of n (capped) samples of X_T, shape (n, d)."""
    X = sample_increments(model, T, n, rng)
    if math.isfinite(D):
        np.minimum(X, D, out=X)
    return np.exp(X)


def build_network(phi: ReluNetwork, scales: np.ndarray) -> ReluNetwork:
    n = scales.shape[0]
    return average_diagonal(phi, np.full(n, 1.0 / n), scales)


def construct(model, spec: PayoffSpec, T: float, config: ConstructionConfig,
              meter: Optional[ErrorMeter] = None, require_target: bool = True):
    """Build psi and its report; resample up to `attempts` times until sup error <= epsilon.

    Raises AttemptsExhausted (carrying the best attempt) when no draw meets the target
    and require_target is set.
    """
    d = _dim(model)
    if not model.simulable:
        raise NotSimulable("construction needs exact samples of X_T")
    phi, pc = payoff_net(spec, d)
    cr = constants_report(model, pc, T, config.epsilon, config.b)
    capped = d >= 2
    if config.mode == "paper":
        n, D = cr.n, cr.D
        if n > EXEC_LIMIT:
            raise InfeasibleConstruction(f"bound-driven n = {n} exceeds the executable limit {EXEC_LIMIT}")
        eps_bar = cr.eps_bar
    else:
        n = 1 if pc.c == 0 else int(config.n_override or 4096)
        D = config.D_override if config.D_override is not None else math.log(max(n, 2))
        # accuracy implied by n through the sampling term of the error bound
        lead = cr.c2 * (d ** (pc.q_tilde + 1) if d >= 2 else 1)
        eps_bar = 2 * lead / math.sqrt(n) if n else math.inf
    if not capped:
        D = math.inf
    if meter is None:
        meter = ErrorMeter(model, spec, T, (config.a, config.b), config.grid_points(d),
                           config.lhs_points, config.seed, config.oracle_samples)
    best = None
    errs = []
    for attempt in range(config.attempts):
        scales = sample_scales(model, T, n, D, rng_stream(config.seed, 0, attempt))
        net = build_network(phi, scales)
        se = meter(net)
        errs.append(se.sup_error)
        if best is None or se.sup_error < best[1].sup_error:
            best = (net, se, attempt)
        if se.sup_error <= config.epsilon:
            break
    net, se, _ = best
    m = metrics(net)
    report = ConstructionReport(
        constants=asdict(cr), eps_bar=eps_bar, n=n, D=D, capped=capped, M=m.M, L=m.L,
        sup_error=se.sup_error, oracle_error=se.oracle_error, argmax=se.argmax.tolist(),
        sampling=se.sampling, attempts_used=len(errs), attempt_errors=errs, seed=config.seed,
        mode=config.mode, size_bound=cr.size_bound, met_target=se.sup_error <= config.epsilon,
    )
    if require_target and not report.met_target:
        raise AttemptsExhausted(f"best sup error {se.sup_error:.3g} exceeds {config.epsilon}",
                                se.sup_error, (net, report))
    return net, report


@dataclass
class RateStudy:
    n: list
    mean_error: list
    std_error: list
    M: list
    slope: float
    intercept: float
    r2: float


def loglog_fit(x, y) -> tuple[float, float, float]:
    """OLS of log y on log x: (slope, intercept, r^2)."""
    return linear_fit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)))


def linear_fit(x, y) -> tuple[float, float, float]:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if np.unique(x).size < 2:
        return math.nan, math.nan, math.nan
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - float(np.sum(resid**2) / ss) if ss > 0 else 1.0
    return float(slope), float(intercept), min(max(r2, 0.0), 1.0)


def trial_errors(phi: ReluNetwork, model, T: float, n: int, D: float, trials: int, seed: int,
                 index: int, meter: ErrorMeter) -> tuple[list, NetMetrics]:
    """Sup errors of `trials` independent constructions; trial t samples stream (seed, 2, index, t)."""
    errs = []
    for t in range(trials):
        net = build_network(phi, sample_scales(model, T, n, D, rng_stream(seed, 2, index, t)))
        errs.append(meter(net).sup_error)
    return errs, metrics(net)


def rate_study(model, spec: PayoffSpec, T: float, box: tuple, n_list: Sequence[int], trials: int,
               seed: int, grid_points_per_dim: Optional[int] = None, cap: Optional[float] = None,
               meter: Optional[ErrorMeter] = None) -> RateStudy:
    """Mean sup error of independent constructions for each n, and the log-log slope."""
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("nList must be increasing")
    d = _dim(model)
    phi, _ = payoff_net(spec, d)
    per = grid_points_per_dim or (1000 if d == 1 else 64)
    meter = meter or ErrorMeter(model, spec, T, box, per, seed=seed)
    D = math.inf if d == 1 else (cap if cap is not None else math.inf)
    means, stds, Ms = [], [], []
    for i, n in enumerate(n_list):
        Dn = D if cap is not None or d == 1 else math.log(n)
        errs, m = trial_errors(phi, model, T, n, Dn, trials, seed, i, meter)
        means.append(float(np.mean(errs)))
        stds.append(float(np.std(errs, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0)
        Ms.append(m.M)
    slope, icpt, r2 = loglog_fit(n_list, means)
    return RateStudy(n_list, means, stds, Ms, slope, icpt, r2)
