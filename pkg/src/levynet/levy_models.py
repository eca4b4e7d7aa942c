"""Parametric Levy models: symbols, drifts, exponential moments, simulation.

Everything is built on the cumulant function kappa(u) = log E[exp(u X_1)],
evaluated in closed form for complex u inside its strip of analyticity.
The symbol is psi(xi) = -kappa(i xi) and E[exp(p X_T)] = exp(T kappa(p)).
The small-jump truncation in the triplet is 1{|y| <= 1} (Euclidean norm in d dims).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np
from scipy import integrate, special

from .errors import MomentDiverges, NotSimulable

ArrayLike = Union[float, np.ndarray]


def rng_stream(seed: int, *task: int) -> np.random.Generator:
    """Independent generator for (seed, task...); reproducible and splittable."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(t) for t in task))
    return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------------------
# jump-size laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalLaw:
    """Normal(mu, sigma^2) jump size; sigma = 0 is a point mass."""

    mu: float
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("jump sigma must be >= 0")

    def mgf(self, u):
        u = np.asarray(u, dtype=complex)
        return np.exp(self.mu * u + 0.5 * self.sigma**2 * u * u)

    def exp_finite(self, c: float) -> bool:
        return True

    def _masses(self, h: float):
        """(P, E[J], E[J^2]) restricted to |J| <= h."""
        mu, s = self.mu, self.sigma
        if s == 0.0:
            ind = float(abs(mu) <= h)
            return ind, ind * mu, ind * mu * mu
        a, b = (-h - mu) / s, (h - mu) / s
        P = special.ndtr(b) - special.ndtr(a)
        pa, pb = np.exp(-0.5 * a * a) / np.sqrt(2 * np.pi), np.exp(-0.5 * b * b) / np.sqrt(2 * np.pi)
        ez = pa - pb
        ez2 = P + a * pa - b * pb
        return P, mu * P + s * ez, mu * mu * P + 2 * mu * s * ez + s * s * ez2

    def trunc_mean(self, h: float) -> float:
        return float(self._masses(h)[1])

    def trunc_second(self, h: float) -> float:
        return float(self._masses(h)[2])

    def tail_prob(self, h: float) -> float:
        mu, s = self.mu, self.sigma
        if s == 0.0:
            return float(abs(mu) > h)
        return float(special.ndtr((-h - mu) / s) + special.ndtr((mu - h) / s))

    def tail_exp(self, c: float, h: float) -> float:
        """E[exp(cJ); |J| > h]."""
        mu, s = self.mu, self.sigma
        if s == 0.0:
            return float(np.exp(c * mu)) if abs(mu) > h else 0.0
        m = mu + c * s * s
        scale = np.exp(c * mu + 0.5 * c * c * s * s)
        return float(scale * (special.ndtr((-h - m) / s) + special.ndtr((m - h) / s)))

    def raw_moment(self, n: int) -> float:
        # E[(mu + sZ)^n] via binomial expansion with Gaussian moments
        tot = 0.0
        for k in range(0, n + 1, 2):
            tot += special.comb(n, k) * self.mu ** (n - k) * self.sigma**k * special.factorial2(k - 1)
        return float(tot)

    def sample_sums(self, counts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal(counts.shape[0])
        return counts * self.mu + np.sqrt(counts) * self.sigma * z


@dataclass(frozen=True)
class DoubleExpLaw:
    """Asymmetric double-exponential jump size."""

    p_up: float
    eta_plus: float
    eta_minus: float

    def __post_init__(self):
        if not 0.0 <= self.p_up <= 1.0:
            raise ValueError("pUp must lie in [0,1]")
        if self.eta_plus <= 0 or self.eta_minus <= 0:
            raise ValueError("eta parameters must be positive")

    def mgf(self, u):
        u = np.asarray(u, dtype=complex)
        p, ep, em = self.p_up, self.eta_plus, self.eta_minus
        return p * ep / (ep - u) + (1 - p) * em / (em + u)

    def exp_finite(self, c: float) -> bool:
        return (self.p_up == 0 or c < self.eta_plus) and (self.p_up == 1 or c > -self.eta_minus)

    @staticmethod
    def _first(eta, h):
        return (1 - np.exp(-eta * h) * (1 + eta * h)) / eta

    @staticmethod
    def _second(eta, h):
        x = eta * h
        return (2 - np.exp(-x) * (x * x + 2 * x + 2)) / eta**2

    def trunc_mean(self, h: float) -> float:
        p = self.p_up
        return float(p * self._first(self.eta_plus, h) - (1 - p) * self._first(self.eta_minus, h))

    def trunc_second(self, h: float) -> float:
        p = self.p_up
        return float(p * self._second(self.eta_plus, h) + (1 - p) * self._second(self.eta_minus, h))

    def tail_prob(self, h: float) -> float:
        p = self.p_up
        return float(p * np.exp(-self.eta_plus * h) + (1 - p) * np.exp(-self.eta_minus * h))

    def tail_exp(self, c: float, h: float) -> float:
        if not self.exp_finite(c):
            raise MomentDiverges(f"E[exp({c} J)] is infinite for double-exponential jumps")
        p, ep, em = self.p_up, self.eta_plus, self.eta_minus
        up = p * ep * np.exp((c - ep) * h) / (ep - c) if p > 0 else 0.0
        down = (1 - p) * em * np.exp(-(c + em) * h) / (em + c) if p < 1 else 0.0
        return float(up + down)

    def raw_moment(self, n: int) -> float:
        p = self.p_up
        f = special.factorial(n)
        return float(p * f / self.eta_plus**n + (1 - p) * (-1) ** n * f / self.eta_minus**n)

    def sample_sums(self, counts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        total = int(counts.sum())
        up = rng.random(total) < self.p_up
        e = rng.standard_exponential(total)
        sizes = np.where(up, e / self.eta_plus, -e / self.eta_minus)
        owner = np.repeat(np.arange(counts.shape[0]), counts)
        return np.bincount(owner, weights=sizes, minlength=counts.shape[0])


# ---------------------------------------------------------------------------
# jump components
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MertonJumps:
    lam: float
    mu: float
    sigma: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("jump intensity must be >= 0")

    @cached_property
    def law(self) -> NormalLaw:
        return NormalLaw(self.mu, self.sigma)


@dataclass(frozen=True)
class KouJumps:
    lam: float
    p_up: float
    eta_plus: float
    eta_minus: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("jump intensity must be >= 0")
        if self.eta_plus <= 1:
            raise MomentDiverges("Kou requires etaPlus > 1")

    @cached_property
    def law(self) -> DoubleExpLaw:
        return DoubleExpLaw(self.p_up, self.eta_plus, self.eta_minus)


@dataclass(frozen=True)
class TemperedStableJumps:
    """CGMY Levy density C exp(-G|y|)/|y|^{1+Y} (y<0), C exp(-My)/y^{1+Y} (y>0)."""

    C: float
    G: float
    M: float
    Y: float

    def __post_init__(self):
        if self.C <= 0 or self.G <= 0:
            raise ValueError("C and G must be positive")
        if self.M <= 1:
            raise MomentDiverges("TemperedStable requires M > 1")
        if not 0 < self.Y < 2:
            raise ValueError("Y must lie in (0,2)")
        if self.Y == 1:
            raise ValueError("Y = 1 is not supported (Gamma(-Y) pole)")

    def density(self, y):
        y = np.asarray(y, dtype=float)
        ay = np.abs(y)
        rate = np.where(y > 0, self.M, self.G)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(y == 0, 0.0, self.C * np.exp(-rate * ay) / ay ** (1 + self.Y))

    @cached_property
    def big_jump_mean(self) -> float:
        """int_{|y|>1} y nu(dy)."""
        f = lambda y, r: y ** (-self.Y) * np.exp(-r * y)
        iM = integrate.quad(f, 1, np.inf, args=(self.M,), epsabs=0, epsrel=1e-13)[0]
        iG = integrate.quad(f, 1, np.inf, args=(self.G,), epsabs=0, epsrel=1e-13)[0]
        return self.C * (iM - iG)

    def exp_finite(self, c: float) -> bool:
        return -self.G <= c <= self.M

    def full_cumulant(self, u):
        """int (e^{uy} - 1 - uy) nu(dy)."""
        u = np.asarray(u, dtype=complex)
        C, G, M, Y = self.C, self.G, self.M, self.Y
        br = (M - u) ** Y - M**Y + (G + u) ** Y - G**Y + u * Y * (M ** (Y - 1) - G ** (Y - 1))
        return C * special.gamma(-Y) * br

    def levy_moment(self, n: int) -> float:
        """int y^n nu(dy) for n >= 2."""
        C, G, M, Y = self.C, self.G, self.M, self.Y
        return float(C * special.gamma(n - Y) * (M ** (Y - n) + (-1) ** n * G ** (Y - n)))

    def tail_exp(self, c: float) -> float:
        f = lambda y: np.exp(c * y) * self.density(y)
        if not self.exp_finite(c):
            raise MomentDiverges(f"TemperedStable exponential moment of order {c} diverges")
        return integrate.quad(f, 1, np.inf, epsrel=1e-12)[0] + integrate.quad(f, -np.inf, -1, epsrel=1e-12)[0]

    def small_second(self) -> float:
        f = lambda y: y * y * self.density(y)
        return integrate.quad(f, 0, 1, epsrel=1e-12)[0] + integrate.quad(f, -1, 0, epsrel=1e-12)[0]


Jumps1D = Optional[Union[MertonJumps, KouJumps, TemperedStableJumps]]


def _cp_cumulant(j: Union[MertonJumps, KouJumps], u, h: float = 1.0):
    """Jump part of kappa for a compound Poisson component truncated at h."""
    u = np.asarray(u, dtype=complex)
    return j.lam * (j.law.mgf(u) - 1.0) - u * j.lam * j.law.trunc_mean(h)


def _check_exp(j, c: float):
    if j is None:
        return
    if isinstance(j, TemperedStableJumps):
        ok = j.exp_finite(c)
    else:
        ok = j.lam == 0 or j.law.exp_finite(c)
    if not ok:
        raise MomentDiverges(f"exponential moment of order {c} diverges for {type(j).__name__}")


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevyModel1D:
    sigma: float = 0.0
    gamma: float = 0.0
    jumps: Jumps1D = None

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")

    @property
    def variant(self) -> str:
        return {
            type(None): "BlackScholes",
            MertonJumps: "Merton",
            KouJumps: "Kou",
            TemperedStableJumps: "TemperedStable",
        }[type(self.jumps)]

    @property
    def d(self) -> int:
        return 1

    @property
    def simulable(self) -> bool:
        return not isinstance(self.jumps, TemperedStableJumps)

    @classmethod
    def black_scholes(cls, sigma: float, gamma: Optional[float] = None) -> "LevyModel1D":
        return cls._finish(cls(sigma=sigma), gamma)

    @classmethod
    def merton(cls, sigma, lam, mu_j, sigma_j, gamma=None) -> "LevyModel1D":
        return cls._finish(cls(sigma=sigma, jumps=MertonJumps(lam, mu_j, sigma_j)), gamma)

    @classmethod
    def kou(cls, sigma, lam, p_up, eta_plus, eta_minus, gamma=None) -> "LevyModel1D":
        return cls._finish(cls(sigma=sigma, jumps=KouJumps(lam, p_up, eta_plus, eta_minus)), gamma)

    @classmethod
    def tempered_stable(cls, C, G, M, Y, sigma=0.0, gamma=None) -> "LevyModel1D":
        return cls._finish(cls(sigma=sigma, jumps=TemperedStableJumps(C, G, M, Y)), gamma)

    @staticmethod
    def _finish(m: "LevyModel1D", gamma):
        """gamma=None installs the martingale drift."""
        if gamma is None:
            return m.with_gamma(martingale_drift(m))
        return m.with_gamma(gamma)

    def with_gamma(self, gamma: float) -> "LevyModel1D":
        return LevyModel1D(self.sigma, float(gamma), self.jumps)

    def jump_cumulant(self, u):
        u = np.asarray(u, dtype=complex)
        j = self.jumps
        if j is None:
            return np.zeros_like(u)
        if isinstance(j, TemperedStableJumps):
            return j.full_cumulant(u) + u * j.big_jump_mean
        return _cp_cumulant(j, u)

    def cumulant(self, u):
        """log E[exp(u X_1)] for complex u in the strip of analyticity."""
        u = np.asarray(u, dtype=complex)
        return 0.5 * self.sigma**2 * u * u + self.gamma * u + self.jump_cumulant(u)

    def cumulants(self, nmax: int = 4) -> np.ndarray:
        """Cumulants of X_1 of orders 1..nmax."""
        j = self.jumps
        out = np.zeros(nmax)
        for n in range(1, nmax + 1):
            if n == 1:
                if j is None:
                    lm = 0.0
                elif isinstance(j, TemperedStableJumps):
                    lm = j.big_jump_mean
                else:
                    lm = j.lam * (j.law.raw_moment(1) - j.law.trunc_mean(1.0))
                out[0] = self.gamma + lm
                continue
            v = self.sigma**2 if n == 2 else 0.0
            if isinstance(j, TemperedStableJumps):
                v += j.levy_moment(n)
            elif j is not None:
                v += j.lam * j.law.raw_moment(n)
            out[n - 1] = v
        return out

    def to_multivariate(self) -> "LevyModelD":
        idio = None if self.jumps is None else (self.jumps,)
        return LevyModelD(np.array([[self.sigma**2]]), np.array([self.gamma]), idio, None)


@dataclass(frozen=True)
class CommonJump:
    """Common factor: Poisson(lam) jumps y = beta * J with J ~ Normal(mu, sigma^2)."""

    lam: float
    beta: np.ndarray
    mu: float
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float).copy())
        self.beta.setflags(write=False)
        if self.lam < 0:
            raise ValueError("common jump intensity must be >= 0")

    @cached_property
    def law(self) -> NormalLaw:
        return NormalLaw(self.mu, self.sigma)

    @property
    def cutoff(self) -> float:
        """|J| threshold equivalent to ||beta J|| <= 1."""
        nb = float(np.linalg.norm(self.beta))
        return np.inf if nb == 0 else 1.0 / nb


@dataclass(frozen=True, eq=False)
class LevyModelD:
    A: np.ndarray
    gamma: np.ndarray
    idio: Optional[Sequence[Optional[Union[MertonJumps, KouJumps, TemperedStableJumps]]]] = None
    common: Optional[CommonJump] = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float)).copy()
        g = np.atleast_1d(np.asarray(self.gamma, dtype=float)).copy()
        d = g.shape[0]
        if A.shape != (d, d):
            raise ValueError(f"A has shape {A.shape}, expected {(d, d)}")
        if not np.allclose(A, A.T, atol=1e-10, rtol=0):
            raise ValueError("A must be symmetric")
        if d and np.linalg.eigvalsh(A).min() < -1e-10:
            raise ValueError("A must be nonnegative definite")
        idio = None
        if self.idio is not None:
            idio = tuple(self.idio)
            if len(idio) != d:
                raise ValueError("idio must list one jump law per coordinate")
            if all(j is None for j in idio):
                idio = None
        if self.common is not None and self.common.beta.shape != (d,):
            raise ValueError("common jump loading must have length d")
        A.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "idio", idio)

    @property
    def d(self) -> int:
        return int(self.gamma.shape[0])

    @property
    def simulable(self) -> bool:
        return self.idio is None or not any(isinstance(j, TemperedStableJumps) for j in self.idio)

    @classmethod
    def independent(cls, margin: LevyModel1D, d: int) -> "LevyModelD":
        """d i.i.d. copies of a univariate model."""
        idio = None if margin.jumps is None else (margin.jumps,) * d
        return cls(margin.sigma**2 * np.eye(d), np.full(d, margin.gamma), idio, None)

    def with_gamma(self, gamma) -> "LevyModelD":
        return LevyModelD(self.A, np.asarray(gamma, dtype=float), self.idio, self.common)

    def with_martingale_drift(self) -> "LevyModelD":
        return self.with_gamma(martingale_drift(self))

    def cumulant(self, u) -> np.ndarray:
        """kappa(u) for u of shape (d,) or (P, d), complex allowed."""
        u = np.asarray(u, dtype=complex)
        single = u.ndim == 1
        u = np.atleast_2d(u)
        out = 0.5 * np.einsum("pi,ij,pj->p", u, self.A, u) + u @ self.gamma
        if self.idio is not None:
            for i, j in enumerate(self.idio):
                if j is None:
                    continue
                if isinstance(j, TemperedStableJumps):
                    out = out + j.full_cumulant(u[:, i]) + u[:, i] * j.big_jump_mean
                else:
                    out = out + _cp_cumulant(j, u[:, i])
        c = self.common
        if c is not None and c.lam > 0:
            ub = u @ c.beta
            h = c.cutoff
            out = out + c.lam * (c.law.mgf(ub) - 1.0)
            if np.isfinite(h):
                out = out - ub * c.lam * c.law.trunc_mean(h)
            else:
                out = out - ub * c.lam * c.law.raw_moment(1)
        return out[0] if single else out

    def marginal(self, i: int) -> LevyModel1D:
        """Univariate law of X_i when it is expressible as a single 1d variant."""
        if self.common is not None and self.common.lam > 0 and self.common.beta[i] != 0:
            raise ValueError("marginal with common jumps is not a single 1d variant")
        j = None if self.idio is None else self.idio[i]
        return LevyModel1D(float(np.sqrt(self.A[i, i])), float(self.gamma[i]), j)


Model = Union[LevyModel1D, LevyModelD]


@dataclass(frozen=True)
class SymbolSector:
    rho: float
    C1: float
    C2: float = np.inf
    C3: float = np.inf
    rho_vec: Optional[tuple] = None

    def __post_init__(self):
        if not 0 < self.rho <= 1:
            raise ValueError("rho must lie in (0,1]")
        if self.C1 < 0 or self.C1 > self.C2:
            raise ValueError("need 0 <= C1 <= C2")
        if self.rho_vec is not None:
            rv = tuple(float(r) for r in self.rho_vec)
            if any(r <= 0.5 or r > 1 for r in rv):
                raise ValueError("rhoVec entries must lie in (1/2,1]")
            object.__setattr__(self, "rho_vec", rv)


@dataclass(frozen=True)
class SectorReport:
    holds: bool
    worst_ratio: float
    lower_margin: float
    upper_margin: float


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def symbol(model: Model, xi) -> np.ndarray:
    """psi(xi) with E[exp(i xi.X_t)] = exp(-t psi(xi)); complex xi continues analytically."""
    return -model.cumulant(1j * np.asarray(xi))


def martingale_drift(model: Model):
    """Drift making exp(X_t) (componentwise) a martingale."""
    if isinstance(model, LevyModel1D):
        _check_exp(model.jumps, 1.0)
        base = model.with_gamma(0.0)
        return float(-base.cumulant(1.0).real)
    _check_model_exp(model, 1.0)
    base = model.with_gamma(np.zeros(model.d))
    return -base.cumulant(np.eye(model.d)).real


def _check_model_exp(model: LevyModelD, p: float):
    if model.idio is not None:
        for j in model.idio:
            _check_exp(j, p)


def exp_moment(model: Model, p: float, T: float):
    """E[exp(p X_{T,i})]; scalar for 1d models, length-d array otherwise."""
    if isinstance(model, LevyModel1D):
        _check_exp(model.jumps, p)
        return float(np.exp(T * model.cumulant(p).real))
    _check_model_exp(model, p)
    return np.exp(T * model.cumulant(p * np.eye(model.d)).real)


def exp_moment_bound(B: float, p: float, T: float) -> float:
    """Dimension-uniform bound exp(T(5p^2 B/2 + p^2 e^p B)) given a triplet bound B."""
    return float(np.exp(T * (2.5 * p * p * B + p * p * np.exp(p) * B)))


def check_sector(model: Model, sector: SymbolSector, xi_grid) -> SectorReport:
    """Check C1 |xi|^{2 rho} <= Re psi and |psi| <= C2 |xi|^{2 rho} + C3 on a grid.

    With rho_vec set, the lower bound is the anisotropic C1 sum_j |xi_j|^{2 rho_j}.
    """
    xi = np.asarray(xi_grid, dtype=float)
    if isinstance(model, LevyModel1D):
        xi = xi.reshape(-1, 1)
        psi = symbol(model, xi[:, 0])
    else:
        xi = xi.reshape(-1, model.d)
        psi = symbol(model, xi)
    norm = np.linalg.norm(xi, axis=1)
    re = psi.real
    if sector.rho_vec is not None:
        lower = sector.C1 * np.sum(np.abs(xi) ** (2 * np.asarray(sector.rho_vec)), axis=1)
    else:
        lower = sector.C1 * norm ** (2 * sector.rho)
    keep = norm > 0
    lower_margin = float(np.min((re - lower)[keep])) if keep.any() else 0.0
    if sector.C1 > 0 and keep.any():
        worst = float(np.min(re[keep] / lower[keep]))
    else:
        worst = np.inf
    if np.isfinite(sector.C2) and np.isfinite(sector.C3):
        upper = sector.C2 * norm ** (2 * sector.rho) + sector.C3
        upper_margin = float(np.min(upper - np.abs(psi)))
    else:
        upper_margin = np.inf
    tol = 1e-12 * (1 + np.max(np.abs(psi))) if psi.size else 0.0
    holds = lower_margin >= -tol and upper_margin >= -tol
    return SectorReport(bool(holds), worst, lower_margin, upper_margin)


def triplet_terms(model: Model, p: float) -> dict:
    """Per-coordinate quantities entering the dimension-uniform triplet bound."""
    if isinstance(model, LevyModel1D):
        model = model.to_multivariate()
    d = model.d
    tail = np.zeros(d)
    small = np.zeros(d)
    if model.idio is not None:
        escape = np.zeros(d)  # lam_i P(|J_i| > 1): seen by every other coordinate as e^0
        for i, j in enumerate(model.idio):
            if j is None:
                continue
            if isinstance(j, TemperedStableJumps):
                tail[i] += j.tail_exp(p)
                small[i] += j.small_second()
                escape[i] = j.tail_exp(0.0)
                continue
            if j.lam == 0:
                continue
            if not j.law.exp_finite(p):
                raise MomentDiverges(f"order-{p} exponential moment diverges in coordinate {i}")
            tail[i] += j.lam * j.law.tail_exp(p, 1.0)
            small[i] += j.lam * j.law.trunc_second(1.0)
            escape[i] = j.lam * j.law.tail_prob(1.0)
        tail += escape.sum() - escape
    c = model.common
    if c is not None and c.lam > 0 and np.any(c.beta != 0):
        h = c.cutoff
        for i in range(d):
            tail[i] += c.lam * c.law.tail_exp(p * c.beta[i], h)
            small[i] += c.lam * c.beta[i] ** 2 * c.law.trunc_second(h)
    return {"A": model.A.copy(), "gamma": model.gamma.copy(), "tail": tail, "small": small}


def triplet_bounds(model: Model, p: float) -> float:
    """B = max over i,j of A_ij, gamma_i, int_{|y|>1} e^{p y_i} nu, int_{|y|<=1} y_i^2 nu."""
    t = triplet_terms(model, p)
    return float(max(t["A"].max(), t["gamma"].max(), t["tail"].max(), t["small"].max()))


def _gauss_factor(A: np.ndarray, T: float) -> Optional[np.ndarray]:
    if not np.any(A):
        return None
    TA = T * A
    try:
        return np.linalg.cholesky(TA)
    except np.linalg.LinAlgError:
        return np.linalg.cholesky(TA + 1e-12 * np.eye(A.shape[0]))


def sample_increments(model: Model, T: float, n: int, rng: np.random.Generator,
                      return_counts: bool = False):
    """n exact draws of X_T, shape (n, d).

    Draw order: Gaussian block, idiosyncratic jumps coordinate by coordinate,
    then the common factor; fixed so results depend only on the stream.
    """
    if isinstance(model, LevyModel1D):
        if not model.simulable:
            raise NotSimulable("TemperedStable models are symbol-only")
        model = model.to_multivariate()
    if not model.simulable:
        raise NotSimulable("TemperedStable components are symbol-only")
    d = model.d
    drift = model.gamma.astype(float).copy()
    if model.idio is not None:
        for i, j in enumerate(model.idio):
            if j is not None:
                drift[i] -= j.lam * j.law.trunc_mean(1.0)
    c = model.common
    if c is not None and c.lam > 0:
        h = c.cutoff
        m = c.law.trunc_mean(h) if np.isfinite(h) else c.law.raw_moment(1)
        drift -= c.lam * c.beta * m
    X = np.broadcast_to(T * drift, (n, d)).copy()
    L = _gauss_factor(model.A, T)
    if L is not None:
        X += rng.standard_normal((n, d)) @ L.T
    counts = {}
    if model.idio is not None:
        for i, j in enumerate(model.idio):
            if j is None or j.lam == 0:
                continue
            N = rng.poisson(j.lam * T, n)
            X[:, i] += j.law.sample_sums(N, rng)
            counts[i] = N
    if c is not None and c.lam > 0:
        N = rng.poisson(c.lam * T, n)
        X += np.outer(c.law.sample_sums(N, rng), c.beta)
        counts["common"] = N
    return (X, counts) if return_counts else X


def sample_increment(model: Model, T: float, rng: np.random.Generator) -> np.ndarray:
    return sample_increments(model, T, 1, rng)[0]


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def _jumps_from(tab: dict, variant: str):
    if variant == "Merton":
        return MertonJumps(float(tab["lambda"]), float(tab["muJ"]), float(tab["sigmaJ"]))
    if variant == "Kou":
        return KouJumps(float(tab["lambda"]), float(tab["pUp"]), float(tab["etaPlus"]), float(tab["etaMinus"]))
    if variant == "TemperedStable":
        return TemperedStableJumps(float(tab["C"]), float(tab["G"]), float(tab["M"]), float(tab["Y"]))
    if variant == "BlackScholes":
        return None
    raise ValueError(f"unknown variant {variant!r}")


def model_from_dict(tab: dict) -> Model:
    """Build a model from a config `model` table.

    Univariate variants accept an optional `d` (i.i.d. margins). `MultiD` takes
    `A`, `gamma`, `idioJumps` and `commonJump`. A missing `gamma` means martingale drift.
    """
    variant = tab["variant"]
    if variant == "MultiD":
        A = np.asarray(tab["A"], dtype=float)
        d = A.shape[0]
        idio = None
        if tab.get("idioJumps") is not None:
            idio = [None if j is None else _jumps_from(j, j["variant"]) for j in tab["idioJumps"]]
        common = None
        if tab.get("commonJump") is not None:
            cj = tab["commonJump"]
            common = CommonJump(float(cj["lambdaC"]), np.asarray(cj["beta"], float),
                                float(cj["muC"]), float(cj["sigmaC"]))
        m = LevyModelD(A, np.zeros(d), idio, common)
        g = tab.get("gamma")
        return m.with_martingale_drift() if g is None else m.with_gamma(g)
    jumps = _jumps_from(tab, variant)
    m1 = LevyModel1D(float(tab.get("sigma", 0.0)), 0.0, jumps)
    g = tab.get("gamma")
    m1 = m1.with_gamma(martingale_drift(m1) if g is None else float(g))
    d = int(tab.get("d", 1))
    return m1 if d == 1 and "d" not in tab else LevyModelD.independent(m1, d)
