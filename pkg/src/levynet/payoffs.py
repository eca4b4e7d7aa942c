"""Payoff specifications in spot coordinates and payoffs in log coordinates.

Fourier transforms use the unitary convention
    f_hat(xi) = (2 pi)^{-d/2} int exp(-i x.xi) f(x) dx.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

KINDS = ("Call", "Butterfly", "BasketCall", "CallOnMax", "Constant", "SeparableCalls")


@dataclass(frozen=True)
class PayoffSpec:
    kind: str
    K: float = 1.0
    K1: Optional[float] = None
    K2: Optional[float] = None
    weights: Optional[tuple] = None
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown payoff kind {self.kind!r}")
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.kind == "Butterfly":
            if self.K1 is None or self.K2 is None or not self.K1 < self.K < self.K2:
                raise ValueError("Butterfly needs K1 < K < K2")
        if self.kind in ("BasketCall", "SeparableCalls") and not self.weights:
            raise ValueError(f"{self.kind} needs weights")

    # constructors -----------------------------------------------------------
    @classmethod
    def call(cls, K: float) -> "PayoffSpec":
        return cls("Call", K=K)

    @classmethod
    def butterfly(cls, K1: float, K: float, K2: float) -> "PayoffSpec":
        return cls("Butterfly", K=K, K1=K1, K2=K2)

    @classmethod
    def basket_call(cls, weights, K: float) -> "PayoffSpec":
        return cls("BasketCall", K=K, weights=tuple(weights))

    @classmethod
    def call_on_max(cls, K: float) -> "PayoffSpec":
        return cls("CallOnMax", K=K)

    @classmethod
    def constant(cls, c: float) -> "PayoffSpec":
        return cls("Constant", value=c)

    @classmethod
    def separable_calls(cls, weights, K: float) -> "PayoffSpec":
        """sum_i w_i (s_i - K)^+."""
        return cls("SeparableCalls", K=K, weights=tuple(weights))

    # -----------------------------------------------------------------------
    @property
    def fixed_dim(self) -> Optional[int]:
        if self.kind in ("Call", "Butterfly"):
            return 1
        if self.weights is not None:
            return len(self.weights)
        return None

    @property
    def butterfly_weights(self) -> tuple[float, float]:
        """Coefficients (w1, w2) in (s-K1)^+ - w1 (s-K)^+ + w2 (s-K2)^+."""
        K1, K, K2 = self.K1, self.K, self.K2
        return (K2 - K1) / (K2 - K), (K - K1) / (K2 - K)

    def lipschitz(self, d: int = 1) -> float:
        """Euclidean Lipschitz constant of the payoff."""
        if self.kind == "Call" or self.kind == "CallOnMax":
            return 1.0
        if self.kind == "Butterfly":
            return 1.0
        if self.kind == "Constant":
            return 0.0
        return float(np.linalg.norm(self.weights))

    def evaluate(self, s) -> np.ndarray:
        """Payoff at points s; shape (P,) for 1d payoffs, (P, d) otherwise."""
        s = np.asarray(s, dtype=float)
        k = self.kind
        if k == "Call":
            return np.maximum(_flat1(s) - self.K, 0.0)
        if k == "Butterfly":
            x = _flat1(s)
            w1, w2 = self.butterfly_weights
            return (np.maximum(x - self.K1, 0) - w1 * np.maximum(x - self.K, 0)
                    + w2 * np.maximum(x - self.K2, 0))
        S = np.atleast_2d(s) if s.ndim <= 2 else s
        if s.ndim == 1 and self.fixed_dim not in (None, 1):
            S = s.reshape(1, -1)
        elif s.ndim == 1:
            S = s.reshape(-1, 1)
        if k == "Constant":
            return np.full(S.shape[0], float(self.value))
        if k == "BasketCall":
            return np.maximum(S @ np.asarray(self.weights) - self.K, 0.0)
        if k == "CallOnMax":
            return np.maximum(S.max(axis=1) - self.K, 0.0)
        if k == "SeparableCalls":
            return np.maximum(S - self.K, 0.0) @ np.asarray(self.weights)
        raise AssertionError(k)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "Constant":
            out["value"] = self.value
        else:
            out["K"] = self.K
        if self.kind == "Butterfly":
            out.update(K1=self.K1, K2=self.K2)
        if self.weights is not None:
            out["weights"] = list(self.weights)
        return out

    @classmethod
    def from_dict(cls, tab: dict, d: Optional[int] = None) -> "PayoffSpec":
        kind = tab["kind"]
        w = tab.get("weights")
        if w is None and kind in ("BasketCall", "SeparableCalls") and d is not None:
            w = [1.0 / d] * d
        return cls(kind, K=float(tab.get("K", 1.0)), K1=tab.get("K1"), K2=tab.get("K2"),
                   weights=None if w is None else tuple(w), value=float(tab.get("value", 0.0)))

    def log_payoff(self) -> "ButterflyLog":
        if self.kind != "Butterfly":
            raise ValueError("only the Butterfly payoff is square integrable in log coordinates")
        return ButterflyLog(self.K1, self.K, self.K2)


def _flat1(s: np.ndarray) -> np.ndarray:
    return s.reshape(-1) if s.ndim != 0 else s


# ---------------------------------------------------------------------------
# log-coordinate payoffs v0(x) = phi(exp(x))
# ---------------------------------------------------------------------------


class LogPayoff:
    d: int = 1

    def __call__(self, x) -> np.ndarray:
        raise NotImplementedError

    def fourier(self, xi) -> np.ndarray:
        raise NotImplementedError

    def envelope(self, r) -> np.ndarray:
        """Upper bound on |v0_hat| as a function of |xi| = r."""
        raise NotImplementedError

    def l2_norm(self) -> float:
        raise NotImplementedError

    def fourier_l1(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class ButterflyLog(LogPayoff):
    K1: float
    K: float
    K2: float
    d: int = field(default=1, init=False)

    @property
    def logs(self):
        return np.log(self.K1), np.log(self.K), np.log(self.K2)

    @property
    def support(self) -> tuple[float, float]:
        return float(np.log(self.K1)), float(np.log(self.K2))

    def __call__(self, x) -> np.ndarray:
        return PayoffSpec.butterfly(self.K1, self.K, self.K2).evaluate(np.exp(np.asarray(x, float)))

    def fourier(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        l1, l0, l2 = self.logs
        w1 = (self.K2 - self.K1) / (self.K2 - self.K)
        z = 1.0 - 1j * xi

        def E(u, w):
            return (np.exp(z * w) - np.exp(z * u)) / z

        def C(u, w):
            return np.exp(-1j * xi * 0.5 * (u + w)) * (w - u) * np.sinc(xi * (w - u) / (2 * np.pi))

        tot = E(l1, l0) - self.K1 * C(l1, l0) + (1 - w1) * E(l0, l2) + (w1 * self.K - self.K1) * C(l0, l2)
        return tot / np.sqrt(2 * np.pi)

    def _variation_of_derivative(self) -> float:
        K1, K, K2 = self.K1, self.K, self.K2
        w1 = (K2 - K1) / (K2 - K)
        jumps = K1 + w1 * K + abs(1 - w1) * K2
        return jumps + (K - K1) + abs(1 - w1) * (K2 - K)

    def _integrate(self, g) -> float:
        lo, mid, hi = self.logs
        f = lambda x: g(float(self(np.array([x]))[0]))
        return sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-13)[0] for a, b in ((lo, mid), (mid, hi)))

    def l1_norm(self) -> float:
        return self._integrate(abs)

    def envelope(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            tail = self._variation_of_derivative() / (r * r)
        return np.minimum(self.l1_norm(), tail) / np.sqrt(2 * np.pi)

    def l2_norm(self) -> float:
        return float(np.sqrt(self._integrate(lambda v: v * v)))

    def fourier_l1(self) -> float:
        f = lambda t: float(np.abs(self.fourier(np.array([t])))[0])
        val = integrate.quad(f, 0, 50, limit=500)[0] + integrate.quad(f, 50, np.inf, limit=500)[0]
        return 2 * val


@dataclass(frozen=True)
class GaussianLog(LogPayoff):
    """v0(x) = amplitude exp(-|x - center|^2 / (2 width^2)) on R^d."""

    d: int = 1
    width: float = 1.0
    amplitude: float = 1.0
    center: Optional[tuple] = None

    def _c(self) -> np.ndarray:
        return np.zeros(self.d) if self.center is None else np.asarray(self.center, float)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        X = x.reshape(-1, self.d)
        r2 = np.sum((X - self._c()) ** 2, axis=1)
        return self.amplitude * np.exp(-0.5 * r2 / self.width**2)

    def fourier(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        X = xi.reshape(-1, self.d)
        r2 = np.sum(X * X, axis=1)
        ph = np.exp(-1j * (X @ self._c()))
        out = self.amplitude * self.width**self.d * np.exp(-0.5 * self.width**2 * r2) * ph
        return out.reshape(xi.shape[:-1] if self.d > 1 else xi.shape)

    def envelope(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.amplitude * self.width**self.d * np.exp(-0.5 * self.width**2 * r * r)

    def l2_norm(self) -> float:
        return float(self.amplitude * (np.pi * self.width**2) ** (self.d / 4))

    def fourier_l1(self) -> float:
        return float(self.amplitude * (2 * np.pi) ** (self.d / 2))
