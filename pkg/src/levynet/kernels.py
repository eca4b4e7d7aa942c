"""Kernel selection: compiled extension if importable, numpy otherwise.

Set LEVYNET_PURE_PYTHON=1 to force the fallback.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("LEVYNET_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def shallow_realize(W1, b1, W2, b2, X, backend: str | None = None) -> np.ndarray:
    """Evaluate x -> W2 relu(W1 x + b1) + b2 at the rows of X; returns (P, out)."""
    W1 = np.asarray(W1)
    # the compiled loop beats BLAS only for scalar input and output
    if backend is None and (W1.shape[1] != 1 or np.asarray(W2).shape[0] != 1):
        backend = "python"
    impl = _pick(backend)
    X = np.atleast_2d(_c(X))
    return impl.shallow_realize(_c(W1), _c(b1).ravel(), _c(np.asarray(W2).T), _c(b2).ravel(), X)


def scaled_call_average(scale, s, K: float, backend: str | None = None) -> np.ndarray:
    impl = _pick(backend)
    return impl.scaled_call_average(_c(scale).ravel(), _c(s).ravel(), float(K))


def _pick(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _kernels_py
    if backend == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {backend!r}")
