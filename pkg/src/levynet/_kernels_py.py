"""Numpy fallback with the same signatures as the compiled kernels."""
import numpy as np

_CHUNK = 1 << 22  # elements per temporary block


def shallow_realize(W1, b1, W2T, b2, X):
    X = np.ascontiguousarray(X, dtype=float)
    P, H = X.shape[0], W1.shape[0]
    out = np.empty((P, W2T.shape[1]))
    step = max(1, _CHUNK // max(H, 1))
    for lo in range(0, P, step):
        Z = X[lo:lo + step] @ W1.T
        Z += b1
        np.maximum(Z, 0.0, out=Z)
        out[lo:lo + step] = Z @ W2T + b2
    return out


def scaled_call_average(scale, s, K):
    s = np.asarray(s, dtype=float)
    out = np.empty(s.shape[0])
    step = max(1, _CHUNK // max(scale.shape[0], 1))
    for lo in range(0, s.shape[0], step):
        Z = np.multiply.outer(s[lo:lo + step], scale) - K
        np.maximum(Z, 0.0, out=Z)
        out[lo:lo + step] = Z.mean(axis=1)
    return out
