# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel: fused evaluation of a two-layer ReLU network."""
import numpy as np


cdef inline double _relu(double z) nogil:
    return z if z > 0.0 else 0.0


def shallow_realize(const double[:, ::1] W1, const double[::1] b1,
                    const double[:, ::1] W2T, const double[::1] b2,
                    const double[:, ::1] X):
    """Rows of X through x -> W2 relu(W1 x + b1) + b2; W2T is W2 transposed (H, O)."""
    cdef Py_ssize_t P = X.shape[0], H = W1.shape[0], d = W1.shape[1], O = W2T.shape[1]
    cdef Py_ssize_t p, h, i, j, H4 = H - H % 4
    cdef double z, x0, a0, a1, a2, a3
    out = np.empty((P, O), dtype=np.float64)
    cdef double[:, ::1] o = out
    if O == 1 and d == 1:
        # scalar input and output: four branch-free partial sums
        with nogil:
            for p in range(P):
                x0 = X[p, 0]
                a0 = a1 = a2 = a3 = 0.0
                for h in range(0, H4, 4):
                    a0 = a0 + W2T[h, 0] * _relu(W1[h, 0] * x0 + b1[h])
                    a1 = a1 + W2T[h + 1, 0] * _relu(W1[h + 1, 0] * x0 + b1[h + 1])
                    a2 = a2 + W2T[h + 2, 0] * _relu(W1[h + 2, 0] * x0 + b1[h + 2])
                    a3 = a3 + W2T[h + 3, 0] * _relu(W1[h + 3, 0] * x0 + b1[h + 3])
                for h in range(H4, H):
                    a0 = a0 + W2T[h, 0] * _relu(W1[h, 0] * x0 + b1[h])
                o[p, 0] = b2[0] + ((a0 + a1) + (a2 + a3))
        return out
    with nogil:
        for p in range(P):
            for j in range(O):
                o[p, j] = b2[j]
            for h in range(H):
                z = b1[h]
                for i in range(d):
                    z = z + W1[h, i] * X[p, i]
                if z > 0.0:
                    for j in range(O):
                        o[p, j] = o[p, j] + W2T[h, j] * z
    return out


def scaled_call_average(const double[::1] scale, const double[::1] s, double K):
    """mean_k max(s_p * scale_k - K, 0) for each grid point s_p."""
    cdef Py_ssize_t P = s.shape[0], n = scale.shape[0], p, k, n4 = n - n % 4
    cdef double a0, a1, a2, a3, sp
    out = np.empty(P, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for p in range(P):
            sp = s[p]
            a0 = a1 = a2 = a3 = 0.0
            for k in range(0, n4, 4):
                a0 = a0 + _relu(sp * scale[k] - K)
                a1 = a1 + _relu(sp * scale[k + 1] - K)
                a2 = a2 + _relu(sp * scale[k + 2] - K)
                a3 = a3 + _relu(sp * scale[k + 3] - K)
            for k in range(n4, n):
                a0 = a0 + _relu(sp * scale[k] - K)
            o[p] = ((a0 + a1) + (a2 + a3)) / n
    return out
