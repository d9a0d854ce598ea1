# cython: language_level=3
"""Compiled accumulation kernels.

Semantics are defined by ``_fallback.py``; keep the two in sync. The hot
loop fuses the t_i computation with the weighted accumulations so each
data row is touched once.
"""

from libc.math cimport log, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"


def sum_log_t(Y, w, mu):
    """Weighted sum of log(sqrt(1 + mu.mu) - y_i.mu); w=None means ones."""
    cdef double[:, ::1] Yv = np.ascontiguousarray(Y, dtype=np.float64)
    cdef double[::1] muv = np.ascontiguousarray(mu, dtype=np.float64)
    cdef double[::1] wv
    cdef Py_ssize_t n = Yv.shape[0], q = Yv.shape[1], i, j
    cdef double s2 = 1.0, dot, acc = 0.0, s
    cdef bint weighted = w is not None

    for j in range(q):
        s2 += muv[j] * muv[j]
    s = sqrt(s2)
    if weighted:
        wv = np.ascontiguousarray(w, dtype=np.float64)
        for i in range(n):
            dot = 0.0
            for j in range(q):
                dot += Yv[i, j] * muv[j]
            acc += wv[i] * log(s - dot)
    else:
        for i in range(n):
            dot = 0.0
            for j in range(q):
                dot += Yv[i, j] * muv[j]
            acc += log(s - dot)
    return acc


def location_stats(Y, w, mu):
    """Tuple (slog, s1, s2, sy1, sy2, syy2); see the fallback docstring."""
    cdef double[:, ::1] Yv = np.ascontiguousarray(Y, dtype=np.float64)
    cdef double[::1] muv = np.ascontiguousarray(mu, dtype=np.float64)
    cdef double[::1] wv
    cdef Py_ssize_t n = Yv.shape[0], q = Yv.shape[1], i, j, k
    cdef double s2acc = 1.0, s, dot, t, wi, w1, w2
    cdef double slog = 0.0, s1 = 0.0, s2 = 0.0, yj
    cdef bint weighted = w is not None

    sy1_arr = np.zeros(q, dtype=np.float64)
    sy2_arr = np.zeros(q, dtype=np.float64)
    syy2_arr = np.zeros((q, q), dtype=np.float64)
    cdef double[::1] sy1 = sy1_arr
    cdef double[::1] sy2 = sy2_arr
    cdef double[:, ::1] syy2 = syy2_arr

    for j in range(q):
        s2acc += muv[j] * muv[j]
    s = sqrt(s2acc)
    if weighted:
        wv = np.ascontiguousarray(w, dtype=np.float64)

    for i in range(n):
        dot = 0.0
        for j in range(q):
            dot += Yv[i, j] * muv[j]
        t = s - dot
        wi = wv[i] if weighted else 1.0
        slog += wi * log(t)
        w1 = wi / t
        w2 = w1 / t
        s1 += w1
        s2 += w2
        for j in range(q):
            yj = Yv[i, j]
            sy1[j] += w1 * yj
            sy2[j] += w2 * yj
            # accumulate the upper triangle only; mirrored below
            for k in range(j, q):
                syy2[j, k] += w2 * yj * Yv[i, k]

    for j in range(q):
        for k in range(j + 1, q):
            syy2[k, j] = syy2[j, k]

    return slog, s1, s2, sy1_arr, sy2_arr, syy2_arr
