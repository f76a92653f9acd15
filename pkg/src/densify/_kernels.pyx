# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_kernels_py`` for the reference version."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

SERIES_LOG = 0
SERIES_EXP = 1


def series_gradient(A, int kind, double rtol=1e-16, int max_terms=200):
    cdef double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef double w[81]
    cdef double wn[81]
    cdef double apow[9]
    cdef double tmp[9]
    cdef double[:, :, :, ::1] acc
    cdef double coef = 1.0, tnorm, anorm, t
    cdef int i, j, k, l, m, n, idx
    out = np.zeros((3, 3, 3, 3))
    acc = out

    for idx in range(81):
        w[idx] = 0.0
    for i in range(3):
        for j in range(3):
            w[i * 27 + j * 9 + i * 3 + j] = 1.0
            acc[i, j, i, j] = 1.0
            apow[i * 3 + j] = a[i, j]

    n = 1
    while n < max_terms:
        # W <- A W + I (x)_t A^n
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    for l in range(3):
                        t = 0.0
                        for m in range(3):
                            t += a[i, m] * w[m * 27 + j * 9 + k * 3 + l]
                        if i == k:
                            t += apow[j * 3 + l]
                        wn[i * 27 + j * 9 + k * 3 + l] = t
        for idx in range(81):
            w[idx] = wn[idx]
        n += 1
        if kind == SERIES_LOG:
            coef = (1.0 if (n + 1) % 2 == 0 else -1.0) / n
        else:
            coef = coef / n
        tnorm = 0.0
        anorm = 0.0
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    for l in range(3):
                        t = coef * w[i * 27 + j * 9 + k * 3 + l]
                        acc[i, j, k, l] += t
                        tnorm += t * t
                        anorm += acc[i, j, k, l] * acc[i, j, k, l]
        for i in range(3):
            for j in range(3):
                t = 0.0
                for m in range(3):
                    t += apow[i * 3 + m] * a[m, j]
                tmp[i * 3 + j] = t
        for idx in range(9):
            apow[idx] = tmp[idx]
        if sqrt(tnorm) < rtol * sqrt(anorm):
            break
    return out, n


def compose4(L1, L2):
    cdef double[:, :, :, ::1] x = np.ascontiguousarray(L1, dtype=np.float64)
    cdef double[:, :, :, ::1] y = np.ascontiguousarray(L2, dtype=np.float64)
    out = np.empty((3, 3, 3, 3))
    cdef double[:, :, :, ::1] z = out
    cdef int i, j, k, l, m, n
    cdef double t
    for i in range(3):
        for j in range(3):
            for k in range(3):
                for l in range(3):
                    t = 0.0
                    for m in range(3):
                        for n in range(3):
                            t += x[i, j, m, n] * y[m, n, k, l]
                    z[i, j, k, l] = t
    return out


def apply4(L, C):
    cdef double[:, :, :, ::1] x = np.ascontiguousarray(L, dtype=np.float64)
    cdef double[:, ::1] c = np.ascontiguousarray(C, dtype=np.float64)
    out = np.empty((3, 3))
    cdef double[:, ::1] z = out
    cdef int i, j, k, l
    cdef double t
    for i in range(3):
        for j in range(3):
            t = 0.0
            for k in range(3):
                for l in range(3):
                    t += x[i, j, k, l] * c[k, l]
            z[i, j] = t
    return out
