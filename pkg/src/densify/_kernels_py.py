"""Pure-Python (numpy) implementation of the hot kernels.

Mirrors ``_kernels.pyx`` function by function; used when the compiled
extension is unavailable or ``DENSIFY_PURE_PYTHON`` is set.
"""
import numpy as np

SERIES_LOG = 0
SERIES_EXP = 1

_I = np.eye(3)
_BOX_T_II = np.einsum("ik,jl->ijkl", _I, _I)


def series_gradient(A, kind, rtol=1e-16, max_terms=200):
    """Sum ``sum_n c_n sum_r A^r [.] A^(n-1-r)`` for symmetric ``A``.

    The result is the *unsymmetrized* operator ``X -> sum c_n A^r X A^s``;
    callers compose with the symmetrizer. ``c_n = (-1)^(n+1)/n`` for
    ``kind == SERIES_LOG`` (argument ``Y - I``) and ``1/n!`` for
    ``SERIES_EXP``.

    Uses ``W_{n+1}[X] = A W_n[X] + X A^n`` so each term costs one 3x3x3x3
    contraction instead of ``n`` products.

    Returns
    -------
    acc : ndarray, shape (3, 3, 3, 3)
    n_terms : int
    """
    A = np.ascontiguousarray(A, dtype=float)
    W = _BOX_T_II.copy()
    acc = W.copy()
    apow = A.copy()
    coef = 1.0
    n = 1
    while n < max_terms:
        W = np.einsum("im,mjkl->ijkl", A, W)
        W += np.einsum("ik,jl->ijkl", _I, apow)
        n += 1
        if kind == SERIES_LOG:
            coef = (-1.0) ** (n + 1) / n
        else:
            coef = coef / n
        term = coef * W
        acc += term
        apow = apow @ A
        if np.sqrt(np.sum(term * term)) < rtol * np.sqrt(np.sum(acc * acc)):
            break
    return acc, n


def compose4(L1, L2):
    """``(L1 L2)_ijkl = L1_ijmn L2_mnkl``."""
    return np.tensordot(L1, L2, axes=2)


def apply4(L, C):
    return np.tensordot(L, C, axes=2)
