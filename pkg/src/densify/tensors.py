"""Second- and fourth-order tensor algebra on 3x3 arrays.

Second-order tensors are ``(3, 3)`` float arrays, fourth-order tensors are
``(3, 3, 3, 3)`` arrays acting as ``L[C]_ij = L_ijkl C_kl``. Composition is
``(L1 L2)_ijkl = L1_ijmn L2_mnkl``.

The four products between second-order tensors ``A``, ``B`` act on ``C`` as::

    (A (x) B)[C]   = (C : B^T) A
    (A box B)[C]   = 1/2 A (C + C^T) B^T
    (A box_t B)[C] = A C B^T
    (A box_s B)[C] = A C^T B^T

so that ``box = (box_t + box_s) / 2``.
"""
import numpy as np

from ._backend import kernels
from .errors import NonInvertible, NotSPD, OutOfConvergenceRadius, Singular

I3 = np.eye(3)

#: Convergence guard on the spectral radius of ``Y - I`` for the log series.
LOG_SERIES_GUARD = 0.9
#: Relative truncation threshold and hard cap for the gradient series.
SERIES_RTOL = 1e-16
SERIES_MAX_TERMS = 200
#: Eigenvalues closer than this (relative) are treated as coincident.
COINCIDENT_RTOL = 1e-9
#: Condition-number ceiling for 6x6 inversion.
COND_MAX = 1e14

_MANDEL_IDX = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))
_MANDEL_W = np.array([1.0, 1.0, 1.0, np.sqrt(2.0), np.sqrt(2.0), np.sqrt(2.0)])


# ---------------------------------------------------------------------------
# elementary operations
# ---------------------------------------------------------------------------

def sym(A):
    return 0.5 * (A + A.T)


def skew(A):
    return 0.5 * (A - A.T)


def dev(A):
    return A - (np.trace(A) / 3.0) * I3


def ddot(A, B):
    """Double contraction ``A : B = A_ij B_ij``."""
    return float(np.sum(A * B))


def norm(A):
    return float(np.sqrt(np.sum(A * A)))


def apply(L, C):
    """Apply a fourth-order tensor to a second-order tensor."""
    return kernels.apply4(L, C)


def compose(*Ls):
    """Compose fourth-order tensors left to right, ``L1 L2 ... Ln``."""
    out = Ls[0]
    for L in Ls[1:]:
        out = kernels.compose4(out, L)
    return out


def transpose_major(L):
    return np.ascontiguousarray(L.transpose(2, 3, 0, 1))


# ---------------------------------------------------------------------------
# tensor products
# ---------------------------------------------------------------------------

def outer(A, B):
    """``A (x) B`` with ``(A (x) B)[C] = (C : B^T) A``."""
    return np.einsum("ij,lk->ijkl", A, B)


def box_t(A, B):
    return np.einsum("ik,jl->ijkl", A, B)


def box_s(A, B):
    return np.einsum("il,jk->ijkl", A, B)


def box(A, B):
    return 0.5 * (box_t(A, B) + box_s(A, B))


_PRODUCTS = {
    "outer": outer, "⊗": outer,
    "box": box, "⊠": box,
    "box_t": box_t, "sot": box_t, "⊠t": box_t,
    "box_s": box_s, "sop": box_s, "⊠s": box_s,
}


def tensor_product(kind, A, B):
    """Fourth-order tensor for one of the four products (see module doc)."""
    try:
        return _PRODUCTS[kind](np.asarray(A, float), np.asarray(B, float))
    except KeyError:
        raise ValueError(f"unknown tensor product {kind!r}") from None


def tensor_product_apply(kind, A, B, C):
    """Evaluate ``(A * B)[C]`` straight from the defining formula."""
    A, B, C = (np.asarray(X, float) for X in (A, B, C))
    if kind in ("outer", "⊗"):
        return ddot(C, B.T) * A
    if kind in ("box", "⊠"):
        return 0.5 * A @ (C + C.T) @ B.T
    if kind in ("box_t", "sot", "⊠t"):
        return A @ C @ B.T
    if kind in ("box_s", "sop", "⊠s"):
        return A @ C.T @ B.T
    raise ValueError(f"unknown tensor product {kind!r}")


#: Symmetrizer ``I box I``.
SYMMETRIZER = box(I3, I3)
IDENTITY4 = box_t(I3, I3)
I_OUTER_I = outer(I3, I3)


# ---------------------------------------------------------------------------
# Mandel notation
# ---------------------------------------------------------------------------

def to_mandel_vector(A):
    A = sym(np.asarray(A, float))
    return np.array([A[i, j] for i, j in _MANDEL_IDX]) * _MANDEL_W


def from_mandel_vector(v):
    A = np.empty((3, 3))
    for a, (i, j) in enumerate(_MANDEL_IDX):
        A[i, j] = A[j, i] = v[a] / _MANDEL_W[a]
    return A


def to_mandel(L):
    """6x6 orthonormal-basis matrix of a fourth-order tensor.

    Minor symmetries are enforced by averaging over ``ij <-> ji`` and
    ``kl <-> lk``.
    """
    Ls = 0.25 * (L + L.transpose(1, 0, 2, 3) + L.transpose(0, 1, 3, 2)
                 + L.transpose(1, 0, 3, 2))
    M = np.empty((6, 6))
    for a, (i, j) in enumerate(_MANDEL_IDX):
        for b, (k, l) in enumerate(_MANDEL_IDX):
            M[a, b] = _MANDEL_W[a] * _MANDEL_W[b] * Ls[i, j, k, l]
    return M


def from_mandel(M):
    L = np.empty((3, 3, 3, 3))
    for a, (i, j) in enumerate(_MANDEL_IDX):
        for b, (k, l) in enumerate(_MANDEL_IDX):
            v = M[a, b] / (_MANDEL_W[a] * _MANDEL_W[b])
            L[i, j, k, l] = L[j, i, k, l] = L[i, j, l, k] = L[j, i, l, k] = v
    return L


def tensor4_invert(L, cond_max=COND_MAX):
    """Inverse of ``L`` restricted to symmetric tensors.

    Raises
    ------
    Singular
        If the 6x6 Mandel matrix has condition number above ``cond_max``.
    """
    M = to_mandel(L)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > cond_max:
        raise Singular(f"fourth-order tensor is singular (cond = {cond:.3e})")
    return from_mandel(np.linalg.inv(M))


def solve4(L, B):
    """Symmetric ``X`` with ``L[X] = sym(B)``."""
    M = to_mandel(L)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise Singular(f"fourth-order tensor is singular (cond = {cond:.3e})")
    return from_mandel_vector(np.linalg.solve(M, to_mandel_vector(B)))


# ---------------------------------------------------------------------------
# polar decomposition, log, exp
# ---------------------------------------------------------------------------

def polar_decompose(F, side="right"):
    """Polar decomposition via SVD.

    Returns ``(R, U)`` with ``F = R U`` for ``side='right'`` and ``(R, V)``
    with ``F = V R`` for ``side='left'``.
    """
    F = np.asarray(F, float)
    scale = max(norm(F), 1e-300)
    det = np.linalg.det(F)
    if not det > 1e-14 * scale ** 3:
        raise NonInvertible(f"det F = {det:.3e} is not positive")
    W, s, Zt = np.linalg.svd(F)
    R = W @ Zt
    if side == "right":
        return R, sym((Zt.T * s) @ Zt)
    if side == "left":
        return R, sym((W * s) @ W.T)
    raise ValueError("side must be 'right' or 'left'")


def _eigh_sym(A):
    return np.linalg.eigh(sym(np.asarray(A, float)))


def tensor_log(A):
    """Logarithm of a symmetric positive definite tensor."""
    lam, N = _eigh_sym(A)
    if not lam[0] > 1e-14 * max(abs(lam[-1]), 1e-300):
        raise NotSPD(f"eigenvalues {lam} are not all positive")
    return sym((N * np.log(lam)) @ N.T)


def tensor_exp(A):
    """Exponential of a symmetric tensor."""
    lam, N = _eigh_sym(A)
    return sym((N * np.exp(lam)) @ N.T)


def tensor_power(A, r):
    """``A**r`` for symmetric positive definite ``A`` and real ``r``."""
    lam, N = _eigh_sym(A)
    if not lam[0] > 0.0:
        raise NotSPD(f"eigenvalues {lam} are not all positive")
    return sym((N * lam ** r) @ N.T)


# ---------------------------------------------------------------------------
# gradients of isotropic tensor functions
# ---------------------------------------------------------------------------

def _dd_log(a, b):
    # (log a - log b)/(a - b) without cancellation
    if abs(a - b) <= COINCIDENT_RTOL * max(a, b):
        return 2.0 / (a + b)
    return np.log1p((a - b) / b) / (a - b)


def _dd_exp(a, b):
    d = a - b
    if abs(d) <= COINCIDENT_RTOL * max(abs(a), abs(b), 1.0):
        return np.exp(0.5 * (a + b))
    return np.exp(b) * np.expm1(d) / d


def spectral_gradient(A, kind):
    """Gradient of ``log`` or ``exp`` at symmetric ``A`` by eigenprojections.

    Uses the divided-difference (Daleckii-Krein) form; coincident eigenvalues
    fall back to the derivative.
    """
    lam, N = _eigh_sym(A)
    if kind == "log":
        if not lam[0] > 0.0:
            raise NotSPD(f"eigenvalues {lam} are not all positive")
        dd = _dd_log
    elif kind == "exp":
        dd = _dd_exp
    else:
        raise ValueError(kind)
    Fm = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            Fm[i, j] = dd(lam[i], lam[j])
    D = np.einsum("ij,ai,bj,ki,lj->abkl", Fm, N, N, N, N)
    return 0.5 * (D + D.transpose(0, 1, 3, 2))


def log_series_radius(Y):
    """Spectral radius of ``Y - I``."""
    return float(np.max(np.abs(np.linalg.eigvalsh(sym(np.asarray(Y, float))) - 1.0)))


def _symmetrize_right(W):
    return 0.5 * (W + W.transpose(0, 1, 3, 2))


def dlog_dY(Y, method="series", guard=LOG_SERIES_GUARD):
    """Fourth-order gradient of ``log Y`` for symmetric positive definite ``Y``.

    Parameters
    ----------
    method : {'series', 'auto', 'spectral'}
        ``'series'`` sums ``sum_n (-1)^(n+1)/n sum_r (Y-I)^r box
        (Y-I)^(n-1-r)`` and raises if the spectral radius of ``Y - I``
        reaches ``guard``; ``'auto'`` switches to the eigenprojection form
        in that case; ``'spectral'`` always uses the eigenprojection form.

    Raises
    ------
    OutOfConvergenceRadius
        ``method='series'`` outside the guard.
    """
    Y = np.asarray(Y, float)
    if method == "spectral":
        return spectral_gradient(Y, "log")
    rho = log_series_radius(Y)
    if rho >= guard:
        if method == "auto":
            return spectral_gradient(Y, "log")
        raise OutOfConvergenceRadius(
            f"spectral radius of Y - I is {rho:.4f} >= {guard}")
    W, _ = kernels.series_gradient(Y - I3, 0, SERIES_RTOL, SERIES_MAX_TERMS)
    return _symmetrize_right(W)


def dexp_dE(E, method="series"):
    """Fourth-order gradient of ``exp E`` for symmetric ``E``.

    ``method='series'`` sums ``sum_n 1/n! sum_r E^r box E^(n-1-r)``;
    ``'spectral'`` uses eigenprojections.
    """
    E = np.asarray(E, float)
    if method == "spectral":
        return spectral_gradient(E, "exp")
    W, _ = kernels.series_gradient(sym(E), 1, SERIES_RTOL, SERIES_MAX_TERMS)
    return _symmetrize_right(W)
