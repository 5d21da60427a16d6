"""Dense linear-algebra substrate: SVD, pseudoinverse, minimum-norm least squares.

Everything here works on real ``float64`` numpy arrays. The SVD is LAPACK's
deterministic divide-and-conquer kernel (via :func:`numpy.linalg.svd`), so
results are reproducible bit-for-bit on a given platform.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure, ZeroRankError

EPS = np.finfo(np.float64).eps


def as_matrix(A, name="A"):
    """Validate and convert ``A`` to a finite 2-D float array."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def default_rank_tol(shape):
    """Relative rank cutoff ``max(rows, cols) * eps``."""
    return max(shape) * EPS


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``A = U @ diag(s) @ Vt`` plus the numerical rank.

    Attributes
    ----------
    U : ndarray, shape (m, p)
    s : ndarray, shape (p,)
        Singular values, non-increasing, ``p = min(m, n)``.
    Vt : ndarray, shape (p, n)
    rank : int
        Number of singular values strictly above ``rank_tol * s[0]``.
    rank_tol : float
    """

    U: np.ndarray
    s: np.ndarray
    Vt: np.ndarray
    rank: int
    rank_tol: float

    def reconstruct(self):
        return (self.U * self.s) @ self.Vt


def svd(A, rank_tol=None):
    """Thin singular value decomposition of a finite real matrix.

    Parameters
    ----------
    A : array_like, shape (m, n)
    rank_tol : float, optional
        Relative cutoff used for the reported numerical rank. Defaults to
        :func:`default_rank_tol`.

    Returns
    -------
    SvdFactors

    Raises
    ------
    NumericalFailure
        If the LAPACK kernel does not converge or returns non-finite factors.
    """
    A = as_matrix(A)
    if rank_tol is None:
        rank_tol = default_rank_tol(A.shape)
    if rank_tol < 0:
        raise ValueError("rank_tol must be non-negative")
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    if not (np.all(np.isfinite(U)) and np.all(np.isfinite(s)) and np.all(np.isfinite(Vt))):
        raise NumericalFailure("SVD produced non-finite factors")
    rank = int(np.count_nonzero(s > rank_tol * s[0])) if s[0] > 0 else 0
    return SvdFactors(U=U, s=s, Vt=Vt, rank=rank, rank_tol=float(rank_tol))


def pseudoinverse(A, rank_tol=None):
    """Moore-Penrose pseudoinverse via the SVD.

    Singular values at or below ``rank_tol * sigma_1`` are treated as zero; the
    zero matrix maps to the (transposed-shape) zero matrix.
    """
    return pinv_from_factors(svd(A, rank_tol))


def pinv_from_factors(f):
    """Pseudoinverse assembled from precomputed :class:`SvdFactors`."""
    r = f.rank
    if r == 0:
        return np.zeros((f.Vt.shape[1], f.U.shape[0]))
    return (f.Vt[:r].T / f.s[:r]) @ f.U[:, :r].T


def min_norm_lsq(A, b, rank_tol=None):
    """Minimum-norm minimizer of ``||A x - b||``, i.e. ``A^+ b``."""
    A = as_matrix(A)
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1 or b.shape[0] != A.shape[0]:
        raise ValueError(f"b has shape {b.shape}, expected ({A.shape[0]},)")
    return pseudoinverse(A, rank_tol) @ b


def smallest_nonzero_singular(A, rank_tol=None):
    """Smallest singular value above the rank cutoff, equal to ``1/||A^+||``.

    Raises
    ------
    ZeroRankError
        If ``A`` is numerically zero.
    """
    f = svd(A, rank_tol)
    if f.rank == 0:
        raise ZeroRankError("matrix is numerically zero")
    return float(f.s[f.rank - 1])


def spectral_norm(A):
    """Largest singular value (operator 2-norm); 0 for an empty matrix."""
    A = np.asarray(A, dtype=np.float64)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))
