"""Reduced Rank Extrapolation on a window of iterates.

For a window ``x_n, ..., x_{n+k+1}`` the extrapolant is

    s_{n,k} = x_n - U_{k-1} W_{k-1}^+ u_n

where the columns of ``U`` are first differences and those of ``W`` second
differences. Equivalently ``s_{n,k} = sum_i gamma_i x_{n+i}`` with weights that
sum to one and minimize ``||U_k gamma||``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from . import linalg
from .errors import DegenerateWindowError


@dataclass(frozen=True)
class IterateWindow:
    """``k + 2`` consecutive iterates starting at index ``n``.

    ``vectors`` is stored as an array of shape ``(k + 2, N)``.
    """

    vectors: np.ndarray
    n: int = 0

    def __post_init__(self):
        X = np.asarray(self.vectors, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise ValueError("window vectors must all be 1-D of the same length")
        if X.shape[0] < 3:
            raise ValueError(f"window needs at least 3 vectors (k >= 1), got {X.shape[0]}")
        if X.shape[1] < 1:
            raise ValueError("vectors must have dimension >= 1")
        if not np.all(np.isfinite(X)):
            raise ValueError("window contains non-finite entries")
        if self.n < 0:
            raise ValueError("n must be >= 0")
        object.__setattr__(self, "vectors", X)

    @classmethod
    def from_list(cls, xs, n=0):
        shapes = {np.shape(x) for x in xs}
        if len(shapes) > 1:
            raise ValueError(f"mismatched vector dimensions in window: {sorted(shapes)}")
        return cls(np.array([np.atleast_1d(np.asarray(x, dtype=np.float64)) for x in xs]), n)

    @property
    def k(self):
        return self.vectors.shape[0] - 2

    @property
    def dim(self):
        return self.vectors.shape[1]


@dataclass(frozen=True)
class DifferenceMatrices:
    """``U`` (N x (k+1)) of first differences and ``W`` (N x k) of second differences."""

    U: np.ndarray
    W: np.ndarray


@dataclass(frozen=True)
class ExtrapolationResult:
    """Output of :func:`extrapolate`.

    ``w_rank`` is the numerical rank of ``W``; ``rank_deficient`` flags
    ``w_rank < k``, in which case ``xi`` is the minimum-norm solution.
    ``converged`` is set when the window was already stationary.
    """

    s_nk: np.ndarray
    gamma: np.ndarray
    xi: np.ndarray
    residual_norm: float
    gamma_abs_sum: float
    n: int
    k: int
    dim: int
    w_rank: int
    rank_deficient: bool = False
    converged: bool = False
    extra: dict = field(default_factory=dict)


def build_differences(w):
    """First and second differences of a window (columns are ``u_{n+i}``, ``w_{n+i}``)."""
    if not isinstance(w, IterateWindow):
        w = IterateWindow.from_list(list(w))
    X = w.vectors
    U = np.diff(X, axis=0).T
    W = np.diff(U, axis=1)[:, : w.k]
    return DifferenceMatrices(U=U, W=W)


def xi_to_gamma(xi):
    """``gamma_0 = 1 - xi_0``, ``gamma_i = xi_{i-1} - xi_i``, ``gamma_k = xi_{k-1}``."""
    xi = np.asarray(xi, dtype=np.float64)
    gamma = np.empty(xi.size + 1)
    gamma[0] = 1.0 - xi[0]
    gamma[1:-1] = xi[:-1] - xi[1:]
    gamma[-1] = xi[-1]
    return gamma


def gamma_to_xi(gamma):
    """``xi_j = sum_{i > j} gamma_i``."""
    gamma = np.asarray(gamma, dtype=np.float64)
    return np.cumsum(gamma[::-1])[::-1][1:]


def _zero_tol(X):
    scale = max(1.0, float(np.max(np.abs(X))))
    return 10.0 * X.shape[1] * linalg.EPS * scale


def extrapolate(w, rank_tol=None):
    """Compute the RRE approximation ``s_{n,k}`` from a window.

    Parameters
    ----------
    w : IterateWindow or sequence of vectors
    rank_tol : float, optional
        Relative rank cutoff for ``W^+``; see :func:`rrextrap.linalg.pseudoinverse`.

    Returns
    -------
    ExtrapolationResult

    Raises
    ------
    DegenerateWindowError
        If ``W`` vanishes but ``u_n`` does not.
    """
    if not isinstance(w, IterateWindow):
        w = IterateWindow.from_list(list(w))
    X = w.vectors
    k, N = w.k, w.dim
    d = build_differences(w)
    u_n = d.U[:, 0]
    atol = _zero_tol(X)

    if np.max(np.abs(d.W)) <= atol:
        if np.max(np.abs(u_n)) <= atol:
            gamma = np.zeros(k + 1)
            gamma[0] = 1.0
            return ExtrapolationResult(
                s_nk=X[0].copy(), gamma=gamma, xi=np.zeros(k),
                residual_norm=float(np.linalg.norm(u_n)), gamma_abs_sum=1.0,
                n=w.n, k=k, dim=N, w_rank=0, rank_deficient=True, converged=True,
            )
        raise DegenerateWindowError(
            f"second differences vanish at n={w.n} while ||u_n||={np.linalg.norm(u_n):.3e}"
        )

    f = linalg.svd(d.W, rank_tol)
    W_pinv = linalg.pinv_from_factors(f)
    xi = -(W_pinv @ u_n)
    s_nk = X[0] + d.U[:, :k] @ xi
    gamma = xi_to_gamma(xi)
    residual = float(np.linalg.norm(u_n + d.W @ xi))
    return ExtrapolationResult(
        s_nk=s_nk, gamma=gamma, xi=xi, residual_norm=residual,
        gamma_abs_sum=float(np.sum(np.abs(gamma))),
        n=w.n, k=k, dim=N, w_rank=f.rank, rank_deficient=f.rank < k,
    )


def gamma_direct(U_k):
    """Solve ``min ||U_k gamma||`` subject to ``sum(gamma) = 1`` directly.

    Parametrizes the affine constraint set as ``gamma = 1/(k+1) + Z y`` with
    ``Z`` an orthonormal basis of the complement of the ones vector, then solves
    the unconstrained least-squares problem in ``y``. Independent of the
    second-difference route used by :func:`extrapolate`; kept as a cross-check.
    """
    U_k = np.asarray(U_k, dtype=np.float64)
    if U_k.ndim == 1:
        U_k = U_k.reshape(-1, 1)
    m = U_k.shape[1]
    e0 = np.zeros(m)
    e0[0] = 1.0
    if m == 1 or not np.any(U_k):
        return e0
    center = np.full(m, 1.0 / m)
    Z = null_space(np.ones((1, m)))
    # The cutoff is relative to ||U_k||, not ||U_k Z||: when every column is
    # identical U_k Z is pure rounding noise and must count as zero.
    B = U_k @ Z
    cutoff = max(U_k.shape) * np.finfo(np.float64).eps * np.linalg.norm(U_k, 2)
    Ub, sb, Vbt = np.linalg.svd(B, full_matrices=False)
    keep = sb > cutoff
    y = Vbt[keep].T @ ((Ub[:, keep].T @ -(U_k @ center)) / sb[keep])
    return center + Z @ y
