"""Theory-side quantities for checking convergence bounds on concrete runs.

Most functions take the Jacobian at the solution ``F = F(s)``. Anything that
needs the companion linear sequence also needs the exact solution ``s`` and is
therefore only available on test problems.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from . import linalg
from .errors import UnsupportedDiagnosticError
from .rre import IterateWindow, build_differences, extrapolate

SYM_TOL = 1e-12


def jacobian_fd(f, x, h=1e-5):
    """Central-difference Jacobian, column ``j`` is ``(f(x + h e_j) - f(x - h e_j)) / 2h``."""
    if not h > 0:
        raise ValueError("h must be > 0")
    x = np.asarray(x, dtype=np.float64)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        col = (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2.0 * h)
        if not np.all(np.isfinite(col)):
            raise ValueError(f"non-finite evaluation while differencing column {j}")
        cols.append(col)
    return np.column_stack(cols)


def krylov_matrix(F, y, k):
    """``S(y) = [y | F y | ... | F^{k-1} y]``."""
    F = np.asarray(F, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    N = y.size
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > N:
        raise ValueError(f"k = {k} exceeds dimension {N}")
    if not np.linalg.norm(y) > 0:
        raise ValueError("y must be nonzero")
    S = np.empty((N, k))
    S[:, 0] = y
    for j in range(1, k):
        S[:, j] = F @ S[:, j - 1]
    return S


def sigma_k(S):
    """k-th singular value of an N x k matrix, 0 when rank-deficient."""
    s = np.linalg.svd(S, compute_uv=False)
    return float(s[S.shape[1] - 1]) if s.size >= S.shape[1] else 0.0


@dataclass
class GlobalAssumptionReport:
    sigma_k: List[float] = field(default_factory=list)
    minimum: Optional[float] = None


def check_global_assumption(F, e_points, k):
    """Report ``sigma_k(S(e))`` at each normalized error direction and their minimum.

    A positive running minimum is the empirical counterpart of the uniform
    bound on ``||S(e_n)^+||`` that the convergence theory has to assume.
    """
    values = []
    for e in e_points:
        e = np.asarray(e, dtype=np.float64)
        ne = np.linalg.norm(e)
        if ne == 0.0:
            values.append(0.0)
            continue
        values.append(sigma_k(krylov_matrix(F, e / ne, k)))
    return GlobalAssumptionReport(sigma_k=values, minimum=min(values) if values else None)


@dataclass
class ThetaBounds:
    """Upper bounds on the linear contraction factor ``theta_k``.

    ``power`` is always present. ``pd_hermitian_part`` needs the symmetric
    part of ``I - F`` to be positive definite; ``chebyshev`` (and its sharper
    companion ``chebyshev_exact = 1/T_k(...)``) need ``F`` symmetric with
    spectrum in ``[alpha, beta]``, ``beta < 1``.
    """

    k: int
    power: float
    pd_hermitian_part: Optional[float] = None
    chebyshev: Optional[float] = None
    chebyshev_exact: Optional[float] = None

    def applicable(self):
        return [v for v in (self.power, self.pd_hermitian_part, self.chebyshev, self.chebyshev_exact)
                if v is not None]

    def best(self):
        return min(self.applicable())


def _chebyshev_t(k, z):
    # z >= 1 here
    return math.cosh(k * math.acosh(z))


def theta_upper_bounds(F, k):
    """Compute the applicable upper bounds on ``theta_k`` for ``F``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    F = np.asarray(F, dtype=np.float64)
    N = F.shape[0]
    out = ThetaBounds(k=k, power=linalg.spectral_norm(F) ** k)

    E = np.eye(N) - F
    EH = 0.5 * (E + E.T)
    nu = float(np.linalg.eigvalsh(EH)[0])
    sig = linalg.spectral_norm(E)
    if nu > 0 and sig > 0:
        out.pd_hermitian_part = max(0.0, 1.0 - (nu / sig) ** 2) ** (k / 2.0)

    if np.max(np.abs(F - F.T)) <= SYM_TOL * max(1.0, np.max(np.abs(F))):
        lam = np.linalg.eigvalsh(0.5 * (F + F.T))
        alpha, beta = float(lam[0]), float(lam[-1])
        if beta < 1.0:
            if beta - alpha <= SYM_TOL:
                # single eigenvalue: annihilated by a degree-1 polynomial
                out.chebyshev = 0.0
                out.chebyshev_exact = 0.0
            else:
                kappa = (1.0 - alpha) / (1.0 - beta)
                rk = math.sqrt(kappa)
                out.chebyshev = 2.0 * ((rk - 1.0) / (rk + 1.0)) ** k
                out.chebyshev_exact = 1.0 / _chebyshev_t(k, (2.0 - alpha - beta) / (beta - alpha))
    return out


def companion_iterates(x_n, F, s, count):
    """``x~_n = x_n``, ``x~_{m+1} = s + F (x~_m - s)``; returns ``count + 1`` vectors."""
    F = np.asarray(F, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    xs = [np.asarray(x_n, dtype=np.float64)]
    for _ in range(count):
        xs.append(s + F @ (xs[-1] - s))
    return np.array(xs)


@dataclass
class PerturbationReport:
    """Linear/second-order split of a window against its companion sequence.

    ``s_check`` is the second-order correction reconstructed from the split,
    ``s_diff`` the direct difference ``s_{n,k} - s~_{n,k}``.
    """

    delta: float
    H_norm: float
    W_tilde_pinv_norm: float
    W_check_norm: float
    bound: Optional[float]
    delta_below_one: bool
    bound_holds: Optional[bool]
    W_tilde_rank: int
    k: int
    s_nk: np.ndarray
    s_tilde: np.ndarray
    s_check: np.ndarray
    s_diff: np.ndarray


def perturbation_quantities(x_window, F, s, k=None, rank_tol=None):
    """Compare a window against the linearized companion sequence started at ``x_n``.

    Parameters
    ----------
    x_window : array_like, shape (k + 2, N)
        Iterates ``x_n .. x_{n+k+1}`` of the nonlinear map.
    F : array_like
        Jacobian at the solution.
    s : array_like or None
        Exact solution.

    Raises
    ------
    UnsupportedDiagnosticError
        If ``s`` is not known.
    """
    if s is None:
        raise UnsupportedDiagnosticError("perturbation quantities need the exact solution")
    X = np.asarray(x_window, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if k is None:
        k = X.shape[0] - 2
    X = X[:k + 2]
    Xt = companion_iterates(X[0], F, np.asarray(s, dtype=np.float64).reshape(X.shape[1]), k + 1)
    d, dt = build_differences(IterateWindow(X)), build_differences(IterateWindow(Xt))

    U, W, u_n = d.U[:, :k], d.W, d.U[:, 0]
    Ut, Wt, ut_n = dt.U[:, :k], dt.W, dt.U[:, 0]
    Uc, Wc, uc_n = U - Ut, W - Wt, u_n - ut_n

    ft = linalg.svd(Wt, rank_tol)
    Wt_pinv = linalg.pinv_from_factors(ft)
    W_pinv = linalg.pseudoinverse(W, rank_tol)
    H = W_pinv - Wt_pinv

    wtp = linalg.spectral_norm(Wt_pinv)
    wc = linalg.spectral_norm(Wc)
    delta = wtp * wc
    H_norm = linalg.spectral_norm(H)
    bound = math.sqrt(2.0) * delta / (1.0 - delta) * wtp if delta < 1.0 else None

    s_nk = X[0] - U @ (W_pinv @ u_n)
    s_tilde = Xt[0] - Ut @ (Wt_pinv @ ut_n)
    s_check = -Ut @ (Wt_pinv @ uc_n) - (U @ H + Uc @ Wt_pinv) @ u_n
    return PerturbationReport(
        delta=float(delta), H_norm=float(H_norm), W_tilde_pinv_norm=float(wtp), W_check_norm=float(wc),
        bound=bound, delta_below_one=bool(delta < 1.0),
        bound_holds=None if bound is None else bool(H_norm <= bound * (1.0 + 1e-10) + 1e-300),
        W_tilde_rank=ft.rank, k=k, s_nk=s_nk, s_tilde=s_tilde, s_check=s_check, s_diff=s_nk - s_tilde,
    )


def remainder_ratios(iterates, F, s, n, i_max):
    """``||eps_{n+i} - F^i eps_n|| / ||eps_n||^2`` for ``i = 1 .. i_max``."""
    X = np.asarray(iterates, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    F = np.asarray(F, dtype=np.float64)
    eps_n = X[n] - s
    lin = eps_n.copy()
    den = float(np.dot(eps_n, eps_n))
    out = []
    for i in range(1, i_max + 1):
        lin = F @ lin
        out.append(float(np.linalg.norm(X[n + i] - s - lin) / den))
    return out


def jbilou_sadok_condition(U_cols):
    """``sqrt(det(Y^T Y))`` for the column-normalized ``Y = [u_0/||u_0|| | ...]``.

    Computed as the product of the singular values of ``Y``.
    """
    Y = np.column_stack([np.asarray(u, dtype=np.float64) for u in U_cols])
    norms = np.linalg.norm(Y, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("zero column: normalization undefined")
    Y = Y / norms
    s = np.linalg.svd(Y, compute_uv=False)
    if s.size < Y.shape[1]:
        return 0.0
    return float(np.prod(s))


@dataclass
class DiagnosticsReport:
    L_estimate: float
    spectral_radius: float
    theta_bounds: List[ThetaBounds] = field(default_factory=list)
    sigma_k_S: List[Optional[float]] = field(default_factory=list)
    sigma_k_S_min: Optional[float] = None
    delta: List[Optional[float]] = field(default_factory=list)
    gamma_abs_sum: List[float] = field(default_factory=list)
    jbilou_sadok: List[Optional[float]] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def jacobian_at(problem, x, h=1e-5):
    if problem.jacobian is not None:
        return np.asarray(problem.jacobian(x), dtype=np.float64).reshape(problem.dim, problem.dim)
    return jacobian_fd(problem.f, x, h)


def spectral_radius(F):
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(F, dtype=np.float64)))))


def build_report(F, k_values, trace=None, solution=None, rank_tol=None):
    """Assemble a :class:`DiagnosticsReport` for ``F`` and, optionally, a run.

    Per-record quantities (one entry per extrapolation in ``trace``):
    ``sigma_k_S`` at ``e_n = eps_n/||eps_n||`` and ``delta`` need ``solution``
    and are ``None`` otherwise; ``gamma_abs_sum`` and ``jbilou_sadok`` (on the
    first ``k_r`` columns of ``U``) are always computed.
    """
    F = np.asarray(F, dtype=np.float64)
    L = linalg.spectral_norm(F)
    rep = DiagnosticsReport(L_estimate=L, spectral_radius=spectral_radius(F))
    if L >= 1.0:
        rep.warnings.append(f"||F|| = {L:.6g} >= 1: map is not a contraction in the 2-norm")
    rep.theta_bounds = [theta_upper_bounds(F, k) for k in k_values]
    if trace is None:
        return rep
    for rec in trace.records:
        if rec.result is None or rec.window is None:
            continue
        X = rec.window
        k = rec.result.k
        rep.gamma_abs_sum.append(rec.result.gamma_abs_sum)
        U = np.diff(X, axis=0).T[:, :k]
        try:
            rep.jbilou_sadok.append(jbilou_sadok_condition(list(U.T)))
        except ValueError:
            rep.jbilou_sadok.append(None)
        if solution is None:
            rep.sigma_k_S.append(None)
            rep.delta.append(None)
            continue
        eps = X[0] - solution
        if np.linalg.norm(eps) == 0.0 or k > F.shape[0]:
            rep.sigma_k_S.append(None)
        else:
            rep.sigma_k_S.append(check_global_assumption(F, [eps], k).sigma_k[0])
        try:
            rep.delta.append(perturbation_quantities(X, F, solution, k, rank_tol).delta)
        except ValueError:
            rep.delta.append(None)
    vals = [v for v in rep.sigma_k_S if v is not None]
    rep.sigma_k_S_min = min(vals) if vals else None
    return rep
