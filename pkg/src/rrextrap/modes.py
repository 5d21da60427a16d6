"""Fixed-point drivers: plain iteration, n-Mode, C-Mode and MC-Mode cycling."""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import linalg
from .errors import DegenerateWindowError, DegreeDetectionError, DivergenceError
from .rre import ExtrapolationResult, IterateWindow, build_differences, extrapolate

log = logging.getLogger(__name__)

N_MODE = "n"
C_MODE = "c"
MC_MODE = "mc"
MODES = (N_MODE, C_MODE, MC_MODE)

CONVERGED = "converged"
MAX_CYCLES = "max_cycles"
DIVERGED = "diverged"
DEGENERATE = "degenerate"
DEGREE_FAILURE = "degree_failure"


@dataclass
class FixedPointProblem:
    """The system ``x = f(x)`` on R^N.

    ``solution`` is only used for error reporting and diagnostics, never by
    the solver path.
    """

    dim: int
    f: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    solution: Optional[np.ndarray] = None
    name: str = "problem"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        if self.solution is not None:
            s = np.asarray(self.solution, dtype=np.float64).reshape(self.dim)
            resid = np.linalg.norm(self.f(s) - s)
            if resid > 1e-10 * (1.0 + np.linalg.norm(s)):
                raise ValueError(f"stored solution is not a fixed point (residual {resid:.3e})")
            self.solution = s

    def error(self, x):
        if self.solution is None:
            return None
        return float(np.linalg.norm(np.asarray(x) - self.solution))


@dataclass
class ModeConfig:
    """User choices for a run. ``max_cycles`` doubles as ``n_max`` in n-Mode."""

    mode: str = MC_MODE
    n: int = 0
    k: int = 1
    max_cycles: int = 20
    tol: float = 1e-10
    rank_tol: Optional[float] = None
    degree_tol: float = 1e-10
    k_max: Optional[int] = None
    escape_factor: float = 1e6

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if self.mode != MC_MODE and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.max_cycles < 0:
            raise ValueError("max_cycles must be >= 0")
        if not self.tol > 0 or not self.degree_tol > 0:
            raise ValueError("tolerances must be > 0")
        if self.rank_tol is not None and self.rank_tol < 0:
            raise ValueError("rank_tol must be >= 0")
        if self.k_max is not None and self.k_max < 1:
            raise ValueError("k_max must be >= 1")


@dataclass
class CycleRecord:
    """One row of a trace.

    For cycling modes ``index`` is the cycle number ``r`` and ``s`` is
    ``s^(r)``; record 0 holds the starting vector. For n-Mode ``index`` is
    ``n`` and ``s`` is ``s_{n,k}``.
    """

    index: int
    s: np.ndarray
    residual: float
    error: Optional[float]
    f_evals: int
    k_used: Optional[int] = None
    result: Optional[ExtrapolationResult] = None
    eps_n_norm: Optional[float] = None
    window: Optional[np.ndarray] = None
    diagnostics: Optional[dict] = None


@dataclass
class CycleTrace:
    mode: str
    records: List[CycleRecord] = field(default_factory=list)
    termination: Optional[str] = None
    message: str = ""
    f_evals: int = 0

    @property
    def final(self):
        return self.records[-1] if self.records else None


class _Counted:
    def __init__(self, f):
        self.f = f
        self.count = 0

    def __call__(self, x):
        self.count += 1
        return np.asarray(self.f(x), dtype=np.float64)


class IterateStream:
    """Lazily extended sequence ``x_0, x_1, ...`` with ``x_{m+1} = f(x_m)``.

    Raises :class:`DivergenceError` as soon as an iterate is non-finite or
    farther than ``escape_radius`` from ``center``.
    """

    def __init__(self, f, x0, escape_radius=None, center=None, x1=None):
        self.f = f
        x0 = np.asarray(x0, dtype=np.float64)
        self.xs = [x0]
        self.center = x0 if center is None else np.asarray(center, dtype=np.float64)
        self.escape_radius = escape_radius
        if x1 is not None:
            self.xs.append(np.asarray(x1, dtype=np.float64))

    def _check(self, x, m):
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"iterate x_{m} is non-finite", m)
        if self.escape_radius is not None and np.linalg.norm(x - self.center) > self.escape_radius:
            raise DivergenceError(f"iterate x_{m} left the escape ball of radius {self.escape_radius:.3g}", m)

    def extend_to(self, m):
        while len(self.xs) <= m:
            x = np.asarray(self.f(self.xs[-1]), dtype=np.float64)
            self._check(x, len(self.xs))
            self.xs.append(x)
        return self.xs

    def __getitem__(self, m):
        self.extend_to(m)
        return self.xs[m]

    def window(self, n, k):
        self.extend_to(n + k + 1)
        return IterateWindow(np.array(self.xs[n:n + k + 2]), n)


def _escape_radius(x0, factor):
    return factor * (1.0 + float(np.linalg.norm(x0)))


def iterate(p, x0, count, escape_radius=None):
    """Return ``[x_0, ..., x_count]`` for ``x_{m+1} = f(x_m)``.

    ``escape_radius`` defaults to ``1e6 * (1 + ||x0||)``.
    """
    x0 = np.asarray(x0, dtype=np.float64).reshape(p.dim)
    if count < 0:
        raise ValueError("count must be >= 0")
    if escape_radius is None:
        escape_radius = _escape_radius(x0, 1e6)
    stream = IterateStream(p.f, x0, escape_radius)
    stream._check(x0, 0)
    return list(stream.extend_to(count))


def relative_lsq_residual(window, rank_tol=None):
    """``||u_n + W xi|| / ||u_n||`` with ``xi = -W^+ u_n``; 0 when ``u_n = 0``."""
    d = build_differences(window)
    u_n = d.U[:, 0]
    un = np.linalg.norm(u_n)
    if un == 0.0:
        return 0.0
    xi = -linalg.min_norm_lsq(d.W, u_n, rank_tol)
    return float(np.linalg.norm(u_n + d.W @ xi) / un)


def detect_numerical_degree(stream, n, degree_tol, k_max, rank_tol=None):
    """Smallest ``k <= k_max`` whose window at ``n`` has relative LSQ residual below ``degree_tol``.

    ``stream`` is an :class:`IterateStream` (or anything with a
    ``window(n, k)`` method); it is extended one iterate per trial ``k`` and
    keeps the iterates, so the caller can reuse them for the extrapolation.

    Raises
    ------
    DegreeDetectionError
        If no ``k`` up to ``k_max`` qualifies.
    """
    if not degree_tol > 0:
        raise ValueError("degree_tol must be > 0")
    best = np.inf
    for k in range(1, k_max + 1):
        rel = relative_lsq_residual(stream.window(n, k), rank_tol)
        if rel < degree_tol:
            return k
        best = min(best, rel)
    raise DegreeDetectionError(
        f"no k <= {k_max} reached relative residual {degree_tol:.1e} (best {best:.3e})"
    )


def _new_trace(p, mode, x0, f):
    x1 = f(x0)
    trace = CycleTrace(mode=mode)
    trace.records.append(CycleRecord(
        index=0, s=x0, residual=float(np.linalg.norm(x1 - x0)), error=p.error(x0), f_evals=f.count,
    ))
    return trace, x1


def _run_cycles(p, x0, cfg, choose_window):
    f = _Counted(p.f)
    x0 = np.asarray(x0, dtype=np.float64).reshape(p.dim)
    radius = _escape_radius(x0, cfg.escape_factor)
    trace, x1 = _new_trace(p, cfg.mode, x0, f)
    x = x0
    try:
        IterateStream(f, x0, radius)._check(x1, 1)
        if trace.records[0].residual <= cfg.tol:
            trace.termination = CONVERGED
            return trace
        for r in range(1, cfg.max_cycles + 1):
            stream = IterateStream(f, x, radius, center=x0, x1=x1)
            k, window = choose_window(stream)
            result = extrapolate(window, cfg.rank_tol)
            x = result.s_nk
            stream._check(x, r)
            x1 = f(x)
            stream._check(x1, r)
            eps_n = p.error(window.vectors[0])
            trace.records.append(CycleRecord(
                index=r, s=x, residual=float(np.linalg.norm(x1 - x)), error=p.error(x),
                f_evals=f.count, k_used=k, result=result, eps_n_norm=eps_n, window=window.vectors,
            ))
            log.debug("cycle %d: k=%d residual=%.3e", r, k, trace.records[-1].residual)
            if result.converged or trace.records[-1].residual <= cfg.tol:
                trace.termination = CONVERGED
                return trace
        trace.termination = MAX_CYCLES
        return trace
    except DivergenceError as exc:
        trace.termination, trace.message, exc.trace = DIVERGED, str(exc), trace
        raise
    except DegreeDetectionError as exc:
        trace.termination, trace.message, exc.trace = DEGREE_FAILURE, str(exc), trace
        raise
    except DegenerateWindowError as exc:
        trace.termination, trace.message = DEGENERATE, str(exc)
        return trace
    finally:
        trace.f_evals = f.count


def run_c_mode(p, x0, cfg):
    """C-Mode cycling with fixed ``n`` and ``k``.

    Each cycle restarts from the previous extrapolant, computes ``n + k + 1``
    new iterates and extrapolates the window at ``n``. Stops when
    ``||f(s) - s|| <= cfg.tol``, on a stationary or degenerate window, or after
    ``cfg.max_cycles`` cycles.
    """
    if cfg.mode != C_MODE:
        raise ValueError("run_c_mode needs a C-Mode config")
    return _run_cycles(p, x0, cfg, lambda st: (cfg.k, st.window(cfg.n, cfg.k)))


def run_mc_mode(p, x0, cfg):
    """MC-Mode cycling: ``k_r`` is detected numerically in every cycle."""
    if cfg.mode != MC_MODE:
        raise ValueError("run_mc_mode needs an MC-Mode config")
    k_max = cfg.k_max if cfg.k_max is not None else p.dim

    def choose(stream):
        k = detect_numerical_degree(stream, cfg.n, cfg.degree_tol, k_max, cfg.rank_tol)
        return k, stream.window(cfg.n, k)

    return _run_cycles(p, x0, cfg, choose)


def run_n_mode(p, x0, k, n_max, rank_tol=None, tol=None, escape_factor=1e6):
    """Extrapolate one long sequence at every ``n = 0 .. n_max`` with fixed ``k``.

    Returns a :class:`CycleTrace` whose records are indexed by ``n``. The
    ``f_evals`` of a record is the number of evaluations needed to form that
    window; the residual check ``f(s_{n,k})`` is not counted. A stationary
    window stops the scan with termination ``converged``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    x0 = np.asarray(x0, dtype=np.float64).reshape(p.dim)
    trace = CycleTrace(mode=N_MODE)
    try:
        xs = iterate(p, x0, n_max + k + 1, _escape_radius(x0, escape_factor))
    except DivergenceError as exc:
        trace.termination, trace.message, exc.trace = DIVERGED, str(exc), trace
        raise
    trace.f_evals = n_max + k + 1
    hit_tol = False
    for n in range(n_max + 1):
        window = IterateWindow(np.array(xs[n:n + k + 2]), n)
        try:
            result = extrapolate(window, rank_tol)
        except DegenerateWindowError as exc:
            trace.termination, trace.message = DEGENERATE, str(exc)
            return trace
        s = result.s_nk
        residual = float(np.linalg.norm(np.asarray(p.f(s)) - s))
        trace.records.append(CycleRecord(
            index=n, s=s, residual=residual, error=p.error(s), f_evals=n + k + 1, k_used=k,
            result=result, eps_n_norm=p.error(xs[n]), window=window.vectors,
        ))
        if result.converged:
            trace.termination = CONVERGED
            return trace
        hit_tol = hit_tol or (tol is not None and residual <= tol)
    trace.termination = CONVERGED if hit_tol else MAX_CYCLES
    return trace


def run_plain(p, x0, max_iter, tol=None, escape_factor=1e6):
    """Plain fixed-point iteration, one record per iterate (for comparisons)."""
    x0 = np.asarray(x0, dtype=np.float64).reshape(p.dim)
    trace = CycleTrace(mode="plain")
    stream = IterateStream(p.f, x0, _escape_radius(x0, escape_factor))
    try:
        for m in range(max_iter + 1):
            x, x1 = stream[m], stream[m + 1]
            residual = float(np.linalg.norm(x1 - x))
            trace.records.append(CycleRecord(index=m, s=x, residual=residual, error=p.error(x), f_evals=m))
            if tol is not None and residual <= tol:
                trace.termination = CONVERGED
                break
        else:
            trace.termination = MAX_CYCLES
    except DivergenceError as exc:
        trace.termination, trace.message, exc.trace = DIVERGED, str(exc), trace
        raise
    finally:
        trace.f_evals = len(stream.xs) - 1
    return trace


def run(p, x0, cfg):
    """Dispatch on ``cfg.mode``."""
    if cfg.mode == N_MODE:
        return run_n_mode(p, x0, cfg.k, cfg.max_cycles, cfg.rank_tol, cfg.tol, cfg.escape_factor)
    if cfg.mode == C_MODE:
        return run_c_mode(p, x0, cfg)
    return run_mc_mode(p, x0, cfg)
