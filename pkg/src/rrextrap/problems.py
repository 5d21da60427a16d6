"""Built-in fixed-point test problems with known solutions and structure.

Every stored solution is computed by an oracle recorded in
``ProblemSpec.provenance`` (a direct linear solve, or long plain iteration
followed by a root-finding polish), never typed in by hand.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .modes import FixedPointProblem

EIG_TOL = 1e-12


@dataclass
class ProblemSpec:
    name: str
    problem: FixedPointProblem
    params: dict = field(default_factory=dict)
    solution: Optional[np.ndarray] = None
    jacobian_at_solution: Optional[np.ndarray] = None
    expected_degree: Optional[int] = None
    provenance: str = ""
    contractive: bool = True
    start: Optional[np.ndarray] = None

    @property
    def dim(self):
        return self.problem.dim


def count_distinct(values, tol=EIG_TOL):
    values = np.sort(np.asarray(values, dtype=np.float64))
    if values.size == 0:
        return 0
    return 1 + int(np.count_nonzero(np.diff(values) > tol))


def _similarity(n, kind, rng):
    """Return ``(V, V^{-1})`` for the requested similarity transform."""
    if kind in (None, "none", "diagonal"):
        return np.eye(n), np.eye(n)
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.sign(np.diag(R))
    if kind == "orthogonal":
        return Q, Q.T
    if kind == "general":
        # cond(V) <= 2
        Q2, _ = np.linalg.qr(rng.standard_normal((n, n)))
        scales = rng.uniform(1.0, 2.0, n)
        V = (Q * scales) @ Q2
        Vinv = (Q2.T / scales) @ Q.T
        return V, Vinv
    raise ValueError(f"unknown similarity kind {kind!r}")


def matrix_from_spectrum(eigenvalues, dim=None, similarity=None, seed=0):
    """Real matrix with the given real spectrum, optionally similarity-transformed."""
    lam = np.atleast_1d(np.asarray(eigenvalues, dtype=np.float64))
    if dim is not None and lam.size == 1:
        lam = np.full(dim, lam[0])
    if dim is not None and lam.size != dim:
        raise ValueError(f"got {lam.size} eigenvalues for dimension {dim}")
    V, Vinv = _similarity(lam.size, similarity, np.random.default_rng(seed))
    return (V * lam) @ Vinv, lam


def make_linear(eigenvalues, d=None, dim=None, similarity=None, seed=0):
    """``f(x) = T x + d`` with ``T`` built from a real spectrum.

    Parameters
    ----------
    eigenvalues : array_like
        Spectrum of ``T``; a single value is broadcast to ``dim``.
    d : array_like, optional
        Constant term; a seeded standard-normal vector when omitted.
    similarity : {None, "orthogonal", "general"}
        ``None`` keeps ``T`` diagonal.
    seed : int
    """
    T, lam = matrix_from_spectrum(eigenvalues, dim, similarity, seed)
    if np.any(np.abs(lam) >= 1.0):
        raise ValueError("all eigenvalues must satisfy |lambda| < 1")
    N = lam.size
    rng = np.random.default_rng([seed, 1])
    d = rng.standard_normal(N) if d is None else np.asarray(d, dtype=np.float64).reshape(N)
    s = np.linalg.solve(np.eye(N) - T, d)
    p = FixedPointProblem(
        dim=N, f=lambda x: T @ x + d, jacobian=lambda x: T, solution=s, name="linear",
    )
    return ProblemSpec(
        name="linear", problem=p,
        params={"eigenvalues": lam.tolist(), "similarity": similarity, "seed": seed},
        solution=s, jacobian_at_solution=T, expected_degree=count_distinct(lam),
        provenance="direct solve of (I - T) s = d",
    )


def _ball_samples(dim, radius, rng, count=256):
    z = rng.standard_normal((count, dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = radius * rng.uniform(0.0, 1.0, (count, 1)) ** (1.0 / dim)
    return np.vstack([np.zeros(dim), radius * z, r * z])


def make_quadratic_perturbed(eigenvalues, q_strength, dim=None, similarity=None, seed=0, radius=0.5):
    """``f(x) = T x + q * (x * x)``, solution ``0`` and ``F(0) = T``.

    The Jacobian norm ``||T + 2 q diag(x)||`` is checked on a sample of the
    ball of the given ``radius`` around the solution.

    Raises
    ------
    ValueError
        If the sampled Jacobian norm reaches 1 (no contraction ball).
    """
    T, lam = matrix_from_spectrum(eigenvalues, dim, similarity, seed)
    N = lam.size
    q = float(q_strength)

    def jac(x):
        return T + 2.0 * q * np.diag(np.asarray(x, dtype=np.float64))

    pts = _ball_samples(N, radius, np.random.default_rng([seed, 2]))
    worst = max(np.linalg.norm(jac(x), 2) for x in pts)
    if worst >= 1.0:
        raise ValueError(f"no contraction on ball of radius {radius}: sampled max ||F(x)|| = {worst:.3f}")
    p = FixedPointProblem(
        dim=N, f=lambda x: T @ x + q * x * x, jacobian=jac, solution=np.zeros(N), name="quadratic",
    )
    return ProblemSpec(
        name="quadratic", problem=p,
        params={"eigenvalues": lam.tolist(), "q": q, "similarity": similarity, "seed": seed,
                "radius": radius, "sampled_L": float(worst)},
        solution=np.zeros(N), jacobian_at_solution=T,
        expected_degree=count_distinct(lam) if q == 0.0 else None,
        provenance="s = 0 by construction",
    )


def _iterate_then_newton(f, jac, x0, iters, newton_steps=8):
    x = np.asarray(x0, dtype=np.float64)
    for _ in range(iters):
        x = f(x)
    I = np.eye(x.size)
    for _ in range(newton_steps):
        r = f(x) - x
        if np.linalg.norm(r) == 0.0:
            break
        x = x - np.linalg.solve(jac(x) - I, r)
    return x


def _cos():
    f = lambda x: np.cos(x)
    jac = lambda x: np.diag(-np.sin(x))
    x = np.array([1.0])
    for _ in range(200):
        x = f(x)
    h = 1e-3
    s = np.array([brentq(lambda t: np.cos(t) - t, x[0] - h, x[0] + h, xtol=1e-15, rtol=4 * np.finfo(float).eps)])
    return dict(f=f, jac=jac, s=s, x0=np.array([1.0]),
                provenance="200 plain iterations + bracketed root polish (Brent) to 1e-15", params={})


def _coupled2d():
    def f(x):
        return np.array([(x[1] ** 2 + 1.0) / 4.0, (x[0] ** 2 + 2.0 * x[1] + 1.0) / 4.0])

    def jac(x):
        return np.array([[0.0, x[1] / 2.0], [x[0] / 2.0, 0.5]])

    x0 = np.zeros(2)
    s = _iterate_then_newton(f, jac, x0, 500)
    return dict(f=f, jac=jac, s=s, x0=x0,
                provenance="500 plain iterations + Newton polish", params={})


def _logistic2d(r1=2.5, r2=2.8, c=0.1):
    def f(x):
        return np.array([
            r1 * x[0] * (1.0 - x[0]) + c * (x[1] - x[0]),
            r2 * x[1] * (1.0 - x[1]) + c * (x[0] - x[1]),
        ])

    def jac(x):
        return np.array([
            [r1 * (1.0 - 2.0 * x[0]) - c, c],
            [c, r2 * (1.0 - 2.0 * x[1]) - c],
        ])

    x0 = np.array([0.55, 0.6])
    s = _iterate_then_newton(f, jac, x0, 2000)
    return dict(f=f, jac=jac, s=s, x0=x0,
                provenance="2000 plain iterations + Newton polish", params={"r1": r1, "r2": r2, "c": c})


def _bvp(N=32, c=6.0, lam=1.0):
    """Picard form of ``-u'' = c u + lam (exp(u) - 1) + 1`` on (0, 1), u(0) = u(1) = 0."""
    h = 1.0 / (N + 1)
    A = (2.0 * np.eye(N) - np.eye(N, k=1) - np.eye(N, k=-1)) / h**2
    Ainv = np.linalg.inv(A)

    def f(x):
        return Ainv @ (c * x + lam * np.expm1(x) + 1.0)

    def jac(x):
        return Ainv * (c + lam * np.exp(x))

    x0 = np.zeros(N)
    if lam == 0.0:
        s = np.linalg.solve(A - c * np.eye(N), np.ones(N))
        provenance = "direct solve of (A - c I) s = 1"
    else:
        s = _iterate_then_newton(f, jac, x0, 400)
        provenance = "400 plain iterations + Newton polish"
    return dict(f=f, jac=jac, s=s, x0=x0, provenance=provenance, params={"N": N, "c": c, "lam": lam})


_CLASSIC = {"cos": _cos, "coupled2d": _coupled2d, "logistic2d": _logistic2d, "bvp": _bvp}


def make_classic_nonlinear(name, **params):
    """Desk-scale nonlinear benchmarks.

    ``cos``: ``x = cos x``. ``coupled2d``: ``x1 = (x2^2 + 1)/4``,
    ``x2 = (x1^2 + 2 x2 + 1)/4``. ``logistic2d``: two coupled logistic maps.
    ``bvp``: finite-difference boundary problem in Picard form (N = 32 by
    default; ``lam = 0`` switches the nonlinearity off).
    """
    try:
        build = _CLASSIC[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(_CLASSIC)}") from None
    d = build(**params)
    s = np.asarray(d["s"], dtype=np.float64)
    p = FixedPointProblem(dim=s.size, f=d["f"], jacobian=d["jac"], solution=s, name=name)
    return ProblemSpec(
        name=name, problem=p, params=d["params"], solution=s,
        jacobian_at_solution=np.asarray(d["jac"](s)), provenance=d["provenance"],
        start=np.asarray(d["x0"], dtype=np.float64),
    )


def default_start(spec):
    """Deterministic starting vector used by the CLI when none is given."""
    if spec.start is not None:
        return spec.start.copy()
    return np.zeros(spec.dim)


def make_identity(dim=1):
    """``f(x) = x``: every point is fixed, no contraction (diagnostics demo)."""
    p = FixedPointProblem(dim=dim, f=lambda x: np.array(x, dtype=np.float64), jacobian=lambda x: np.eye(dim),
                          name="identity")
    return ProblemSpec(name="identity", problem=p, params={"dim": dim}, contractive=False,
                       provenance="no unique solution")
