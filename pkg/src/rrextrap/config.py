"""Run configuration: an INI-style ``key = value`` file plus flag overrides.

Sections and keys (all optional except ``problem.name``)::

    [problem]
    name = linear          ; linear | quadratic | cos | coupled2d | logistic2d | bvp | identity
    eigenvalues = 0.5, 0.3, 0.3
    dim = 3
    similarity = orthogonal   ; none | orthogonal | general
    q = 0.05                  ; quadratic only
    c = 6.0                   ; bvp only (also lam; dim sets the grid size)
    seed = 0
    x0 = 1.0, 2.0, 3.0        ; explicit start
    x0_error = 0.1            ; or: seeded random start at this distance from s

    [mode]
    mode = mc                 ; n | c | mc
    n = 0
    k = 2
    max_cycles = 20
    tol = 1e-10
    rank_tol = 1e-13
    degree_tol = 1e-10
    k_max = 4

    [diagnostics]
    enabled = true
    k_values = 1, 2, 3
    delta = true

    [compare]
    modes = plain, n, c, mc
    plain_max_iter = 500

    [output]
    dir = out
"""

import configparser
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import problems
from .errors import ConfigError
from .modes import MODES, ModeConfig

SCHEMA = {
    "problem": {"name", "eigenvalues", "dim", "similarity", "q", "seed", "x0", "x0_error",
                "c", "lam", "radius", "r1", "r2"},
    "mode": {"mode", "n", "k", "max_cycles", "tol", "rank_tol", "degree_tol", "k_max", "escape_factor"},
    "diagnostics": {"enabled", "k_values", "delta"},
    "compare": {"modes", "plain_max_iter"},
    "output": {"dir"},
}
PROBLEMS = ("linear", "quadratic", "cos", "coupled2d", "logistic2d", "bvp", "identity")
COMPARE_LEGS = ("plain",) + MODES


@dataclass
class RunConfig:
    problem_name: str
    problem_params: Dict[str, object] = field(default_factory=dict)
    x0: Optional[np.ndarray] = None
    x0_error: Optional[float] = None
    seed: int = 0
    mode: ModeConfig = field(default_factory=ModeConfig)
    diagnostics: bool = False
    k_values: List[int] = field(default_factory=list)
    delta: bool = False
    compare_modes: List[str] = field(default_factory=lambda: list(COMPARE_LEGS))
    plain_max_iter: int = 500
    out_dir: str = "out"

    def build_problem(self):
        """Instantiate the problem spec and the starting vector."""
        return build_problem(self)


def _line_index(text):
    """Map ``(section, key)`` and ``section`` to 1-based line numbers."""
    where = {}
    section = None
    for i, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            where[(section, None)] = i
            continue
        m = re.match(r"\s*([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            where[(section, m.group(1).strip().lower())] = i
    return where


class _Reader:
    def __init__(self, parser, where, overrides):
        self.parser = parser
        self.where = where
        self.overrides = overrides

    def line(self, section, key=None):
        return self.where.get((section, key), self.where.get((section, None)))

    def raw(self, section, key):
        if (section, key) in self.overrides:
            return self.overrides[(section, key)]
        if self.parser.has_option(section, key):
            v = self.parser.get(section, key).strip()
            return v if v != "" else None
        return None

    def get(self, section, key, conv, default=None):
        v = self.raw(section, key)
        if v is None:
            return default
        if not isinstance(v, str):
            return v
        try:
            return conv(v)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}", self.line(section, key)) from None

    def fail(self, section, key, msg):
        raise ConfigError(f"[{section}] {key}: {msg}", self.line(section, key))


def _floats(v):
    items = [t for t in re.split(r"[,\s]+", v.strip()) if t]
    if not items:
        raise ValueError("empty list")
    try:
        return [float(t) for t in items]
    except ValueError:
        raise ValueError(f"expected a list of numbers, got {v!r}") from None


def _ints(v):
    out = _floats(v)
    if any(x != int(x) for x in out):
        raise ValueError(f"expected integers, got {v!r}")
    return [int(x) for x in out]


def _int(v):
    try:
        return int(v)
    except ValueError:
        raise ValueError(f"expected an integer, got {v!r}") from None


def _float(v):
    try:
        return float(v)
    except ValueError:
        raise ValueError(f"expected a number, got {v!r}") from None


def _bool(v):
    t = v.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _words(v):
    return [t for t in re.split(r"[,\s]+", v.strip()) if t]


def parse_config(text, overrides=None):
    """Parse config text into a validated :class:`RunConfig`.

    ``overrides`` maps ``(section, key)`` to already-typed values (from CLI
    flags) and wins over the file.

    Raises
    ------
    ConfigError
        With the offending line number whenever it can be located.
    """
    overrides = dict(overrides or {})
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str.lower
    try:
        parser.read_string(text)
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"cannot parse line: {exc.errors[0][1].strip()!r}" if exc.errors else str(exc),
                          lineno) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc), getattr(exc, "lineno", None)) from None
    where = _line_index(text)
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", where.get((section, None)))
        for key in parser.options(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", where.get((section, key)))
    rd = _Reader(parser, where, overrides)

    name = rd.get("problem", "name", str)
    if name is None:
        raise ConfigError("[problem] name is required", rd.line("problem"))
    if name not in PROBLEMS:
        rd.fail("problem", "name", f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}")

    params = {}
    for key, conv in (("eigenvalues", _floats), ("dim", _int), ("similarity", str), ("q", _float),
                      ("c", _float), ("lam", _float), ("radius", _float),
                      ("r1", _float), ("r2", _float)):
        v = rd.get("problem", key, conv)
        if v is not None:
            params[key] = v
    if params.get("similarity") == "none":
        params["similarity"] = None

    x0 = rd.get("problem", "x0", _floats)
    x0_error = rd.get("problem", "x0_error", _float)
    if x0_error is not None and not x0_error > 0:
        rd.fail("problem", "x0_error", "must be > 0")

    mode_name = rd.get("mode", "mode", str, "mc")
    if mode_name not in MODES:
        rd.fail("mode", "mode", f"must be one of {', '.join(MODES)}")
    try:
        mode = ModeConfig(
            mode=mode_name,
            n=rd.get("mode", "n", _int, 0),
            k=rd.get("mode", "k", _int, 1),
            max_cycles=rd.get("mode", "max_cycles", _int, 20),
            tol=rd.get("mode", "tol", _float, 1e-10),
            rank_tol=rd.get("mode", "rank_tol", _float),
            degree_tol=rd.get("mode", "degree_tol", _float, 1e-10),
            k_max=rd.get("mode", "k_max", _int),
            escape_factor=rd.get("mode", "escape_factor", _float, 1e6),
        )
    except ValueError as exc:
        key = _guess_key(str(exc), SCHEMA["mode"])
        raise ConfigError(f"[mode] {exc}", rd.line("mode", key)) from None

    k_values = rd.get("diagnostics", "k_values", _ints) or [mode.k]
    if any(k < 1 for k in k_values):
        rd.fail("diagnostics", "k_values", "all k must be >= 1")
    compare = rd.get("compare", "modes", _words, list(COMPARE_LEGS))
    if parser.has_option("compare", "modes") and rd.raw("compare", "modes") is None:
        compare = []
    if not compare:
        rd.fail("compare", "modes", "empty mode list")
    bad = [m for m in compare if m not in COMPARE_LEGS]
    if bad:
        rd.fail("compare", "modes", f"unknown legs {bad}; choose from {', '.join(COMPARE_LEGS)}")

    cfg = RunConfig(
        problem_name=name, problem_params=params,
        x0=None if x0 is None else np.asarray(x0, dtype=np.float64),
        x0_error=x0_error,
        seed=rd.get("problem", "seed", _int, 0),
        mode=mode,
        diagnostics=rd.get("diagnostics", "enabled", _bool, False),
        k_values=k_values,
        delta=rd.get("diagnostics", "delta", _bool, False),
        compare_modes=compare,
        plain_max_iter=rd.get("compare", "plain_max_iter", _int, 500),
        out_dir=rd.get("output", "dir", str, "out"),
    )
    # Build once to surface problem-parameter errors before any computation.
    try:
        spec, x = build_problem(cfg)
    except (ValueError, TypeError) as exc:
        key = _guess_key(str(exc), SCHEMA["problem"])
        raise ConfigError(f"[problem] {exc}", rd.line("problem", key)) from None
    if x.size != spec.dim:
        rd.fail("problem", "x0", f"has {x.size} entries, problem dimension is {spec.dim}")
    return cfg


def _guess_key(message, keys):
    for key in sorted(keys, key=len, reverse=True):
        if re.search(rf"\b{re.escape(key)}\b", message):
            return key
    return None


def load_config(path, overrides=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, overrides)


def build_problem(cfg) -> Tuple["problems.ProblemSpec", np.ndarray]:
    p = dict(cfg.problem_params)
    name = cfg.problem_name
    if name == "linear":
        if "eigenvalues" not in p:
            raise ValueError("linear problem needs eigenvalues")
        spec = problems.make_linear(p["eigenvalues"], dim=p.get("dim"), similarity=p.get("similarity"),
                                    seed=cfg.seed)
    elif name == "quadratic":
        if "eigenvalues" not in p:
            raise ValueError("quadratic problem needs eigenvalues")
        spec = problems.make_quadratic_perturbed(p["eigenvalues"], p.get("q", 0.05), dim=p.get("dim"),
                                                 similarity=p.get("similarity"), seed=cfg.seed,
                                                 radius=p.get("radius", 0.5))
    elif name == "identity":
        spec = problems.make_identity(p.get("dim", 1))
    elif name == "bvp":
        kw = {"N": p["dim"]} if "dim" in p else {}
        kw.update({key: p[key] for key in ("c", "lam") if key in p})
        spec = problems.make_classic_nonlinear("bvp", **kw)
    elif name == "logistic2d":
        spec = problems.make_classic_nonlinear(name, **{key: p[key] for key in ("r1", "r2", "c") if key in p})
    else:
        spec = problems.make_classic_nonlinear(name)

    if cfg.x0 is not None:
        x0 = np.asarray(cfg.x0, dtype=np.float64)
    elif cfg.x0_error is not None:
        if spec.solution is None:
            raise ValueError("x0_error needs a problem with a known solution")
        z = np.random.default_rng([cfg.seed, 7]).standard_normal(spec.dim)
        x0 = spec.solution + cfg.x0_error * z / np.linalg.norm(z)
    else:
        x0 = problems.default_start(spec)
    return spec, x0
