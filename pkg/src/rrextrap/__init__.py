"""Reduced Rank Extrapolation for nonlinear fixed-point iterations."""

__version__ = "0.1.0"

from .errors import (ConfigError, DegenerateWindowError, DegreeDetectionError, DivergenceError,
                     NumericalFailure, RREError, UnsupportedDiagnosticError, ZeroRankError)
from .linalg import min_norm_lsq, pseudoinverse, smallest_nonzero_singular, svd
from .modes import (CycleTrace, FixedPointProblem, ModeConfig, iterate, run, run_c_mode, run_mc_mode,
                    run_n_mode)
from .rre import ExtrapolationResult, IterateWindow, build_differences, extrapolate, gamma_direct

__all__ = [
    "ConfigError", "CycleTrace", "DegenerateWindowError", "DegreeDetectionError", "DivergenceError",
    "ExtrapolationResult", "FixedPointProblem", "IterateWindow", "ModeConfig", "NumericalFailure",
    "RREError", "UnsupportedDiagnosticError", "ZeroRankError", "build_differences", "extrapolate",
    "gamma_direct", "iterate", "min_norm_lsq", "pseudoinverse", "run", "run_c_mode", "run_mc_mode",
    "run_n_mode", "smallest_nonzero_singular", "svd",
]
