"""Exception hierarchy shared by the library and the CLI."""


class RREError(Exception):
    """Base class for all errors raised by :mod:`rrextrap`."""


class NumericalFailure(RREError):
    """A dense kernel (SVD) failed to converge or produced non-finite output."""


class ZeroRankError(RREError):
    """The matrix has no singular value above the rank cutoff."""


class DegenerateWindowError(RREError):
    """Second differences vanish while first differences do not.

    This happens e.g. for an arithmetic progression of iterates, where no
    affine combination can reduce the residual.
    """


class DivergenceError(RREError):
    """An iterate became non-finite or left the escape ball.

    Attributes
    ----------
    index : int
        Index of the offending iterate within the sequence being generated.
    trace : object or None
        Partial trace of the run, attached by the drivers before re-raising.
    """

    def __init__(self, message, index, trace=None):
        super().__init__(message)
        self.index = index
        self.trace = trace


class DegreeDetectionError(RREError):
    """No window size up to ``k_max`` brought the relative residual below tolerance."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class UnsupportedDiagnosticError(RREError):
    """A diagnostic needs data (usually the exact solution) the problem lacks."""


class ConfigError(RREError):
    """Invalid run configuration. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
