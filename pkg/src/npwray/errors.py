"""Exception hierarchy shared by the field, solver and tracer modules."""


class NPWError(Exception):
    """Base class for all package errors."""


class NumericalFailure(NPWError):
    """A solver could not produce a trustworthy result."""


class TotalInternalReflection(NumericalFailure):
    """The transmitted wave is evanescent; no downward ray exists.

    ``depth_km`` is filled in by the ray tracer with the altitude of the
    interface where the ray was reflected.
    """

    def __init__(self, message, depth_km=None):
        super().__init__(message)
        self.depth_km = depth_km


class NoPhysicalRoot(NumericalFailure):
    """Neither root branch of the reduced quartics passed validation."""


class CancellationUnderflow(NumericalFailure):
    """A cancellation-prone evaluation produced an invalid radicand."""


class GrazingDegenerate(NumericalFailure):
    """Normal wavenumber vanished; the branch of the square root is ambiguous."""


class NoBracket(NumericalFailure):
    """The shooting solver could not bracket the receiver."""


class NonConvergence(NumericalFailure):
    """The shooting solver exhausted its iteration budget."""


class SegmentOverflow(NumericalFailure):
    """A traced ray produced more segments than allowed."""


class GridFormatError(NPWError, ValueError):
    """Malformed grid, weather or coefficient file.

    Parameters
    ----------
    message : str
        What went wrong.
    line : int, optional
        1-based line number in the offending file.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionMismatch(GridFormatError):
    """Header-declared dimensions disagree with the file body."""


class ConfigError(NPWError, ValueError):
    """Invalid scenario configuration."""
