"""Exception hierarchy shared by all gfwave modules."""


class GfwaveError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(GfwaveError, ValueError):
    pass


class DomainError(GfwaveError, ValueError):
    """Evaluation point or stencil outside the region where a field is defined."""


class ShapeError(GfwaveError, ValueError):
    pass


class NonFiniteError(GfwaveError, ValueError):
    pass


class NotSPDError(GfwaveError, ArithmeticError):
    """A matrix expected to be symmetric positive definite is not.

    ``location`` carries whatever the caller knows about where the failure
    happened (a flat sample index, a point, an epsilon).
    """

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class StructureError(GfwaveError, ValueError):
    """A first-order system does not have the block structure of a wave system."""


class SolverError(GfwaveError, RuntimeError):
    pass


class CFLViolation(SolverError):
    pass


class BlowUpError(SolverError):
    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class SpecError(GfwaveError, ValueError):
    """Problem-spec parse or validation failure with a source position."""

    def __init__(self, message, line=None, col=None):
        loc = ""
        if line is not None:
            loc = f"line {line}" + (f", col {col}" if col is not None else "") + ": "
        super().__init__(loc + message)
        self.line = line
        self.col = col
