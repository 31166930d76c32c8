"""Exception hierarchy shared by all vessel-lab modules."""


class VesselError(Exception):
    """Base class for every error raised by vessel-lab."""


class DomainError(VesselError, ValueError):
    """A time argument lies outside the grid interval."""


class StructuralError(VesselError, ValueError):
    """Shapes or grids of the supplied matrices do not fit together."""


class InvertibilityError(VesselError, ArithmeticError):
    """A matrix sample is singular or too ill-conditioned to invert."""

    def __init__(self, message, node=None, name=None):
        super().__init__(message)
        self.node = node
        self.name = name


class SolverError(VesselError, RuntimeError):
    """The adaptive ODE integrator failed."""


class ResolventError(VesselError, ArithmeticError):
    """The spectral parameter is numerically inside the spectrum of A1."""

    def __init__(self, message, distance=None):
        super().__init__(message)
        self.distance = distance


class PreconditionError(VesselError, ValueError):
    """An operation was called on data violating its preconditions."""


class LinkageError(PreconditionError):
    """The lambda-free linkage conditions cannot be satisfied."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = dict(residuals or {})


class InvalidChainError(PreconditionError):
    """A companion chain fails its differential relations."""


class NoSimilarityError(VesselError):
    """Two vessels admit no intertwining similarity."""


class ContourError(VesselError, ArithmeticError):
    """A contour passes too close to the spectrum."""


class OrderOverflowError(VesselError, ArithmeticError):
    """Laurent coefficients do not vanish beyond the declared maximal order."""


class GridError(VesselError, ValueError):
    """A sampling grid is too coarse for the requested stencil."""


class FormatError(VesselError, ValueError):
    """A vessel-lab data file could not be parsed."""

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


class VesselWarning(UserWarning):
    """Non-fatal diagnostic emitted while loading or checking vessels."""
