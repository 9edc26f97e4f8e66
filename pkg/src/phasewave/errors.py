"""Exception hierarchy.

Validation problems (bad input, bad configuration) derive from
``ValidationError``; failures that arise while computing derive from
``NumericalError``.  The command line maps the two families to distinct
exit codes.
"""


class PhaseWaveError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(PhaseWaveError, ValueError):
    """Input rejected before any computation."""


class DimensionError(ValidationError):
    """Array shapes are inconsistent with the declared dimension."""


class ConfigurationError(ValidationError):
    """Unsupported model kind or malformed scenario configuration."""


class DomainError(ValidationError):
    """Argument outside the domain of the requested operation."""


class UnsupportedError(ValidationError):
    """Operation is not defined for the given model or scenario."""


class NumericalError(PhaseWaveError, ArithmeticError):
    """Computation failed or a numerical invariant was violated."""


class DivergenceError(NumericalError):
    """Non-finite state during time integration."""

    def __init__(self, message, last_valid_time=None):
        super().__init__(message)
        self.last_valid_time = last_valid_time


class StepSizeError(NumericalError):
    """Branch tracking lost continuity; the time step is too large."""


class CausticError(NumericalError):
    """A determinant needed for the requested quantity vanished."""


class InvariantError(NumericalError):
    """A structural invariant (symmetry, definiteness) failed."""


class QuadratureError(NumericalError):
    """Quadrature box or node count is inadequate."""

    def __init__(self, message, suggested_box=None):
        super().__init__(message)
        self.suggested_box = suggested_box


class ResolutionError(NumericalError):
    """Grid too coarse for the oscillations of the sampled field."""


class StationarySolveError(NumericalError):
    """Newton iteration for a stationary point did not converge."""


class OutsideNeighborhoodError(NumericalError):
    """Point lies outside the tubular neighbourhood of the manifold."""


class ChartError(NumericalError):
    """Lagrangian chart is degenerate or multi-sheeted."""


class StalenessError(ValidationError):
    """Cached data does not correspond to the requested point or time."""
