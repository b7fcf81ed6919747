"""Exception taxonomy for the package.

Every error raised by library code derives from :class:`KposimError` so that
callers (and the command-line layer) can distinguish usage mistakes, physics /
numerics failures, and I/O problems.
"""

__all__ = [
    "KposimError",
    "UsageError",
    "InvalidDimensionError",
    "TruncationError",
    "BasisError",
    "ScheduleError",
    "StiffnessError",
    "AccuracyError",
    "FitError",
    "DegenerateDataError",
    "CalibrationError",
    "ReconstructionError",
    "SpanError",
    "BasisDegeneracyError",
    "GridExtentError",
    "ConvergenceError",
    "ConfigError",
]


class KposimError(Exception):
    """Base class for all package-specific errors."""


class UsageError(KposimError):
    """An argument was syntactically valid but not an allowed choice."""


class InvalidDimensionError(UsageError):
    """Fock-space dimension too small (or otherwise unusable)."""


class TruncationError(KposimError):
    """The requested object does not fit in the truncated Fock space.

    Carries ``required_dim`` with a safe dimension estimate when one is known.
    """

    def __init__(self, message, required_dim=None):
        super().__init__(message)
        self.required_dim = required_dim


class BasisError(KposimError):
    """A qubit basis is missing, non-orthogonal, or could not be identified."""


class ScheduleError(UsageError):
    """A pulse schedule is malformed (bad durations, discontinuous pump, ...)."""


class StiffnessError(KposimError):
    """The adaptive integrator failed to advance (step size underflow).

    ``time`` records where integration stalled, in microseconds.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class AccuracyError(KposimError):
    """A propagation post-condition (norm/trace conservation) was violated."""


class FitError(KposimError):
    """Nonlinear least-squares fit did not converge."""


class DegenerateDataError(FitError):
    """The data carry no usable signal for the requested fit (e.g. constant)."""


class CalibrationError(KposimError):
    """A pulse or gate calibration could not reach its target."""


class ReconstructionError(KposimError):
    """Density-matrix reconstruction failed (conditioning or convergence).

    ``condition`` carries the design-operator condition number when relevant.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class SpanError(KposimError):
    """Process-tomography input states do not span the operator space."""


class BasisDegeneracyError(KposimError):
    """The process-matrix operator basis is degenerate (singular beta tensor)."""


class GridExtentError(KposimError):
    """A feature touches the edge of the sampled grid, so it cannot be located."""


class ConvergenceError(KposimError):
    """A convergence-with-dimension (or iteration) gate failed."""


class ConfigError(UsageError):
    """An experiment configuration file is invalid."""
