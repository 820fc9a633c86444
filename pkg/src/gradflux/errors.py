"""Exception and warning types raised across the package."""


class GradfluxError(Exception):
    """Base class for all package errors."""


class DomainError(GradfluxError, ValueError):
    """An argument lies outside the finite domain of a potential."""


class GridError(GradfluxError, ValueError):
    """A requested grid does not cover the region needed for the computation."""


class SizeError(GradfluxError, ValueError):
    """A graph or enumeration exceeds the configured budget."""


class ModeError(GradfluxError, ValueError):
    """Unsupported combination of operation mode and graph kind."""


class QuadratureError(GradfluxError, RuntimeError):
    """Estimated discretization error exceeds the allowed tolerance."""


class ConvergenceError(GradfluxError, RuntimeError):
    """An iterative solver failed to meet its stopping criterion."""


class SolveError(ConvergenceError):
    """A linear solve left a residual above tolerance."""


class EnvelopeError(GradfluxError, RuntimeError):
    """Rejection sampler acceptance collapsed, which signals a broken envelope."""


class InsufficientSamples(GradfluxError, ValueError):
    """Too few retained samples to form the required number of batches."""


class PremiseNotMet(GradfluxError, ValueError):
    """The premise of a conditional check does not hold for the input."""


class HypothesisFailed(GradfluxError, ValueError):
    """A pointwise hypothesis failed; ``witness`` holds the offending point."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ProfileError(GradfluxError, ValueError):
    """An isoperimetry profile does not satisfy the required growth hypotheses."""


class FormatError(GradfluxError, ValueError):
    """A data file does not follow its declared text format."""


class KKTWarning(UserWarning):
    """Stationarity multipliers of a simplex solution disagree beyond tolerance."""
