"""
Exception hierarchy for the estimation core.

Every error derives from ValueError so the service and API layers can keep
catching ValueError the way they do for validation failures.
"""


class SpatialCausalError(ValueError):
    """Base class for all estimation errors."""


class InvalidArgumentError(SpatialCausalError):
    """An argument violates an operation's precondition."""


class ConfigError(SpatialCausalError):
    """A run or learner configuration is malformed."""


class DegenerateSplitError(SpatialCausalError):
    """A spatial block split left an empty evaluation set."""


class DegenerateDesignError(SpatialCausalError):
    """The exposure has no variance in a regression design."""


class DegenerateExposureError(SpatialCausalError):
    """The exposure has no variation left after removing its spatial mean."""


class NumericalFailureError(SpatialCausalError):
    """A linear system could not be solved."""


class CapacityExceededError(SpatialCausalError):
    """An exact solver was asked to handle more points than it is allowed."""


class UnsupportedDatasetError(SpatialCausalError):
    """The dataset lacks the retained structural noise needed for oracles."""


class CrossfitFailureError(SpatialCausalError):
    """Every cross-fitting fold failed."""


class BootstrapFailureError(SpatialCausalError):
    """Too many bootstrap resamples failed to produce an estimate."""

    def __init__(self, message, estimates=None, failures=0, resamples=0):
        super().__init__(message)
        self.estimates = list(estimates or [])
        self.failures = failures
        self.resamples = resamples


class IngestionError(SpatialCausalError):
    """An external dataset could not be read into a Dataset."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


# Failures of a single fit that are recorded rather than propagated. Covers
# the domain errors above, numpy's LinAlgError and scikit-learn or scipy
# input checks (all ValueError) and floating-point traps.
FIT_FAILURES = (ValueError, FloatingPointError)
