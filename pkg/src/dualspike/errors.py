"""Exception types raised across the package."""


class DualSpikeError(Exception):
    """Base class for all package-specific errors."""


class NoConvergenceError(DualSpikeError):
    """An iterative refinement failed; carries the last iterate."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class LevelSetEmptyError(DualSpikeError):
    """The requested level lies below the model minimum."""


class InfeasibleError(DualSpikeError):
    """A constraint set was detected to be empty."""


class RankDeficientError(DualSpikeError):
    """A matrix is (numerically) rank deficient; carries sigma_min."""

    def __init__(self, message, sigma_min=None):
        super().__init__(message)
        self.sigma_min = sigma_min


class EmptySupportError(DualSpikeError):
    """No certificate maximizer qualifies as a source location."""


class InsufficientSamplesError(DualSpikeError):
    """Fewer samples than the 2k needed for the reduced Jacobian."""


class CurvatureSignError(DualSpikeError):
    """A certificate curvature that must be negative is not."""


class RadiusTooLargeError(DualSpikeError):
    """A perturbation radius exceeds the bound's validity region."""

    def __init__(self, message, margin=None):
        super().__init__(message)
        self.margin = margin


class ConfigError(DualSpikeError):
    """An experiment configuration file is invalid; carries the key."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
