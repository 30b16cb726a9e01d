"""Exception types shared across the simulator."""


class ShcdsimError(Exception):
    """Base class for all simulator errors."""


class ParameterError(ShcdsimError, ValueError):
    """A function argument is outside its documented domain."""


class ConfigError(ShcdsimError, ValueError):
    """A configuration object is inconsistent or incomplete."""


class NoPeakError(ShcdsimError):
    """Correlation surface is degenerate (all-zero input), no peak exists."""


class SyncFailureError(ShcdsimError):
    """Frame synchronization found no credible training correlation peak."""


class LoStarvedError(ShcdsimError):
    """Received LO power is too low for self-homodyne detection."""


class EqualizerDivergenceError(ShcdsimError):
    """Adaptive equalizer error power ran away instead of converging."""


class SkewOutOfRangeError(ShcdsimError):
    """Estimated reference skew exceeds what the tap span can absorb."""


class DegenerateInputError(ShcdsimError):
    """A measurement was requested on data with no usable content."""
