"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid grid or run configuration (bad sizes, malformed files, unknown keys)."""


class ParameterError(ValueError):
    """A physical or numerical parameter is outside its admissible range."""


class UnsupportedRegimeError(ParameterError):
    """Coefficient choice makes an implicit operator non-invertible (b < 0 or d < 0)."""


class UsageError(ValueError):
    """Operation invoked with inconsistent arguments (mismatched grids, bad tags)."""


class NumericsError(ArithmeticError):
    """Non-finite values encountered in a numerical operation."""


class BlowUpError(NumericsError):
    """Time integration produced non-finite fields or lost positive depth."""

    def __init__(self, message, t=None, step=None):
        super().__init__(message)
        self.t = t
        self.step = step
