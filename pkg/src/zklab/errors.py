"""Exception hierarchy shared by all modules."""


class ZKLabError(Exception):
    """Base class for every error raised deliberately by the package."""


class NonFiniteError(ZKLabError, ValueError):
    pass


class GridMismatchError(ZKLabError, ValueError):
    pass


class ConvergenceError(ZKLabError):
    """Successive quadrature refinements disagree by more than allowed."""


class CFLError(ZKLabError, ValueError):
    pass


class BlowUpError(ZKLabError):
    """Norm growth or NaN detected; carries the last valid time."""

    def __init__(self, message: str, last_time: float):
        super().__init__(message)
        self.last_time = last_time


class WeightOverflowError(ZKLabError, OverflowError):
    pass


class SupportError(ZKLabError, ValueError):
    """Test function violates the admissible support condition."""


class InconclusiveError(ZKLabError):
    """A contamination or window guard tripped; the check cannot decide."""


class ConfigError(ZKLabError, ValueError):
    pass
