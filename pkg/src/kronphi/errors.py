"""Exception types raised across the package."""


class ShapeMismatchError(ValueError):
    """Operand sizes are incompatible (e.g. a factor does not match a tensor mode)."""


class OracleSizeError(ValueError):
    """A dense reference computation was requested for a problem that is too large."""


class SeriesConvergenceError(ArithmeticError):
    """A truncated series did not reach its tolerance within the iteration cap."""


class DivergenceError(FloatingPointError):
    """The time-stepping state became non-finite."""

    def __init__(self, step, t=None):
        self.step = step
        self.t = t
        where = f"step {step}" if t is None else f"step {step} (t={t:.6g})"
        super().__init__(f"non-finite state detected at {where}")


class ConfigurationError(ValueError):
    """A stepper was configured without something it needs."""
