"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A parameter failed validation. ``field`` is the dotted config path."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class DomainError(ValueError):
    """A point or sample lies outside the domain where a map is defined."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class FlowRangeError(ValueError):
    """A t-axis trajectory leaves the chart t-range."""

    def __init__(self, exit_time, t0):
        super().__init__(f"trajectory from t0={t0!r} leaves the chart t-range at flow time {exit_time!r}")
        self.exit_time = exit_time
        self.t0 = t0


class ModelViolation(RuntimeError):
    """A structural property the model guarantees was found broken numerically."""


class PreconditionError(ValueError):
    """An input violates an operation's stated precondition (e.g. a non-vertical disk)."""


class Inconclusive(RuntimeError):
    """A numerical procedure could not decide at the requested resolution or cap."""


class DegenerateDistribution(RuntimeError):
    """The characteristic-field system is singular at a point."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
