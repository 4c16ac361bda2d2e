"""Exception and warning classes raised by the package."""


class ShapeError(ValueError):
    """Array or field shapes (or grids) do not match."""


class DomainError(ValueError):
    """An argument lies outside the domain where the operation is defined."""


class StabilityError(ValueError):
    """The explicit Euler sweep would be unstable: s_x * max(sigma) >= 1."""


class ConfigError(ValueError):
    """Invalid experiment configuration.

    ``field`` names the offending config entry (dotted path).
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class SupportWarning(UserWarning):
    """A field expected to live in the unit disk carries energy outside it."""
