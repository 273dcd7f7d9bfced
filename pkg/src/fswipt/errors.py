"""Exception and warning types shared across the package."""


class ParameterError(ValueError):
    """An argument is outside its valid domain."""


class InfeasibleConstraint(ValueError):
    """The requested minimum harvest/capacity exceeds what the draw can deliver."""


class ResourceLimit(RuntimeError):
    """A solver would exceed its configured memory or enumeration budget."""


class ResourceInfeasible(ValueError):
    """A power budget cannot be spent under the per-subcarrier cap."""


class EmptySet(ValueError):
    """An allocation was requested over an empty subcarrier set."""


class ConfigError(ValueError):
    """Malformed or unknown simulation configuration."""


class EmptyResult(ValueError):
    """No records to serialize."""


class DegenerateChannelWarning(RuntimeWarning):
    """Positive power budget over subcarriers whose gains are all zero."""
