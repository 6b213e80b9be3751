"""Exception types raised by the modradon package."""


class ModRadonError(Exception):
    """Base class for all package errors."""


class DomainError(ModRadonError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SizeError(ModRadonError, ValueError):
    """A sequence or grid is too short / mismatched for the requested operation."""


class ConfigError(ModRadonError, ValueError):
    """A configuration value violates a structural requirement."""


class ConditionError(ModRadonError, ValueError):
    """A sampling condition required by a guarantee does not hold."""


class MarginError(ModRadonError, ValueError):
    """The left sample margin is too small.

    Recoverable: the caller may retry with a larger margin or a higher
    difference order.
    """


class NumericError(ModRadonError, RuntimeError):
    """A numerical procedure failed to converge or left its validity range."""


class ParseError(ModRadonError, ValueError):
    """A file could not be parsed; the message names the offending location."""
