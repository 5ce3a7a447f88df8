"""Exception types shared across the package.

Most errors double as ValueError so that callers using plain ``except
ValueError`` keep working; the CLI maps each class to a distinct exit code.
"""


class KnockfdrError(Exception):
    """Base class for every error raised by knockfdr."""


class ParameterError(KnockfdrError, ValueError):
    """A tuning parameter is outside its valid range."""


class DimensionError(KnockfdrError, ValueError):
    """Array shapes are incompatible with the requested operation."""


class RankDeficiencyError(KnockfdrError, ValueError):
    """The design matrix does not have full column rank."""


class NotPositiveDefiniteError(KnockfdrError, ValueError):
    """A matrix required to be positive (semi)definite is not."""


class ConvergenceError(KnockfdrError, RuntimeError):
    """An iterative solver exceeded its iteration cap or failed its
    optimality check."""


class DataFormatError(KnockfdrError, ValueError):
    """An input file could not be parsed."""
