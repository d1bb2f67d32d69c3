"""Exception hierarchy shared by every module of the package."""


class LrrError(Exception):
    """Base class for all errors raised by lrr."""


class InvalidArgumentError(LrrError, ValueError):
    """A scalar parameter is outside its admissible range."""


class InvalidInputError(LrrError, ValueError):
    """Array input is malformed (non-finite entries, too small, ...)."""


class DimensionError(LrrError, ValueError):
    """Operands have incompatible shapes or lengths."""


class PreconditionError(LrrError, ValueError):
    """An ordering or sign precondition of a closed-form solution is violated."""


class UnsupportedOperatorError(LrrError, TypeError):
    """The requested solver path does not handle this degradation operator."""


class ConfigurationError(LrrError, ValueError):
    """Solver or experiment configuration is invalid."""


class FormatError(LrrError, ValueError):
    """An input file does not follow its declared format."""


class InternalConsistencyError(LrrError, RuntimeError):
    """Internal data structures disagree (e.g. uncovered pixels at aggregation)."""
