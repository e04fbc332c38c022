"""Exception types raised across the package."""


class HybridError(Exception):
    """Base class for every error raised by casimir_hybrid."""


class DimensionOverflow(HybridError):
    pass


class InvalidCutoff(HybridError, ValueError):
    pass


class IndexOutOfRange(HybridError, IndexError):
    pass


class SpaceMismatch(HybridError, ValueError):
    pass


class InvalidOrder(HybridError, ValueError):
    pass


class WrongModel(HybridError, ValueError):
    pass


class DegenerateDetuning(HybridError, ZeroDivisionError):
    pass


class SingularDenominator(HybridError, ZeroDivisionError):
    pass


class UnknownMethod(HybridError, ValueError):
    pass


class NotHermitian(HybridError, ValueError):
    pass


class NoConvergence(HybridError, RuntimeError):
    pass


class NoBracketedMinimum(HybridError, ValueError):
    pass


class ToleranceFailure(HybridError, RuntimeError):
    pass


class InvalidInitialState(HybridError, ValueError):
    pass


class WindowTooShort(HybridError, ValueError):
    pass


class NonuniformGrid(HybridError, ValueError):
    pass


class MissingObservable(HybridError, KeyError):
    pass


class ConfigParseError(HybridError, ValueError):
    """Config file could not be parsed; carries line/field diagnostics in the message."""


class ValidationError(HybridError, ValueError):
    """Config parsed but a field has an invalid value."""
