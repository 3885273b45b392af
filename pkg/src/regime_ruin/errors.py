"""Exception hierarchy shared by all modules."""


class RegimeRuinError(Exception):
    """Base class for every error raised by the package."""


class ModelError(RegimeRuinError, ValueError):
    """Invalid model specification."""


class RowSumError(ModelError):
    pass


class NegativeOffDiagonal(ModelError):
    pass


class NonIrreducible(ModelError):
    pass


class MonotonePremium(ModelError):
    pass


class NonPositiveVolatility(ModelError):
    pass


class InvalidClaimDist(ModelError):
    pass


class NonPositiveExponent(RegimeRuinError, ValueError):
    pass


class NotPowerTail(RegimeRuinError):
    pass


class NoBracket(RegimeRuinError):
    pass


class BadDelta(RegimeRuinError, ValueError):
    pass


class Divergent(RegimeRuinError):
    pass


class ExcursionOverflow(RegimeRuinError, RuntimeError):
    pass


class BadStep(RegimeRuinError, ValueError):
    pass


class BadHorizon(RegimeRuinError, ValueError):
    pass


class NotRuinCertain(RegimeRuinError):
    pass


class DegenerateTail(RegimeRuinError):
    pass


class EmptyWindow(RegimeRuinError, ValueError):
    pass


class ZeroTail(RegimeRuinError, ValueError):
    pass


class TooFewSamples(RegimeRuinError, ValueError):
    pass


class ParseError(RegimeRuinError):
    """Config file could not be parsed; carries the offending line if known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(RegimeRuinError):
    """Config parsed but the model it describes is invalid."""

    def __init__(self, cause):
        self.cause = cause
        super().__init__(f"{type(cause).__name__}: {cause}")
