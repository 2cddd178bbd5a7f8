"""Exception hierarchy shared by the simulation, checking and CLI layers."""


class ChatterError(Exception):
    """Base class for every error raised by this package."""


class ModelError(ChatterError, ValueError):
    """Invalid model construction (bad restitution, bad box, ...)."""


class GrazingImpact(ChatterError):
    """Relative approach speed is below the grazing threshold."""


class InvalidApproach(ChatterError):
    """Impact requested while the bead moves away from the surface."""


class IntegrationError(ChatterError):
    pass


class StepSizeUnderflow(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


class NoSignChange(IntegrationError):
    pass


class OutOfRange(IntegrationError):
    pass


class PenetrationDetected(ChatterError):
    pass


class TooFewImpacts(ChatterError):
    pass


class DisjointWindows(ChatterError):
    pass


class NonFiniteSample(ChatterError):
    pass


class HistoryGap(ChatterError):
    pass


class ExpressionError(ChatterError, ValueError):
    pass


class ExpressionSyntaxError(ExpressionError):
    """Parse failure; carries the byte offset and the set of expected tokens."""

    def __init__(self, message, position, expected=()):
        self.position = position
        self.expected = tuple(expected)
        detail = f"{message} at offset {position}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class UnknownIdentifier(ExpressionSyntaxError):
    pass


class EvalError(ExpressionError):
    pass


class SchemaError(ChatterError, ValueError):
    """Configuration validation failure; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class UnknownModel(SchemaError):
    def __init__(self, name):
        super().__init__("model", f"unknown model {name!r}")


class UnknownParameter(SchemaError):
    pass
