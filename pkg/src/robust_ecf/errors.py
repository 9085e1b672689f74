"""Exception hierarchy.

Validation problems (bad input, bad configuration) derive from
``ValidationError``; numerical breakdowns derive from ``NumericalError``.
The CLI maps these onto exit codes 2 and 3.
"""


class RobustECFError(Exception):
    """Base class for all package errors."""


class ValidationError(RobustECFError, ValueError):
    pass


class NumericalError(RobustECFError, ArithmeticError):
    pass


class InsufficientData(ValidationError):
    pass


class DegenerateScale(NumericalError):
    """Scale estimate is zero, e.g. all responses are equal."""


class SingularScore(NumericalError):
    """Mean score derivative is numerically zero for some population."""


class FlaggedInsideSupport(NumericalError):
    """A flagged (missing) fit value falls where the weight function is positive."""


class AllDegenerate(NumericalError):
    """Every candidate bandwidth yields too many empty leave-one-out windows."""


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(ValidationError):
    pass


class TooFewGroups(ValidationError):
    pass


class ConfigError(ValidationError):
    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
