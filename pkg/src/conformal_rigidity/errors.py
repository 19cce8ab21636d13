"""Exception hierarchy shared by all modules."""


class ConformalError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(ConformalError, ValueError):
    pass


class DegenerateForm(ConformalError, ValueError):
    pass


class InvalidParameter(ConformalError, ValueError):
    pass


class ParseError(ConformalError, ValueError):
    """Malformed expression text. ``position`` is a 0-based character offset."""

    def __init__(self, message, position=None):
        self.position = position
        self.message = message
        where = "" if position is None else f" at position {position}"
        super().__init__(f"{message}{where}")


class UnknownIdentifier(ParseError):
    pass


class ArityError(ParseError):
    pass


class DomainError(ConformalError, ValueError):
    """Evaluation outside the domain of an expression or immersion."""


class PointAtInfinity(ConformalError):
    pass


class IsotropicPoint(DegenerateForm):
    """The tangent space is tangent to the isotropic cone (det g = 0)."""


class NullNormal(ConformalError):
    pass


class IsotropicDirection(ConformalError, ValueError):
    pass


class SingularFrame(ConformalError):
    pass


class NotProportional(ConformalError):
    def __init__(self, message, g_residual=None, h_residual=None):
        self.g_residual = g_residual
        self.h_residual = h_residual
        super().__init__(message)


class UmbilicalPoint(ConformalError):
    pass


class DegenerateConfiguration(ConformalError):
    pass


class Refusal(ConformalError):
    """A hypothesis of the rigidity theorem is not met; no verdict is certified."""


class DimensionTooSmall(Refusal):
    pass


class GridContainsUmbilics(Refusal):
    def __init__(self, message, points=()):
        self.points = list(points)
        super().__init__(message)


class ConfigError(ConformalError, ValueError):
    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field is not None:
            prefix += f"{field}: "
        super().__init__(prefix + message)
