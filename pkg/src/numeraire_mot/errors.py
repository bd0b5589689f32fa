"""Exception hierarchy.  Everything raised on purpose derives from MOTError."""


class MOTError(Exception):
    pass


class DomainError(MOTError, ValueError):
    pass


class OutOfRange(MOTError, ValueError):
    pass


class BracketError(MOTError, ValueError):
    pass


class NoConvergence(MOTError, RuntimeError):
    pass


class MeanMismatch(MOTError, ValueError):
    pass


class NoDensity(MOTError, TypeError):
    pass


class AssumptionViolated(MOTError):
    pass


class NumericsFailure(MOTError, RuntimeError):
    def __init__(self, message, x=None):
        super().__init__(message if x is None else f"{message} (at x={x!r})")
        self.x = x


class MartingaleViolation(MOTError, ValueError):
    pass


class MethodMismatch(MOTError):
    pass


class Infeasible(MOTError):
    pass


class Unbounded(MOTError):
    pass


class DegenerateBasis(MOTError):
    pass


class ConfigError(MOTError, ValueError):
    pass
