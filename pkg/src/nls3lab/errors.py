"""Exception hierarchy shared by every module of the lab."""


class LabError(Exception):
    """Base class for all errors raised by nls3lab."""


class DimensionError(LabError, ValueError):
    pass


class ValidationError(LabError, ValueError):
    pass


class ContractError(LabError, ValueError):
    """A documented precondition of an operation was violated."""


class NonResonanceError(ContractError):
    """The v/w equation forms are only defined when 2*beta/3 is not an integer."""


class StepFailure(LabError, ArithmeticError):
    def __init__(self, message: str, mode: int | None = None):
        super().__init__(message)
        self.mode = mode


class QuadratureError(LabError, ValueError):
    pass


class CapacityError(LabError, RuntimeError):
    pass


class StepSizeError(LabError, ValueError):
    pass


class ConfigError(LabError, ValueError):
    """Aggregated configuration problems; ``problems`` lists every one found."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = list(problems)
