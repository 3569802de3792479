class ScnError(Exception):
    """Base class for library errors."""


class ValidationError(ScnError, ValueError):
    pass


class ParseError(ValidationError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class NumericalError(ScnError, ArithmeticError):
    pass


class ConvergenceError(NumericalError):
    pass


class SingularPointError(NumericalError):
    """A chain-rule denominator vanishes at the expansion point."""

    def __init__(self, where: str, expression: str, value: float):
        self.where = where
        self.expression = expression
        self.value = value
        super().__init__(f"{where}: denominator {expression} = {value!r} vanishes")
