"""Exception taxonomy shared across the package."""


class NastyaError(Exception):
    """Base class for all errors raised by this package."""


class InputError(NastyaError, ValueError):
    """An argument violates a documented precondition."""


class ParseError(NastyaError, ValueError):
    """A text input (LibSVM file, spec file) is malformed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DegeneracyError(NastyaError, ArithmeticError):
    """A linear system needed by a solver is singular or nearly so."""


class ResourceError(NastyaError, RuntimeError):
    """An exact enumeration would exceed its size bound."""


class CapabilityError(NastyaError, RuntimeError):
    """A computation needs an optional problem field that is missing."""

    def __init__(self, missing_field: str, detail: str = ""):
        self.missing_field = missing_field
        message = f"missing required field: {missing_field}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class RegimeError(NastyaError, ValueError):
    """Stepsizes violate the admissible range of the requested bound."""

    def __init__(self, violated: str):
        self.violated = violated
        super().__init__(f"stepsize condition violated: {violated}")


class DataError(NastyaError, ValueError):
    """Computed statistics are inconsistent beyond estimation tolerance."""


class ConfigError(NastyaError, ValueError):
    """An experiment spec file is invalid."""


class DivergenceError(NastyaError, ArithmeticError):
    """An iterate became non-finite during optimization."""

    def __init__(self, round_index: int, where: str = ""):
        self.round_index = round_index
        message = f"non-finite iterate at round {round_index}"
        if where:
            message += f" ({where})"
        super().__init__(message)
