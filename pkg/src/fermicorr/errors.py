"""Exception types shared across the package."""


class FermicorrError(Exception):
    """Base class for all package-specific errors."""


class DomainError(FermicorrError, ValueError):
    """An argument violates a documented precondition."""


class CapacityError(FermicorrError, ValueError):
    """A request exceeds a hard size guard (use the scalable path instead)."""


class ParseError(FermicorrError, ValueError):
    """Malformed input file.

    Carries the 1-based line number where parsing failed, when known.
    """

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ConvergenceError(FermicorrError, RuntimeError):
    """Iterative solver did not reach the requested tolerance.

    Carries the best available estimate so callers can inspect it.
    """

    def __init__(self, message, best_energy=None, residual_norm=None):
        super().__init__(message)
        self.best_energy = best_energy
        self.residual_norm = residual_norm
