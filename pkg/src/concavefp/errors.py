"""Exception hierarchy shared by all modules."""


class ConcaveFPError(Exception):
    """Base class for library errors."""


class NegativeInput(ConcaveFPError, ValueError):
    """A mapping was evaluated outside the nonnegative orthant."""


class NonFiniteResult(ConcaveFPError, ArithmeticError):
    """A mapping or limit produced inf/nan."""


class NonPositiveResult(ConcaveFPError, ValueError):
    """A mapping returned a component that is not strictly positive."""


class NonConverged(ConcaveFPError, ArithmeticError):
    """An iterative procedure exhausted its budget."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SpectralRadiusTooLarge(ConcaveFPError, ValueError):
    """rho(M) >= 1, so (I - M) has no nonnegative inverse."""

    def __init__(self, rho):
        super().__init__(f"spectral radius {rho:.12g} is not below 1")
        self.rho = rho


class MissingLowerBound(ConcaveFPError, ValueError):
    pass


class NotMonotoneStart(ConcaveFPError, ValueError):
    pass


class EmptyCell(ConcaveFPError, ValueError):
    """A base station serves no users, so its load component would be zero."""


class TooManyDiscards(ConcaveFPError, RuntimeError):
    pass


class LowerBoundError(ConcaveFPError, ArithmeticError):
    """Aggregated per-entry failures of a lower bounding matrix build."""

    def __init__(self, failures):
        self.failures = failures
        details = "; ".join(f"({i},{k}): {exc}" for (i, k), exc in failures)
        super().__init__(f"{len(failures)} entries failed: {details}")
