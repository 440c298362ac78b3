"""Exception types shared across the package."""


class ArgumentError(ValueError):
    """Raised when an argument violates a documented precondition."""


class NotHermitianError(ArgumentError):
    """Raised when a matrix expected to be Hermitian is not.

    Carries the maximal entrywise asymmetry so callers see how far the
    input was from Hermitian.
    """

    def __init__(self, max_asymmetry, tolerance, context=""):
        self.max_asymmetry = float(max_asymmetry)
        self.tolerance = float(tolerance)
        where = f" ({context})" if context else ""
        super().__init__(
            f"matrix is not Hermitian{where}: max |M - M*| = "
            f"{self.max_asymmetry:.3e} exceeds tolerance {self.tolerance:.3e}"
        )


class NotPositiveDefiniteError(ArgumentError):
    """Raised when a matrix expected to be positive definite is not."""

    def __init__(self, lambda_min, context=""):
        self.lambda_min = float(lambda_min)
        where = f" ({context})" if context else ""
        super().__init__(
            f"matrix is not positive definite{where}: "
            f"lambda_min = {self.lambda_min:.6e}"
        )


class SemiboundError(ArgumentError):
    """Raised when a claimed lower bound is violated by the actual spectrum."""


class GridError(ArgumentError):
    """Raised for unusable time grids or degenerate step sizes."""


class NumericalError(RuntimeError):
    """Raised when a computation fails internal consistency checks."""


class ConfigError(Exception):
    """Validation failure of an experiment configuration.

    ``errors`` holds every problem found, not just the first one.
    """

    def __init__(self, errors):
        self.errors = [str(e) for e in errors]
        super().__init__("; ".join(self.errors))
