"""Exception types shared across the toolkit."""


class ParameterError(ValueError):
    """A parameter or spec violates its admissible range."""


class DataValidationError(ValueError):
    """Input data breaks a documented invariant (weights, geometry, shapes)."""


class NumericalError(RuntimeError):
    """An iterative numerical procedure failed to converge."""
