"""Exception hierarchy shared by the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class InstanceFormatError(ValueError):
    """An instance file is malformed.

    The offending JSON field is kept on ``field`` so callers can report it.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"field {field!r}: {message}")


class SolverError(RuntimeError):
    """Base class for failures raised while solving."""


class DegenerateSolutionError(SolverError):
    """Every coordinate was pruned; there is no direction left to normalize."""


class NumericalFailureError(SolverError):
    """The Newton system could not be solved even after regularization."""

    def __init__(self, iteration, message="Hessian factorization failed"):
        self.iteration = iteration
        super().__init__(f"{message} at Newton iteration {iteration}")
