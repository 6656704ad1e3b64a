"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called outside its documented preconditions."""


class DegeneracyError(ContractViolation):
    """Geometric input is affinely degenerate for the requested operation."""

    def __init__(self, message: str, affine_dim: int):
        super().__init__(message)
        self.affine_dim = affine_dim


class AmbiguousTopologyError(ValueError):
    """The query radius sits on a critical value where topology is undefined.

    Perturb the radius (e.g. t -> t * (1 + 1e-9)) and retry.
    """


class ResourceBudgetError(RuntimeError):
    """A computation would exceed the cell budget; carries the feasible h."""

    def __init__(self, message: str, required_h: float):
        super().__init__(message)
        self.required_h = required_h


class ValidationError(ValueError):
    """A scene document failed validation; names the offending primitive."""

    def __init__(self, message: str, primitive_index: int | None = None):
        super().__init__(message)
        self.primitive_index = primitive_index
