"""Exception types shared across the package."""


class HamidError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(HamidError):
    """Operands live on different qubit counts or matrix dimensions."""


class ModelError(HamidError):
    """A Hamiltonian model violates its structural invariants."""


class ClosureError(HamidError):
    """The supplied operator set is not closed under the model's adjoint action."""


class EmptySystemError(HamidError):
    """All Hankel singular values fell below the truncation threshold."""


class AliasingError(HamidError):
    """Discrete eigenvalues too close to the matrix-log branch cut.

    The sampled rotation per step is near (or past) half a revolution, so
    the recovered continuous generator would be aliased. Re-measure with
    a smaller sampling period.
    """


class StructuralMismatchError(HamidError):
    """Realization order does not match the model's accessible dimension."""


class NoSolutionError(HamidError):
    """The parameter solver found no estimate below the residual tolerance."""


class FileFormatError(HamidError):
    """A model or trace file could not be parsed."""
