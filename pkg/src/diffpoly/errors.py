"""Exception types shared across the package."""


class DomainError(ValueError):
    """A numeric argument lies outside the domain of the operation."""


class InvalidArgument(ValueError):
    """Arguments are well-typed but inconsistent (wrong manifold, bad shape)."""


class PreconditionError(ValueError):
    """A documented precondition of the operation does not hold."""


class AccuracyError(RuntimeError):
    """A numerical procedure could not reach its declared accuracy."""
