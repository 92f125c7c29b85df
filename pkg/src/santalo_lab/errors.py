"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UnsupportedError(NotImplementedError):
    """The operation is not available for this kind of input."""


class DiagnosticsError(RuntimeError):
    """A numerical procedure ran but its self-checks failed."""
