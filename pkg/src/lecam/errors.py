"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input violates a mathematical domain requirement."""


class UsageError(ValueError):
    """Arguments are structurally invalid (wrong sizes, incompatible spaces)."""


class NumericalError(RuntimeError):
    """A numerical routine failed to reach its accuracy target."""
