class DomainError(ValueError):
    """Input outside an operation's domain (e.g. y <= 0, bad parameter)."""


class StepFailure(RuntimeError):
    """Integration produced a non-finite state."""


class NoFixedPointError(RuntimeError):
    """A required fixed point does not exist for the given parameters."""


class ShapeMismatch(ValueError):
    pass
