"""Exception types shared across the toolkit."""


class RejectedInputError(ValueError):
    """Input violates an operation's precondition."""


class DegenerateRegimeError(RejectedInputError):
    """Input lies outside the non-degenerate regime an operation requires."""


class ResourceLimitError(RuntimeError):
    """Requested size exceeds a factorial or dimension guard."""


class InternalConsistencyError(RuntimeError):
    """A numerically constructed object failed its own defining relations."""
