"""Exception types shared across the package."""


class ChannelError(ValueError):
    """Malformed probability table or channel parameter."""


class BudgetExceeded(RuntimeError):
    """An exact computation would exceed its configured size budget."""


class SamplingError(RuntimeError):
    """Rejection sampling gave up (degenerate region)."""


class PreconditionError(ValueError):
    """An operation was called outside its domain."""
