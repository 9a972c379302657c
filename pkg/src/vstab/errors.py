"""Exception hierarchy shared by the whole package."""


class VstabError(Exception):
    """Base class for all structured errors raised by this package."""


class ValidationError(VstabError):
    """An object failed an axiom check.

    Carries the exact witness (a subset mask, a pair or a triple of masks)
    so callers can report precisely which constraint broke.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class PreconditionError(VstabError):
    """An operation was called on inputs violating its stated preconditions."""


class InstanceTooLargeError(VstabError):
    """An exhaustive enumeration was requested beyond the supported size."""


class BudgetExceededError(VstabError):
    """An enumeration exceeded the configured element budget."""

    def __init__(self, message, budget):
        super().__init__(message)
        self.budget = budget
