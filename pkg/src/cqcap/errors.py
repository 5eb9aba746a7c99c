"""Exception hierarchy shared by all modules."""


class CqcapError(Exception):
    """Base class for library errors."""


class InvalidStateError(CqcapError, ValueError):
    """An operator or distribution violates its type invariants."""


class DimensionMismatchError(CqcapError, ValueError):
    """Operands live on spaces (or label sets) of different size."""


class BudgetExceededError(CqcapError):
    """A dense construction or enumeration would exceed the configured budget."""


class ContractViolation(CqcapError):
    """A bound that the construction guarantees did not hold numerically.

    ``stage`` names the operation that failed so that the CLI can report it.
    """

    def __init__(self, stage, message):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
