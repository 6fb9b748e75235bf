"""Exception hierarchy. The CLI maps each class onto an exit code."""


class ChansimError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ValidationError(ChansimError, ValueError):
    """Malformed input: bad distribution, out-of-range symbol, shape mismatch."""

    exit_code = 2


class ZeroProbabilityError(ValidationError):
    """Conditioning on (or normalizing) an event of probability zero."""


class InfeasibleError(ValidationError):
    """Requested target cannot be met (e.g. a payoff above the game's maximum)."""


class CapExceededError(ChansimError):
    """An enumeration or codebook size cap would be exceeded."""

    exit_code = 3


class ConsistencyError(ChansimError, ArithmeticError):
    """An identity that must hold for every valid input was violated.

    Signals an implementation bug rather than bad input.
    """

    exit_code = 4
