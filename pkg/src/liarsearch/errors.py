"""Exception types shared across the package."""


class LiarSearchError(Exception):
    """Base class for all package errors."""


class DistributionError(LiarSearchError, ValueError):
    """Probability data is malformed (non-positive weight, sum != 1, ...)."""


class DomainError(LiarSearchError, ValueError):
    """An operation was called outside its mathematical domain."""


class ThetaBitsExhausted(LiarSearchError, RuntimeError):
    """A point/midpoint comparison did not resolve within the bit cap.

    The probability of hitting this with the default 4096-bit cap is at most
    2^-4096 per comparison; it is treated as fatal rather than retried.
    """


class InvariantViolation(LiarSearchError, RuntimeError):
    """A guarantee the search algorithms promise was observed to fail."""


class ResourceBudgetExceeded(LiarSearchError, RuntimeError):
    """An exhaustive exploration outgrew its configured state budget."""


class SearchNonTermination(LiarSearchError, RuntimeError):
    """A run burned through its fuel without halting.

    Unreachable for the unmodified algorithms at sane sizes; mutated
    (negative-control) runs surface here and count as invalid.
    """
