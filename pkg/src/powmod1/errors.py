"""Exception hierarchy shared by all powmod1 modules."""


class PowmodError(Exception):
    """Base class for all powmod1 errors."""


class NonPositiveBase(PowmodError):
    """A power was requested for an interval that is not strictly positive."""


class InwardCollapse(PowmodError):
    """Inward rounding crossed the interval; recompute at higher precision."""


class Uncertain(PowmodError):
    """A certified decision could not be made at the current precision.

    Raised inside a precision ladder; ``escalate`` retries at doubled
    precision and converts persistent uncertainty into PrecisionExhausted.
    """


class PrecisionExhausted(PowmodError):
    """The precision ladder hit its cap without certifying a decision."""


class GapConditionSuspect(PowmodError):
    """Generated exponent gaps do not look divergent on the prefix."""


class InsertionInfeasible(PowmodError):
    """No insertion count satisfies the densification membership window.

    With exact rational arithmetic on a valid strictly increasing sequence
    this cannot happen; seeing it means the input violated a precondition.
    """


class NoValidIndex(PowmodError):
    """The level condition never holds through the end of the prefix."""


class NoValidStart(PowmodError):
    """No start level satisfies all construction preconditions."""


class CountShortfall(PowmodError):
    """An image interval certifiably holds fewer integers than required."""

    def __init__(self, message, level=None):
        super().__init__(message)
        self.level = level


class InsufficientDepth(PowmodError):
    """Not enough tree levels / scales for the requested estimate."""


class CertificationFailure(PowmodError):
    """A certified check that must hold was proven false."""


class UsageError(PowmodError):
    """Bad command line, config file, or input file."""
