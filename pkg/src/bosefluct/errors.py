"""Domain errors raised by the package.

Every error derives from :class:`DomainError`; the command line maps these to
exit status 1 and prints the class name.
"""


class DomainError(Exception):
    """Base class for inputs outside the validity domain of a computation."""


class NonBracketable(DomainError):
    """A root could not be isolated in its predicted bracket."""


class AssumptionViolated(DomainError):
    """A standing assumption (e.g. ``L*|sigma| > 2`` for sigma < 0) fails."""


class IndexOutOfRange(DomainError):
    """A mode index exceeds the range held by a spectrum table."""


class DivergentSeries(DomainError):
    """A series was requested outside its region of convergence."""


class InvalidSchedule(DomainError):
    """A chemical-potential schedule is incompatible with the geometry."""


class ModeOutsideCutoff(DomainError):
    """A requested mode lies outside the retained mode set."""


class OrderTooHigh(DomainError):
    """A cumulant order above the supported maximum was requested."""


class SeriesRadiusExceeded(DomainError):
    """A time point lies outside the trust region of a truncated series."""


class ChainTooLarge(DomainError):
    """A hopping chain exceeds the size allowed for dense determinants."""


class UnattainableEnergy(DomainError):
    """A target energy is not a limit point of the finite-volume spectrum."""


class CutoffTooSmall(DomainError):
    """The Fock-space cutoff discards more thermal weight than allowed."""


class NotCovered(DomainError):
    """No limit theorem covers the requested parameter point."""


class InsufficientDivergence(DomainError):
    """A variance does not grow fast enough to extract a scaling exponent."""


__all__ = [
    "DomainError",
    "NonBracketable",
    "AssumptionViolated",
    "IndexOutOfRange",
    "DivergentSeries",
    "InvalidSchedule",
    "ModeOutsideCutoff",
    "OrderTooHigh",
    "SeriesRadiusExceeded",
    "ChainTooLarge",
    "UnattainableEnergy",
    "CutoffTooSmall",
    "NotCovered",
    "InsufficientDivergence",
]
