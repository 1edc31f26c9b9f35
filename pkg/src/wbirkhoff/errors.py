"""Exception types shared across the package.

Every error that callers are expected to catch is a subclass of
WbirkhoffError, so CLI code can map the family to exit codes.
"""


class WbirkhoffError(Exception):
    """Base class for all package-specific errors."""


class ParseError(WbirkhoffError):
    """A spec string or config document failed to parse."""


class DimensionError(WbirkhoffError):
    """Dimension mismatch between configured objects."""


class DomainError(WbirkhoffError):
    """Argument outside the mathematical domain of an operation."""


class DegenerateWindow(WbirkhoffError):
    """The weight window sums to zero (N too small for a bump weight)."""


class PrecisionExhausted(WbirkhoffError):
    """Quadrature could not reach tolerance at the configured digit count."""


class SupportMismatch(WbirkhoffError):
    """A multi-index references coordinates beyond a vector's truncation."""


class TailBoundUnavailable(WbirkhoffError):
    """No summable tail bound exists for the requested coefficient rule."""


class QuadratureBudgetExceeded(WbirkhoffError):
    """Certified oscillatory quadrature tolerance unreachable in budget."""


class BudgetDegenerate(WbirkhoffError):
    """Error-budget order selection fell below 2 (N too small)."""


class InsufficientData(WbirkhoffError):
    """Not enough usable grid points for a rate fit."""
