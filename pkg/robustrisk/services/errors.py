"""Exception hierarchy for robustrisk.

Every error raised on purpose by the library derives from RobustRiskError so
callers (the CLI in particular) can separate user mistakes from bugs.
"""


class RobustRiskError(Exception):
    """Base exception for all library errors."""


class EmptySample(RobustRiskError):
    """Raised when a distribution is built from no samples."""


class NonFiniteValue(RobustRiskError):
    """Raised when a sample contains NaN or infinity."""


class OutOfRange(RobustRiskError, ValueError):
    """Raised when a parameter lies outside its admissible range."""


class UnequalSupportSize(RobustRiskError):
    """Raised when two distributions with different atom counts are compared."""


class InvalidSpectrum(RobustRiskError, ValueError):
    """Raised for a spectral function that is negative, increasing or not normalized."""


class AlphaTooSmallForSample(RobustRiskError):
    """Raised when alpha * n < 1 so the tail density 1/alpha is not realizable."""


class Unsupported(RobustRiskError):
    """Raised when an operation is not defined for the given risk measure."""


class ValidityDomain(RobustRiskError):
    """Raised when a closed form is outside the domain where it holds."""


class InvalidDensity(RobustRiskError):
    """Raised for a dual density that is negative or does not average to one."""


class CertificateError(RobustRiskError):
    """Raised when an internal optimality certificate fails (a bug, not user error)."""


class InputFormatError(RobustRiskError, ValueError):
    """Raised when a returns or spectrum file cannot be parsed."""
