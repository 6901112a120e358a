"""Exception hierarchy shared by all modules.

Every error carries a short machine-readable ``kind`` so the command-line
front end can map it to an exit status without string matching.
"""


class NDDEError(Exception):
    """Base class for all package errors."""

    kind = "error"


class ValidationError(NDDEError, ValueError):
    kind = "validation"


class GridAlignmentError(ValidationError):
    kind = "grid_alignment"


class DomainError(ValidationError):
    kind = "domain"


class ConstructionError(ValidationError):
    kind = "construction"


class RegionError(ValidationError):
    kind = "region"


class ConfigurationError(ValidationError):
    kind = "configuration"


class PreconditionError(ValidationError):
    kind = "precondition"


class RangeError(ValidationError, IndexError):
    kind = "range"


class NumericError(NDDEError, ArithmeticError):
    """Non-finite value produced during a computation."""

    kind = "numeric"

    def __init__(self, message, *, time=None, index=None):
        super().__init__(message)
        self.time = time
        self.index = index
