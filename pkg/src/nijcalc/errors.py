"""Exception types shared across the package."""


class NijError(Exception):
    """Base class for all errors raised by this package."""


class ExprSyntaxError(NijError):
    """Malformed expression text.  Carries the byte offset of the offender."""

    def __init__(self, message, pos):
        super().__init__(f"{message} (at offset {pos})")
        self.pos = pos


class UnknownVariableError(ExprSyntaxError):
    """An identifier that is not in the declared variable list."""


class DocumentError(NijError):
    """Malformed operator document (structure, not expressions)."""


class DimensionError(NijError):
    """Shape mismatch between operands."""


class BackendError(NijError):
    """An operation was asked of a backend that cannot provide it,
    e.g. symbolic differentiation of an opaque jet rule."""


class ZeroDivisionPolyError(NijError):
    """Division by a zero polynomial / rational function."""


class AmbiguousClusterError(NijError):
    """Eigenvalue clustering admits no gap satisfying the separation factor."""


class RankError(NijError):
    """A rank decision could not be made cleanly (no singular-value gap),
    or the rank is not locally constant."""


class FactorizationError(NijError):
    """Bad characteristic-polynomial factorization: not monic, not coprime,
    or inconsistent with the spectrum at hand."""


class NotEigenvalueError(NijError):
    """The supplied scalar field is not an eigenvalue of the operator."""


class DegenerateSigmaError(NijError):
    """The sigma differentials are nowhere independent (det J identically 0)."""


class SizeOverflowError(NijError):
    """An intermediate symbolic object exceeded the configured degree cap."""


class DegreeCapError(NijError):
    """Input of higher degree than a truncated-series cap was supplied where
    silent truncation would be wrong."""


class CompatibilityError(NijError):
    """A graded component failed the compatibility equations against the
    diagonal linear part.  Carries the residual for diagnostics."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class PrerequisiteError(NijError):
    """A documented precondition of an operation does not hold."""
