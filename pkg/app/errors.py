"""
Domain errors.

Every failure a caller can act on is a BilliardError carrying a stable code,
so the CLI can turn it into an ErrorResponse without inspecting messages.
"""
from typing import Any, Dict, Optional

from app.models import ErrorResponse


class BilliardError(Exception):
    """Base class for domain errors"""
    code = "billiard_error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_response(self) -> ErrorResponse:
        """Convert to the machine-readable error payload"""
        return ErrorResponse(error=self.code, message=self.message, details=self.details)


class LabelRangeError(BilliardError):
    code = "label_range"


class InvalidShapeError(BilliardError):
    code = "invalid_shape"


class InvalidWordError(BilliardError):
    code = "invalid_word"


class ClosureError(BilliardError):
    code = "closure_not_translation"


class ClassificationError(BilliardError):
    code = "classification"


class ShapeMismatchError(BilliardError):
    code = "shape_mismatch"


class UnsupportedError(BilliardError):
    code = "unsupported"


class NoRelationError(BilliardError):
    code = "no_relation"


class DecorationBoundError(BilliardError):
    code = "decoration_bound"


class PrimitivityError(BilliardError):
    code = "not_primitive"


class ParityError(BilliardError):
    code = "parity"


class PreconditionError(BilliardError):
    code = "precondition"


class DeferredCaseError(BilliardError):
    code = "deferred_case"


class RegionError(BilliardError):
    code = "degenerate_region"


class InputError(BilliardError):
    code = "invalid_input"
