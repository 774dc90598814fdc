"""
Centralized Validation Module

- schemas: shape and types of spec documents (JSON Schema)
- rules: admissibility of constructed specs (import dimensions.validation.rules directly)
- errors: error codes, field errors and the exception tree with exit statuses
"""

from .errors import (
    EXIT_STATUS,
    ConfigError,
    ErrorCode,
    FieldError,
    MoranLabError,
    PreconditionError,
    SpecParseError,
    SpecValidationError,
)
from .schemas import SpecDocumentSchema

__all__ = [
    "EXIT_STATUS",
    "ConfigError",
    "ErrorCode",
    "FieldError",
    "MoranLabError",
    "PreconditionError",
    "SpecParseError",
    "SpecValidationError",
    "SpecDocumentSchema",
]
