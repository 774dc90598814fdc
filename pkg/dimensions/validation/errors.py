"""
Standardized Error Handling

Every failure surfaced by a dimensions service carries:
{ code, message, fields? } and a process exit status.

Exit Status Standards:
- 0: Success
- 2: Spec document unreadable or ill-typed (SPEC_PARSE_ERROR)
- 3: Spec not admissible (SPEC_INVALID)
- 4: Enumeration or realization budget exceeded (BUDGET_EXCEEDED)
- 5: Operation pre-condition violated (PRECONDITION_FAILED)
- 6: Infeasible 1-D placement (PLACEMENT_INFEASIBLE)
- 7: Scale below the truncation floor (SCALE_OUT_OF_RANGE)
- 8: Bad run configuration (CONFIG_INVALID)
- 70: Internal error (SOLVER_BRACKET, INTERNAL_ERROR)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Union

logger = logging.getLogger(__name__)


class ErrorCode(str, Enum):
    SPEC_PARSE_ERROR = "SPEC_PARSE_ERROR"
    FIELD_REQUIRED = "FIELD_REQUIRED"
    FIELD_INVALID = "FIELD_INVALID"
    FIELD_OUT_OF_RANGE = "FIELD_OUT_OF_RANGE"
    FIELD_INVALID_FORMAT = "FIELD_INVALID_FORMAT"

    SPEC_INVALID = "SPEC_INVALID"
    MSC_VIOLATED = "MSC_VIOLATED"
    BRANCHING_TOO_SMALL = "BRANCHING_TOO_SMALL"
    RATIO_OUT_OF_RANGE = "RATIO_OUT_OF_RANGE"
    LOWER_BOUND_UNVERIFIABLE = "LOWER_BOUND_UNVERIFIABLE"
    MARKER_GAP_TOO_SMALL = "MARKER_GAP_TOO_SMALL"
    NOT_REALIZABLE = "NOT_REALIZABLE"

    BUDGET_EXCEEDED = "BUDGET_EXCEEDED"
    PRECONDITION_FAILED = "PRECONDITION_FAILED"
    NON_UNIFORM_LEVELS = "NON_UNIFORM_LEVELS"
    DELTA_OUT_OF_RANGE = "DELTA_OUT_OF_RANGE"
    PLACEMENT_INFEASIBLE = "PLACEMENT_INFEASIBLE"
    SCALE_OUT_OF_RANGE = "SCALE_OUT_OF_RANGE"
    CONFIG_INVALID = "CONFIG_INVALID"

    SOLVER_BRACKET = "SOLVER_BRACKET"
    INTERNAL_ERROR = "INTERNAL_ERROR"


@dataclass
class FieldError:
    field: str
    code: str
    message: str
    line: Optional[int] = None

    def __str__(self) -> str:
        where = f"{self.field} (line {self.line})" if self.line is not None else self.field
        return f"{where}: {self.message}"


class MoranLabError(Exception):
    exit_status = 70

    def __init__(
        self,
        code: Union[ErrorCode, str],
        message: str,
        fields: Optional[List[FieldError]] = None,
    ):
        self.code = code.value if isinstance(code, ErrorCode) else code
        self.message = message
        self.fields = fields or []
        super().__init__(message)

    def describe(self) -> str:
        lines = [f"{self.code}: {self.message}"]
        lines.extend(f"  - {field_error}" for field_error in self.fields)
        return "\n".join(lines)


class SpecParseError(MoranLabError):
    exit_status = 2

    def __init__(self, message: str = "Spec document could not be parsed", fields: Optional[List[FieldError]] = None):
        super().__init__(code=ErrorCode.SPEC_PARSE_ERROR, message=message, fields=fields)


class SpecValidationError(MoranLabError):
    exit_status = 3

    def __init__(self, message: str = "Spec is not admissible", fields: Optional[List[FieldError]] = None):
        super().__init__(code=ErrorCode.SPEC_INVALID, message=message, fields=fields)


class BudgetExceededError(MoranLabError):
    exit_status = 4

    def __init__(self, message: str, bound: Optional[int] = None, required: Optional[int] = None):
        self.bound = bound
        self.required = required
        super().__init__(code=ErrorCode.BUDGET_EXCEEDED, message=message)


class PreconditionError(MoranLabError):
    exit_status = 5

    def __init__(self, message: str, code: Union[ErrorCode, str] = ErrorCode.PRECONDITION_FAILED):
        super().__init__(code=code, message=message)


class PlacementError(MoranLabError):
    exit_status = 6

    def __init__(self, message: str, level: Optional[int] = None):
        self.level = level
        super().__init__(code=ErrorCode.PLACEMENT_INFEASIBLE, message=message)


class ScaleRangeError(MoranLabError):
    exit_status = 7

    def __init__(self, message: str):
        super().__init__(code=ErrorCode.SCALE_OUT_OF_RANGE, message=message)


class ConfigError(MoranLabError):
    exit_status = 8

    def __init__(self, message: str, fields: Optional[List[FieldError]] = None):
        super().__init__(code=ErrorCode.CONFIG_INVALID, message=message, fields=fields)


class SolverError(MoranLabError):
    exit_status = 70

    def __init__(self, message: str):
        super().__init__(code=ErrorCode.SOLVER_BRACKET, message=message)


EXIT_STATUS = {
    cls.__name__: cls.exit_status
    for cls in (
        SpecParseError,
        SpecValidationError,
        BudgetExceededError,
        PreconditionError,
        PlacementError,
        ScaleRangeError,
        ConfigError,
        SolverError,
    )
}


def format_schema_errors(errors: Dict[str, Any], prefix: str = "") -> List[FieldError]:
    """Flatten a nested {field: [messages]} mapping into FieldErrors."""
    field_errors = []

    for field_name, error_list in errors.items():
        full_field = f"{prefix}{field_name}" if prefix else field_name

        if isinstance(error_list, dict):
            field_errors.extend(format_schema_errors(error_list, f"{full_field}."))
        elif isinstance(error_list, list):
            for error in error_list:
                error_str = str(error)
                field_errors.append(FieldError(
                    field=full_field,
                    code=_infer_error_code(error_str),
                    message=error_str,
                ))
        else:
            field_errors.append(FieldError(
                field=full_field,
                code=ErrorCode.FIELD_INVALID.value,
                message=str(error_list),
            ))

    return field_errors


def _infer_error_code(message: str) -> str:
    message_lower = message.lower()

    if "required" in message_lower:
        return ErrorCode.FIELD_REQUIRED.value
    elif "minimum" in message_lower or "maximum" in message_lower or "less than" in message_lower:
        return ErrorCode.FIELD_OUT_OF_RANGE.value
    elif "does not match" in message_lower or "is not of type" in message_lower:
        return ErrorCode.FIELD_INVALID_FORMAT.value
    else:
        return ErrorCode.FIELD_INVALID.value
