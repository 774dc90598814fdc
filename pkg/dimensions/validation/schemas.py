"""
Spec Document Schema

JSON Schema for spec files (JSON or YAML). The schema checks shape and types
only; admissibility (MSC, realizability, markers) is the job of SpecRules.

Document layout:
- kind: "moran" | "cantor_like"
- d: ambient dimension (moran only, default 1)
- schedule: tagged union on schedule.kind
- perturbation: geometric {A, gamma} or finite {values} (cantor_like only)
"""

from __future__ import annotations

from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from jsonschema import Draft202012Validator

from .errors import FieldError, SpecParseError, _infer_error_code

RATIO_PATTERN = r"^\s*[0-9]+(\.[0-9]+)?([eE][-+]?[0-9]+)?\s*(/\s*[0-9]+\s*)?$"

RATIO = {
    "anyOf": [
        {"type": "number", "minimum": 0},
        {"type": "string", "pattern": RATIO_PATTERN},
    ]
}

LEVEL = {
    "type": "object",
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "c": RATIO,
        "ratios": {"type": "array", "items": RATIO, "minItems": 1},
    },
    "additionalProperties": False,
    "oneOf": [
        {"required": ["ratios"]},
        {"required": ["n", "c"], "not": {"required": ["ratios"]}},
    ],
}

MARKERS = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["factorial", "power"]},
        "offset": {"type": "integer", "minimum": 0},
        "base": {"type": "integer", "minimum": 2},
        "scale": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

STAGE = {
    "type": "object",
    "required": ["length", "levels"],
    "properties": {
        "length": {
            "type": "object",
            "required": ["rule"],
            "properties": {
                "rule": {"enum": ["const", "round", "marker", "marker_gap"]},
                "a": {"type": "integer"},
                "b": {"type": "integer"},
            },
            "additionalProperties": False,
        },
        "levels": {"type": "array", "items": LEVEL, "minItems": 1},
    },
    "additionalProperties": False,
}


def _when(kind: str, then: Dict[str, Any]) -> Dict[str, Any]:
    return {"if": {"properties": {"kind": {"const": kind}}, "required": ["kind"]}, "then": then}


SCHEDULE = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["uniform", "eventually_periodic", "marker_runs", "block_program"]},
        "n": {"type": "integer", "minimum": 1},
        "c": RATIO,
        "prefix": {"type": "array", "items": LEVEL},
        "cycle": {"type": "array", "items": LEVEL, "minItems": 1},
        "head": {"type": "array", "items": STAGE},
        "rounds": {"type": "array", "items": STAGE, "minItems": 1},
        "markers": MARKERS,
        "label": {"type": "string"},
    },
    "additionalProperties": False,
    "allOf": [
        _when("uniform", {"required": ["n", "c"]}),
        _when("eventually_periodic", {"required": ["cycle"]}),
        _when("block_program", {"required": ["rounds"]}),
    ],
}

PERTURBATION = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["geometric", "finite"]},
        "A": RATIO,
        "gamma": RATIO,
        "values": {"type": "array", "items": RATIO},
    },
    "additionalProperties": False,
    "allOf": [
        _when("geometric", {"required": ["A", "gamma"]}),
        _when("finite", {"required": ["values"]}),
    ],
}

SPEC_DOCUMENT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["kind", "schedule"],
    "properties": {
        "kind": {"enum": ["moran", "cantor_like"]},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "d": {"type": "integer", "minimum": 1},
        "schedule": SCHEDULE,
        "perturbation": PERTURBATION,
    },
    "additionalProperties": False,
}


def field_path(path: Sequence[Any]) -> str:
    """['schedule', 'cycle', 0, 'c'] -> 'schedule.cycle[0].c'"""
    text = ""
    for part in path:
        if isinstance(part, int):
            text += f"[{part}]"
        else:
            text += f".{part}" if text else str(part)
    return text or "<document>"


class SpecDocumentSchema:
    SCHEMA: Dict[str, Any] = SPEC_DOCUMENT_SCHEMA

    @classmethod
    def validate(
        cls,
        data: Any,
        locate: Optional[Callable[[Sequence[Any]], Optional[int]]] = None,
    ) -> Tuple[bool, List[FieldError]]:
        validator = Draft202012Validator(cls.SCHEMA)
        errors = []
        for error in sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path))):
            path = list(error.absolute_path)
            errors.append(FieldError(
                field=field_path(path),
                code=_infer_error_code(error.message),
                message=error.message,
                line=locate(path) if locate else None,
            ))
        return len(errors) == 0, errors

    @classmethod
    def raise_if_invalid(
        cls,
        data: Any,
        locate: Optional[Callable[[Sequence[Any]], Optional[int]]] = None,
    ) -> None:
        is_valid, errors = cls.validate(data, locate)
        if not is_valid:
            first = errors[0]
            raise SpecParseError(message=f"Spec document does not match the schema at {first}", fields=errors)
