"""
Spec file loading.

Reads a JSON or YAML spec document, checks it against SpecDocumentSchema and
builds the immutable spec objects. Every failure cites the field path and the
source line.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import yaml

from dimensions.specs import (
    AnySpec,
    BlockSchedule,
    CantorLikeSpec,
    FinitePerturbation,
    GeometricPerturbation,
    LengthRule,
    Level,
    MarkerSequence,
    MoranSpec,
    PeriodicSchedule,
    RatioSchedule,
    Stage,
    UniformSchedule,
    as_ratio,
    marker_runs_schedule,
)
from dimensions.validation.errors import ErrorCode, FieldError, SpecParseError
from dimensions.validation.schemas import SpecDocumentSchema, field_path

logger = logging.getLogger(__name__)

Locator = Callable[[Sequence[Any]], Optional[int]]


def _node_locator(root: Optional[yaml.Node]) -> Locator:
    def locate(path: Sequence[Any]) -> Optional[int]:
        node = root
        if node is None:
            return None
        for part in path:
            if isinstance(node, yaml.MappingNode):
                match = next((value for key, value in node.value if key.value == part), None)
            elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
                match = node.value[part]
            else:
                match = None
            if match is None:
                break
            node = match
        return node.start_mark.line + 1

    return locate


class SpecLoaderService:
    @classmethod
    def load(cls, path: Union[str, Path]) -> AnySpec:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise SpecParseError(
                message=f"Cannot read spec file {path}: {exc.strerror or exc}",
                fields=[FieldError("<file>", ErrorCode.SPEC_PARSE_ERROR.value, str(path))],
            )
        spec = cls.parse(text)
        logger.info(f"Loaded {spec.kind} spec from {path}")
        return spec

    @classmethod
    def parse(cls, text: str) -> AnySpec:
        try:
            root = yaml.compose(text, Loader=yaml.SafeLoader)
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            problem = getattr(exc, "problem", None) or str(exc)
            raise SpecParseError(
                message=f"Spec document is not valid JSON/YAML: {problem}",
                fields=[FieldError("<document>", ErrorCode.SPEC_PARSE_ERROR.value, problem, line=line)],
            )

        locate = _node_locator(root)
        SpecDocumentSchema.raise_if_invalid(data, locate)
        return SpecBuilder(locate).build(data)


class SpecBuilder:
    """Turns a schema-checked document into spec objects."""

    def __init__(self, locate: Optional[Locator] = None):
        self.locate = locate or (lambda path: None)

    def fail(self, path: List[Any], message: str, code: ErrorCode = ErrorCode.FIELD_INVALID) -> SpecParseError:
        error = FieldError(field_path(path), code.value, message, line=self.locate(path))
        return SpecParseError(message=f"Invalid spec at {error}", fields=[error])

    def build(self, data: Dict[str, Any]) -> AnySpec:
        schedule = self.schedule(data["schedule"], ["schedule"])
        name = data.get("name", "")
        if data["kind"] == "moran":
            if "perturbation" in data:
                raise self.fail(["perturbation"], "perturbation applies to cantor_like specs only")
            return MoranSpec(schedule=schedule, d=data.get("d", 1), name=name)

        if data.get("d", 1) != 1:
            raise self.fail(["d"], "Cantor-like specs are one-dimensional", ErrorCode.FIELD_OUT_OF_RANGE)
        perturbation = self.perturbation(data.get("perturbation"), ["perturbation"])
        return CantorLikeSpec(schedule=schedule, perturbation=perturbation, name=name)

    def ratio(self, value: Any, path: List[Any]):
        try:
            # decimals in a document are read as the exact decimal they spell
            return as_ratio(repr(value) if isinstance(value, float) else value)
        except (ValueError, ZeroDivisionError, TypeError) as exc:
            raise self.fail(path, f"not a ratio: {value!r} ({exc})", ErrorCode.FIELD_INVALID_FORMAT)

    def level(self, data: Dict[str, Any], path: List[Any]) -> Level:
        if "ratios" in data:
            ratios = [self.ratio(c, path + ["ratios", j]) for j, c in enumerate(data["ratios"])]
            if "n" in data and data["n"] != len(ratios):
                raise self.fail(path + ["n"], f"n = {data['n']} but {len(ratios)} ratios given")
            return Level(tuple(ratios))
        return Level.uniform(data["n"], self.ratio(data["c"], path + ["c"]))

    def levels(self, items: List[Dict[str, Any]], path: List[Any]) -> List[Level]:
        return [self.level(item, path + [j]) for j, item in enumerate(items)]

    def markers(self, data: Optional[Dict[str, Any]]) -> MarkerSequence:
        data = data or {}
        return MarkerSequence(
            kind=data.get("kind", "factorial"),
            offset=data.get("offset", 1),
            base=data.get("base", 2),
            scale=data.get("scale", 1),
        )

    def stage(self, data: Dict[str, Any], path: List[Any]) -> Stage:
        length = data["length"]
        return Stage(
            length=LengthRule(rule=length["rule"], a=length.get("a", 0), b=length.get("b", 0)),
            levels=tuple(self.levels(data["levels"], path + ["levels"])),
        )

    def schedule(self, data: Dict[str, Any], path: List[Any]) -> RatioSchedule:
        kind = data["kind"]
        if kind == "uniform":
            return UniformSchedule(n=data["n"], c=self.ratio(data["c"], path + ["c"]))
        if kind == "eventually_periodic":
            return PeriodicSchedule(
                prefix=tuple(self.levels(data.get("prefix", []), path + ["prefix"])),
                cycle=tuple(self.levels(data["cycle"], path + ["cycle"])),
            )
        if kind == "marker_runs":
            return marker_runs_schedule(self.markers(data.get("markers")))
        return BlockSchedule(
            head=tuple(self.stage(item, path + ["head", j]) for j, item in enumerate(data.get("head", []))),
            rounds=tuple(self.stage(item, path + ["rounds", j]) for j, item in enumerate(data["rounds"])),
            markers=self.markers(data.get("markers")),
            label=data.get("label", ""),
        )

    def perturbation(self, data: Optional[Dict[str, Any]], path: List[Any]):
        if data is None:
            return FinitePerturbation()
        if data["kind"] == "geometric":
            return GeometricPerturbation(
                amplitude=self.ratio(data["A"], path + ["A"]),
                decay=self.ratio(data["gamma"], path + ["gamma"]),
            )
        return FinitePerturbation(
            values=tuple(self.ratio(a, path + ["values", j]) for j, a in enumerate(data["values"]))
        )


def load_spec(path: Union[str, Path]) -> AnySpec:
    return SpecLoaderService.load(path)
