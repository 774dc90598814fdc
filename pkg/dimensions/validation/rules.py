"""
Admissibility rules for Moran and Cantor-like specs.

Each check inspects the finite level alphabet exactly (Fractions stay exact), so a
passing report holds for every level k, not just for sampled ones.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from dimensions.specs import (
    AnySpec,
    BlockSchedule,
    CantorLikeSpec,
    FinitePerturbation,
    GeometricPerturbation,
    MoranSpec,
    Ratio,
    RatioSchedule,
    format_ratio,
)

from .errors import ErrorCode, FieldError, SpecValidationError

logger = logging.getLogger(__name__)

ERROR = "error"
WARNING = "warning"

CHECK_CODES = {
    "msc": ErrorCode.MSC_VIOLATED,
    "branching": ErrorCode.BRANCHING_TOO_SMALL,
    "branching_bound": ErrorCode.BRANCHING_TOO_SMALL,
    "ratio_range": ErrorCode.RATIO_OUT_OF_RANGE,
    "ratio_bound": ErrorCode.RATIO_OUT_OF_RANGE,
    "c_star": ErrorCode.LOWER_BOUND_UNVERIFIABLE,
    "markers": ErrorCode.MARKER_GAP_TOO_SMALL,
    "realizable": ErrorCode.NOT_REALIZABLE,
    "single_ratio": ErrorCode.NON_UNIFORM_LEVELS,
}


@dataclass(frozen=True)
class ValidationIssue:
    severity: str
    check: str
    level: Optional[int]
    message: str

    @property
    def code(self) -> str:
        return CHECK_CODES.get(self.check, ErrorCode.SPEC_INVALID).value

    def to_field_error(self) -> FieldError:
        where = f"level {self.level}" if self.level is not None else "spec"
        return FieldError(field=f"{self.check}@{where}", code=self.code, message=self.message)

    def __str__(self) -> str:
        where = f" (level {self.level})" if self.level is not None else ""
        return f"[{self.severity}] {self.check}{where}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    issues: Tuple[ValidationIssue, ...]
    c_star: Optional[Ratio] = None

    @property
    def errors(self) -> List[ValidationIssue]:
        return [issue for issue in self.issues if issue.severity == ERROR]

    @property
    def warnings(self) -> List[ValidationIssue]:
        return [issue for issue in self.issues if issue.severity == WARNING]

    @property
    def is_admissible(self) -> bool:
        return not self.errors

    def raise_if_invalid(self) -> None:
        if not self.is_admissible:
            first = self.errors[0]
            raise SpecValidationError(
                message=f"{first.check}: {first.message}",
                fields=[issue.to_field_error() for issue in self.errors],
            )


class SpecRules:
    # Rounds of a block program whose marker gaps are checked.
    MARKER_CHECK_ROUNDS = 32
    # Levels scanned to locate each alphabet entry and its worst perturbation.
    SCAN_HORIZON = 4096

    @classmethod
    def validate(cls, spec: AnySpec) -> ValidationReport:
        issues: List[ValidationIssue] = []
        schedule = spec.schedule

        if isinstance(spec, MoranSpec):
            d = spec.d
            if not isinstance(d, int) or d < 1:
                issues.append(ValidationIssue(ERROR, "dimension", None, f"d must be a positive integer, got {d!r}"))
                d = 1
        else:
            d = 1

        try:
            occurrences = schedule.first_occurrences(cls.SCAN_HORIZON)
        except SpecValidationError as exc:
            issues.append(ValidationIssue(ERROR, "block_program", None, exc.message))
            return ValidationReport(issues=tuple(issues))

        issues.extend(cls._check_levels(schedule, d, occurrences))
        lower = cls._lower_bound(schedule, issues)

        if lower is not None:
            issues.extend(cls._check_implied_bounds(schedule, d, lower, occurrences))
        if isinstance(schedule, BlockSchedule):
            issues.extend(cls._check_block_program(schedule))
        if isinstance(spec, CantorLikeSpec):
            issues.extend(cls._check_cantor_like(spec))

        report = ValidationReport(issues=tuple(issues), c_star=lower)
        logger.info(
            f"Validated {spec.kind} spec: {len(report.errors)} error(s), "
            f"{len(report.warnings)} warning(s), c_*={format_ratio(lower) if lower is not None else 'n/a'}"
        )
        return report

    @classmethod
    def _check_levels(cls, schedule: RatioSchedule, d: int, occurrences) -> List[ValidationIssue]:
        issues = []
        for code, level in enumerate(schedule.alphabet):
            where = occurrences.get(code)
            if level.n < 2:
                issues.append(ValidationIssue(ERROR, "branching", where, f"n_k = {level.n} < 2"))
            bad = [c for c in level.ratios if not (0 < c < 1)]
            if bad:
                issues.append(ValidationIssue(
                    ERROR, "ratio_range", where,
                    f"ratios must lie in (0,1), got {', '.join(format_ratio(c) for c in bad)}",
                ))
                continue
            total = level.power_sum(d)
            if total > 1:
                issues.append(ValidationIssue(
                    ERROR, "msc", where,
                    f"Moran structure condition violated: Σc^d = {format_ratio(total)} > 1 for level {level}",
                ))
        return issues

    @classmethod
    def _lower_bound(cls, schedule: RatioSchedule, issues: List[ValidationIssue]) -> Optional[Ratio]:
        try:
            lower = schedule.c_star()
        except (ValueError, TypeError) as exc:
            issues.append(ValidationIssue(ERROR, "c_star", None, f"c_* unverifiable: {exc}"))
            return None
        if not np.isfinite(float(lower)):
            issues.append(ValidationIssue(ERROR, "c_star", None, f"c_* unverifiable: {lower!r}"))
            return None
        if lower <= 0:
            issues.append(ValidationIssue(ERROR, "c_star", None, f"c_* = {format_ratio(lower)} is not positive"))
            return None
        return lower

    @classmethod
    def _check_implied_bounds(cls, schedule: RatioSchedule, d: int, lower: Ratio, occurrences) -> List[ValidationIssue]:
        issues = []
        floor = lower**d
        for code, level in enumerate(schedule.alphabet):
            where = occurrences.get(code)
            if level.largest**d + floor > 1:
                issues.append(ValidationIssue(
                    ERROR, "ratio_bound", where,
                    f"max_j c = {format_ratio(level.largest)} exceeds (1 - c_*^d)^(1/d)",
                ))
            if level.n * floor > 1:
                issues.append(ValidationIssue(
                    ERROR, "branching_bound", where,
                    f"n_k = {level.n} exceeds c_*^(-d) = {format_ratio(1 / floor)}",
                ))
        return issues

    @classmethod
    def _check_block_program(cls, schedule: BlockSchedule) -> List[ValidationIssue]:
        issues = []
        for i, gap in schedule.marker_gaps(cls.MARKER_CHECK_ROUNDS):
            if gap <= 0:
                issues.append(ValidationIssue(
                    ERROR, "markers", None, f"marker sequence not increasing: p_{i + 1} - p_{i} = {gap}",
                ))
                continue
            for stage_index, stage in enumerate(schedule.rounds):
                rule = stage.length
                if rule.rule == "marker_gap" and rule.length(i, schedule.markers) <= 0:
                    issues.append(ValidationIssue(
                        ERROR, "markers", None,
                        f"p_{i + 1} - p_{i} = {gap} <= {rule.a * i + rule.b} (stage {stage_index}, round {i})",
                    ))
        for stage_index, length in enumerate(schedule.stage_lengths(0)):
            if length < 0:
                issues.append(ValidationIssue(
                    ERROR, "stage_length", None, f"head stage {stage_index} has negative length {length}",
                ))
        for stage_index, stage in enumerate(schedule.rounds):
            if stage.length.rule in ("const", "round"):
                lengths = [stage.length.length(i, schedule.markers) for i in range(1, cls.MARKER_CHECK_ROUNDS + 1)]
                if min(lengths) < 0:
                    issues.append(ValidationIssue(
                        ERROR, "stage_length", None, f"round stage {stage_index} has negative length",
                    ))
        if schedule.label == "marker_runs":
            issues.append(ValidationIssue(
                WARNING, "marker_runs_head", 1,
                f"levels 1..p_1 = 1..{schedule.markers(1)} are not fixed by the construction; assigned 1/4",
            ))
        return issues

    @classmethod
    def _check_cantor_like(cls, spec: CantorLikeSpec) -> List[ValidationIssue]:
        issues = []
        schedule = spec.schedule
        perturbation = spec.perturbation

        if isinstance(perturbation, GeometricPerturbation):
            if perturbation.amplitude < 0:
                issues.append(ValidationIssue(ERROR, "perturbation", None, "A must be >= 0"))
            if not 0 < perturbation.decay < 1:
                issues.append(ValidationIssue(ERROR, "perturbation", None, "gamma must lie in (0,1)"))
        elif isinstance(perturbation, FinitePerturbation):
            negative = [k + 1 for k, a in enumerate(perturbation.values) if a < 0]
            if negative:
                issues.append(ValidationIssue(ERROR, "perturbation", negative[0], "a_k must be >= 0"))
        if any(issue.check == "perturbation" for issue in issues):
            return issues

        horizon = max(cls.SCAN_HORIZON, len(getattr(perturbation, "values", ())))
        codes = schedule.codes(1, horizon)
        for code, level in enumerate(schedule.alphabet):
            if not level.is_uniform:
                issues.append(ValidationIssue(
                    ERROR, "single_ratio", None, f"Cantor-like levels carry one ratio, got {level}",
                ))
                continue
            ks = np.flatnonzero(codes == code) + 1
            worst = max(perturbation.worst_on(ks), perturbation.tail_bound(horizon + 1))
            c = level.ratios[0]
            where = int(ks[0]) if len(ks) else None
            if not c * (1 + worst) < 1:
                issues.append(ValidationIssue(
                    ERROR, "realizable", where, f"c_k(1+a_k) = {format_ratio(c * (1 + worst))} is not below 1",
                ))
            elif level.n * c * (1 + worst) > 1:
                issues.append(ValidationIssue(
                    ERROR, "realizable", where,
                    f"n_k c_k (1+a_k) = {format_ratio(level.n * c * (1 + worst))} > 1: no 1-D layout with disjoint interiors",
                ))
        return issues


def validate_spec(spec: AnySpec) -> ValidationReport:
    return SpecRules.validate(spec)
