"""
Report Service - text and CSV rendering of computation results.

CSV columns (stable):
- theta trace:      m, theta, running_inf
- pre-dimensions:   m, s_0m
- cutset:           word, depth, log_c
- dyadic classes:   p, count
- empirical table:  rho, R, x, N, t
- psi table:        rho, R, psi
- comparison:       method, estimate, detail
- intervals:        a, b            (IntervalSet.to_csv)
- scale function:   r, log_r, h     (ScaleFunction.to_csv)
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from dimensions.specs import format_ratio
from dimensions.validation.errors import PreconditionError
from dimensions.validation.rules import ValidationReport

from .cutset_service import Cutset, DyadicClasses, Witness, WitnessScales
from .dimension_service import DimensionReport
from .geometry_service import EmpiricalEstimate, IntervalSet, OverlapResult
from .scale_service import EquivalenceResult, ScaleEstimate, ScaleFunction

logger = logging.getLogger(__name__)

FORMATS = ("text", "csv")


@dataclass(frozen=True)
class CutsetSummary:
    cutset: Cutset
    s: float
    residual: float
    threshold: Optional[float] = None

    @property
    def residual_ok(self) -> bool:
        return self.threshold is None or abs(self.residual) <= self.threshold


@dataclass(frozen=True)
class WitnessSummary:
    k_lo: int
    k_hi: int
    s: float
    epsilon: float
    root: float
    classes: DyadicClasses
    witness: Optional[Witness]
    scales: Optional[WitnessScales] = None


@dataclass(frozen=True)
class Comparison:
    target: float
    rows: Tuple[Tuple[str, float, str], ...]
    tolerance: float = 0.05
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def agrees(self) -> bool:
        return all(abs(value - self.target) <= self.tolerance for _, value, _ in self.rows)


class ReportService:
    @classmethod
    def export_to_csv(cls, data: Sequence[Dict[str, Any]], columns: List[Tuple[str, str]]) -> str:
        output = io.StringIO()
        writer = csv.writer(output, lineterminator="\n")

        writer.writerow([col[1] for col in columns])

        for row in data:
            writer.writerow([row.get(col[0], "") for col in columns])

        return output.getvalue()

    @staticmethod
    def _warnings(lines: List[str], warnings: Sequence[str]) -> None:
        if warnings:
            lines.append("warnings:")
            lines.extend(f"  - {warning}" for warning in warnings)

    @classmethod
    def dimension_text(cls, report: DimensionReport) -> str:
        m_lo, m_hi = report.pre_window
        lines = [
            f"Dimension report (method: {report.method}, d={report.d})",
            f"  tail window                  m in [{m_lo}, {m_hi}], horizon truncated at m_max={m_hi}",
            f"  s_* (lower, tail estimate)   {report.s_lower:.12f}   over m in [{m_lo}, {m_hi}]",
            f"  s^* (upper, tail estimate)   {report.s_upper:.12f}   over m in [{m_lo}, {m_hi}]",
            f"  s** (upper estimate)         {report.s_assouad:.12f}   gap {report.convergence_gap:.3e}",
            f"  horizons                     m_max={report.horizon_m}, k_max={report.horizon_k}, "
            f"sup over k {'exact' if report.exact_sup else 'truncated'}",
            f"  solver tolerance             {report.solver_tolerance:.1e}",
            f"  appears regular              {'yes' if report.appears_regular else 'no'}",
        ]
        if report.ordering_slack > 0:
            lines.append(f"  ordering slack               {report.ordering_slack:.3e} (truncated horizon)")
        cls._warnings(lines, report.warnings)
        return "\n".join(lines) + "\n"

    @classmethod
    def theta_csv(cls, report: DimensionReport) -> str:
        data = [{"m": m, "theta": repr(theta), "running_inf": repr(inf)} for m, theta, inf in report.theta_trace]
        return cls.export_to_csv(data, [("m", "m"), ("theta", "theta"), ("running_inf", "running_inf")])

    @classmethod
    def pre_csv(cls, report: DimensionReport) -> str:
        data = [{"m": m, "s": repr(s)} for m, s in report.pre_trace]
        return cls.export_to_csv(data, [("m", "m"), ("s", "s_0m")])

    @classmethod
    def validation_text(cls, report: ValidationReport) -> str:
        lines = [f"spec admissible: {'yes' if report.is_admissible else 'no'}"]
        if report.c_star is not None:
            lines.append(f"c_* = {format_ratio(report.c_star)}")
        lines.extend(f"  {issue}" for issue in report.issues)
        return "\n".join(lines) + "\n"

    @classmethod
    def cutset_text(cls, summary: CutsetSummary) -> str:
        cut = summary.cutset
        depths = cut.depths
        lines = [
            f"Cutset A_u(δ) for u = {cut.base}, δ = {format_ratio(cut.delta)}",
            f"  members          {cut.size}",
            f"  depth range      {int(depths.min())}..{int(depths.max())}",
            f"  near ties        {cut.near_ties}",
            f"  volume check     {'ok' if cut.volume_ok else 'FAILED'}",
            f"  identity residual at s={summary.s:.12f}: {summary.residual:.3e}",
        ]
        if summary.threshold is not None:
            verdict = "within" if summary.residual_ok else "ABOVE"
            lines[-1] += f" ({verdict} {summary.threshold:.0e})"
        return "\n".join(lines) + "\n"

    @classmethod
    def cutset_csv(cls, summary: CutsetSummary) -> str:
        return cls.export_to_csv(summary.cutset.rows(), [("word", "word"), ("depth", "depth"), ("log_c", "log_c")])

    @classmethod
    def witness_text(cls, summary: WitnessSummary) -> str:
        lines = [
            f"Dyadic classes of window ({summary.k_lo}, {summary.k_hi}]: "
            f"{summary.classes.total} words, p_min = {summary.classes.p_min}",
            f"  s_(k,k') = {summary.root:.12f}, s = {summary.s:.12f}, ε = {summary.epsilon}",
        ]
        if summary.witness is None:
            lines.append("  witness: none")
        else:
            w = summary.witness
            lines.append(
                f"  witness: q = {w.q}, #B_q = {w.count}, "
                f"log2 lhs = {w.lhs_log2:.6f} <= log2 rhs = {w.rhs_log2:.6f}"
            )
        if summary.scales is not None:
            lines.append(
                f"  scales: log R = {summary.scales.log_R:.6f}, log r = {summary.scales.log_r:.6f}, "
                f"log2(r/R) = {summary.scales.ratio_log2:.6f}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def witness_csv(cls, summary: WitnessSummary) -> str:
        return cls.export_to_csv(summary.classes.rows(), [("p", "p"), ("count", "count")])

    @classmethod
    def empirical_text(cls, result: EmpiricalEstimate) -> str:
        lines = [f"Empirical Assouad estimate {result.estimate:.6f} (realization depth {result.depth})"]
        lines.extend(f"  t({rho:.6e}) = {t:.6f}" for rho, t in result.t_by_rho)
        cls._warnings(lines, result.warnings)
        return "\n".join(lines) + "\n"

    @classmethod
    def empirical_csv(cls, result: EmpiricalEstimate) -> str:
        return cls.export_to_csv(result.rows(), [("rho", "rho"), ("R", "R"), ("x", "x"), ("N", "N"), ("t", "t")])

    @classmethod
    def scale_text(cls, result: ScaleEstimate) -> str:
        lines = [f"Scale-function Assouad estimate {result.estimate:.6f}"]
        lines.extend(f"  sup_R ψ(R, {rho:.6e}) = {t:.6f} at R = {R:.6e}" for rho, t, R in result.t_by_rho)
        cls._warnings(lines, result.warnings)
        return "\n".join(lines) + "\n"

    @classmethod
    def scale_csv(cls, result: ScaleEstimate) -> str:
        return cls.export_to_csv(result.rows(), [("rho", "rho"), ("R", "R"), ("psi", "psi")])

    @classmethod
    def comparison_text(cls, result: Comparison) -> str:
        lines = [f"{'method':<12}{'estimate':>14}  detail"]
        lines.extend(f"{method:<12}{value:>14.6f}  {detail}" for method, value, detail in result.rows)
        lines.append(
            f"all within {result.tolerance} of {result.target:.6f}: {'yes' if result.agrees else 'no'}"
        )
        cls._warnings(lines, result.warnings)
        return "\n".join(lines) + "\n"

    @classmethod
    def comparison_csv(cls, result: Comparison) -> str:
        data = [{"method": m, "estimate": repr(v), "detail": d} for m, v, d in result.rows]
        return cls.export_to_csv(data, [("method", "method"), ("estimate", "estimate"), ("detail", "detail")])

    @staticmethod
    def overlap_text(result: OverlapResult) -> str:
        lines = [f"Overlap bound {result.max_count} ({'constant' if result.is_constant else 'varies'} across δ)"]
        lines.extend(f"  δ = {delta:.6e}: {count}" for delta, count in result.by_delta)
        return "\n".join(lines) + "\n"

    @staticmethod
    def equivalence_text(result: EquivalenceResult) -> str:
        where = "" if result.worst_r is None else f" at r = {result.worst_r:.6e}"
        return f"equivalent: {'yes' if result.ok else 'no'} (max violation {result.max_violation:.3e}{where})\n"

    @classmethod
    def renderers(cls) -> Dict[type, Dict[str, Callable[[Any], str]]]:
        return {
            DimensionReport: {"text": cls.dimension_text, "csv": cls.theta_csv},
            ValidationReport: {"text": cls.validation_text},
            CutsetSummary: {"text": cls.cutset_text, "csv": cls.cutset_csv},
            WitnessSummary: {"text": cls.witness_text, "csv": cls.witness_csv},
            EmpiricalEstimate: {"text": cls.empirical_text, "csv": cls.empirical_csv},
            ScaleEstimate: {"text": cls.scale_text, "csv": cls.scale_csv},
            Comparison: {"text": cls.comparison_text, "csv": cls.comparison_csv},
            OverlapResult: {"text": cls.overlap_text},
            EquivalenceResult: {"text": cls.equivalence_text},
            IntervalSet: {"csv": IntervalSet.to_csv},
            ScaleFunction: {"csv": ScaleFunction.to_csv},
        }

    @classmethod
    def render(cls, report: Any, fmt: str = "text") -> str:
        if fmt not in FORMATS:
            raise PreconditionError(f"format must be one of {', '.join(FORMATS)}, got {fmt!r}")
        formats = cls.renderers().get(type(report))
        if formats is None or fmt not in formats:
            raise PreconditionError(f"no {fmt} rendering for {type(report).__name__}")
        return formats[fmt](report)

    @classmethod
    def emit_report(cls, report: Any, fmt: str = "text") -> bytes:
        return cls.render(report, fmt).encode("utf-8")


export_to_csv = ReportService.export_to_csv
emit_report = ReportService.emit_report
