"""
Run Service - dispatches one validated RunConfig to the computation services.

Each command returns a RunResult: exit status, the report text printed to stdout,
and named CSV artifacts written next to each other in the output directory.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

from django.conf import settings

from dimensions.management.run_config import RunConfig
from dimensions.specs import AnySpec
from dimensions.validation.errors import EXIT_STATUS, MoranLabError, PreconditionError
from dimensions.validation.rules import validate_spec

from .cutset_service import CutsetService, Word
from .dimension_service import DimensionService, solve_skk
from .geometry_service import GeometryService, IntervalSet, Placement
from .report_service import Comparison, CutsetSummary, ReportService, WitnessSummary
from .scale_service import ScaleFunction, ScaleService
from .spec_loader import SpecLoaderService

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    status: int
    text: str
    artifacts: Dict[str, str] = field(default_factory=dict)
    message: str = ""

    def write_artifacts(self, directory: Path, stem: str) -> List[Path]:
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for name, content in sorted(self.artifacts.items()):
            target = directory / f"{stem}.{name}"
            target.write_text(content, encoding="utf-8")
            written.append(target)
        return written


def default_rho_grid(spec: AnySpec) -> List[float]:
    c = float(spec.c_star())
    return [c**j for j in range(2, 7)]


def default_r_grid(spec: AnySpec) -> List[float]:
    c = float(spec.c_star())
    return [c**j for j in range(1, 5)]


def default_scale_rho_grid(spec: AnySpec) -> List[float]:
    c = float(spec.c_star())
    return [c ** (2**j) for j in range(2, 6)]


class RunService:
    @staticmethod
    def _admissible(config: RunConfig) -> AnySpec:
        spec = SpecLoaderService.load(config.input_path)
        validate_spec(spec).raise_if_invalid()
        return spec

    @staticmethod
    def _output(config: RunConfig, text: str, csv_text: Optional[str], artifacts: Dict[str, str]) -> RunResult:
        shown = csv_text if config.fmt == "csv" and csv_text is not None else text
        return RunResult(status=0, text=shown, artifacts=artifacts)

    @classmethod
    def validate(cls, config: RunConfig) -> RunResult:
        spec = SpecLoaderService.load(config.input_path)
        report = validate_spec(spec)
        if report.is_admissible:
            return RunResult(status=0, text=ReportService.render(report))
        return RunResult(
            status=EXIT_STATUS["SpecValidationError"],
            text=ReportService.render(report),
            message=str(report.errors[0]),
        )

    @classmethod
    def dims(cls, config: RunConfig) -> RunResult:
        spec = cls._admissible(config)
        report = DimensionService.estimate(
            spec,
            config.m_max,
            config.k_max,
            tol=config.tol,
            pre_horizon=config.pre_horizon,
            tail_fraction=config.tail_fraction,
            workers=config.workers,
        )
        theta = ReportService.render(report, "csv")
        artifacts = {"theta_trace.csv": theta, "pre_dimensions.csv": ReportService.pre_csv(report)}
        return cls._output(config, ReportService.render(report), theta, artifacts)

    @classmethod
    def cutset(cls, config: RunConfig) -> RunResult:
        spec = cls._admissible(config)
        if config.delta is None:
            raise PreconditionError("cutset needs --delta")
        budget = settings.MORANLAB["ENUMERATION_BUDGET"]
        base = Word.parse(spec, config.word, config.start)
        cut = CutsetService.cutset(spec, base, config.delta, budget)
        s = float(spec.d) if config.s is None else config.s
        residual = CutsetService.identity_residual(spec, base, config.delta, s, budget, cut=cut)
        summary = CutsetSummary(cutset=cut, s=s, residual=residual, threshold=settings.MORANLAB["RESIDUAL_THRESHOLD"])
        if not summary.residual_ok:
            logger.warning(f"identity residual {residual:.3e} exceeds {summary.threshold:.0e} for δ={config.delta}")
        members = ReportService.render(summary, "csv")
        return cls._output(config, ReportService.render(summary), members, {"cutset.csv": members})

    @classmethod
    def witness(cls, config: RunConfig) -> RunResult:
        spec = cls._admissible(config)
        budget = settings.MORANLAB["ENUMERATION_BUDGET"]
        k_hi = config.k_hi if config.k_hi is not None else config.k_lo + 8
        root = solve_skk(spec, config.k_lo, k_hi, config.tol)
        s = 0.9 * root if config.s is None else config.s
        classes = CutsetService.dyadic_classes(spec, config.k_lo, k_hi, budget)
        witness = CutsetService.lower_bound_witness(spec, config.k_lo, k_hi, s, config.epsilon, config.tol, budget)
        q = config.q if config.q is not None else (witness.q if witness else None)
        scales = CutsetService.witness_scales(spec, config.k_lo, k_hi, q, budget) if q is not None else None
        summary = WitnessSummary(config.k_lo, k_hi, s, config.epsilon, root, classes, witness, scales)
        table = ReportService.render(summary, "csv")
        result = cls._output(config, ReportService.render(summary), table, {"classes.csv": table})
        if witness is None:
            result.status = MoranLabError.exit_status
            result.message = f"no witness in window ({config.k_lo}, {k_hi}] for s={s}, ε={config.epsilon}"
        return result

    @staticmethod
    def _placement(config: RunConfig) -> Placement:
        return Placement(kind=config.placement, gamma=config.gamma)

    @classmethod
    def _empirical(cls, spec: AnySpec, config: RunConfig):
        intervals = None
        if config.intervals is not None:
            intervals = IntervalSet.from_csv(config.intervals.read_text(encoding="utf-8"))
        return GeometryService.empirical_assouad(
            spec,
            cls._placement(config),
            config.rho_grid or default_rho_grid(spec),
            config.r_grid or default_r_grid(spec),
            centers_per_R=config.centers,
            budget=settings.MORANLAB["REALIZATION_BUDGET"],
            seed=config.seed,
            intervals=intervals,
            workers=config.workers,
        )

    @classmethod
    def empirical(cls, config: RunConfig) -> RunResult:
        spec = cls._admissible(config)
        result = cls._empirical(spec, config)
        table = ReportService.render(result, "csv")
        return cls._output(config, ReportService.render(result), table, {"empirical.csv": table})

    @classmethod
    def realize(cls, config: RunConfig) -> RunResult:
        spec = cls._admissible(config)
        budget = settings.MORANLAB["REALIZATION_BUDGET"]
        depth = config.depth if config.depth is not None else GeometryService.depth_for(spec, 1e-3, budget)
        intervals = GeometryService.realize_level(spec, cls._placement(config), depth, config.seed, budget)
        lengths = intervals.lengths
        text = (
            f"Realized depth {depth}: {len(intervals)} intervals, lengths "
            f"{float(lengths.min()):.6e}..{float(lengths.max()):.6e} ({intervals.placement})\n"
        )
        content = intervals.to_csv()
        return cls._output(config, text, content, {"intervals.csv": content})

    @classmethod
    def _scale_function(cls, spec: AnySpec, config: RunConfig) -> ScaleFunction:
        if config.scale_csv is not None:
            return ScaleFunction.from_csv(config.scale_csv.read_text(encoding="utf-8"))
        depth = config.depth if config.depth is not None else settings.MORANLAB["SCALE_DEPTH"]
        return ScaleService.scale_from_cantor(spec, depth)

    @classmethod
    def scale(cls, config: RunConfig) -> RunResult:
        spec = cls._admissible(config)
        h = cls._scale_function(spec, config)
        result = ScaleService.assouad_from_scale(h, config.rho_grid or default_scale_rho_grid(spec), config.r_grid or None)
        low, high = ScaleService.tail_extremes(h, config.tail_fraction)
        text = ReportService.render(result) + f"  h over the tail: min {low:.6f}, max {high:.6f}\n"
        table = ReportService.render(result, "csv")
        return cls._output(config, text, table, {"psi.csv": table, "scale_function.csv": h.to_csv()})

    @classmethod
    def compare(cls, config: RunConfig) -> RunResult:
        spec = cls._admissible(config)
        warnings = []
        formula = DimensionService.estimate(
            spec,
            config.m_max,
            config.k_max,
            tol=config.tol,
            pre_horizon=config.pre_horizon,
            tail_fraction=config.tail_fraction,
            workers=config.workers,
        )
        rows = [("formula", formula.s_assouad, f"s** at m_max={formula.horizon_m}, gap {formula.convergence_gap:.2e}")]

        empirical = cls._empirical(spec, config)
        rows.append(("empirical", empirical.estimate, f"t(ρ) at ρ={empirical.t_by_rho[-1][0]:.3e}"))
        warnings.extend(empirical.warnings)

        if spec.schedule.is_uniform_ratio:
            h = cls._scale_function(spec, config)
            rho_grid = default_scale_rho_grid(spec)
            scale = ScaleService.assouad_from_scale(h, rho_grid)
            rows.append(("scale", scale.estimate, f"sup ψ at ρ={rho_grid[-1]:.3e}"))
            warnings.extend(scale.warnings)
        else:
            warnings.append("scale-function estimate skipped: levels carry unequal ratios")

        comparison = Comparison(target=formula.s_assouad, rows=tuple(rows), warnings=tuple(warnings))
        if not comparison.agrees:
            logger.warning(f"estimates disagree beyond {comparison.tolerance}: {[(m, round(v, 6)) for m, v, _ in rows]}")
        table = ReportService.render(comparison, "csv")
        return cls._output(config, ReportService.render(comparison), table, {"compare.csv": table})

    @classmethod
    def run(cls, config: RunConfig) -> RunResult:
        handlers: Dict[str, Callable[[RunConfig], RunResult]] = {
            "validate": cls.validate,
            "dims": cls.dims,
            "cutset": cls.cutset,
            "witness": cls.witness,
            "empirical": cls.empirical,
            "scale": cls.scale,
            "compare": cls.compare,
            "realize": cls.realize,
        }
        logger.info(f"running {config.command} on {config.input_path}")
        result = handlers[config.command](config)
        logger.info(f"{config.command} finished with status {result.status} and {len(result.artifacts)} artifact(s)")
        return result