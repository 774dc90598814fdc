"""
Geometry Service - one-dimensional realizations and covering numbers.

Responsibilities:
- Realize level-k interval covers of a spec inside [0, 1]
- Minimal covering numbers N_{r,R} of a ball by r-balls (greedy sweep, exact in 1-D)
- Empirical Assouad estimate t(ρ) = max log N_{ρR,R} / (-log ρ)
- Overlap counts of geometric cutsets against δ-balls
- IntervalSet CSV export/import
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from dimensions.specs import AnySpec, CantorLikeSpec, Ratio, spec_fingerprint
from dimensions.validation.errors import (
    BudgetExceededError,
    ErrorCode,
    PlacementError,
    PreconditionError,
    SpecParseError,
    FieldError,
)
from moranlab.run_context import in_run_context

from .cutset_service import DEFAULT_BUDGET, CutsetService

logger = logging.getLogger(__name__)

DEFAULT_REALIZATION_BUDGET = 2_000_000
# Relative slack for float endpoints that should coincide.
EDGE_TOL = 1e-9


@dataclass(frozen=True)
class Placement:
    kind: str = "uniform_gap"
    gamma: float = 1.0

    KINDS = ("uniform_gap", "left_packed")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise PreconditionError(f"placement must be one of {', '.join(self.KINDS)}, got {self.kind!r}")
        if self.kind == "uniform_gap" and not 0 < self.gamma <= 1:
            raise PreconditionError(f"uniform-gap γ must lie in (0, 1], got {self.gamma}")

    def offsets(self, ratios: np.ndarray, level: int) -> np.ndarray:
        """Left offsets of children (rows: parents) relative to a unit parent."""
        n = ratios.shape[-1]
        used = ratios.sum(axis=-1, keepdims=True)
        if self.kind == "uniform_gap":
            gap = self.gamma * (1.0 - used) / (n - 1)
        else:
            gap = np.zeros_like(used)
        if np.any(used > 1.0 + 1e-12):
            raise PlacementError(
                f"children at level {level} need {float(np.max(used)):.6f} > 1 of their parent",
                level=level,
            )
        steps = ratios + gap
        return np.concatenate([np.zeros(ratios.shape[:-1] + (1,)), np.cumsum(steps, axis=-1)[..., :-1]], axis=-1)

    def __str__(self) -> str:
        return f"{self.kind}({self.gamma})" if self.kind == "uniform_gap" else self.kind


@dataclass(frozen=True, eq=False)
class IntervalSet:
    lefts: np.ndarray
    rights: np.ndarray
    depth: int = 0
    spec_hash: str = ""
    placement: str = ""
    seed: Optional[int] = None

    def __post_init__(self):
        for name in ("lefts", "rights"):
            values = np.ascontiguousarray(getattr(self, name), dtype=float)
            values.setflags(write=False)
            object.__setattr__(self, name, values)

    @classmethod
    def unit(cls) -> "IntervalSet":
        return cls(np.array([0.0]), np.array([1.0]))

    def __len__(self) -> int:
        return int(self.lefts.size)

    @property
    def lengths(self) -> np.ndarray:
        return self.rights - self.lefts

    def is_interior_disjoint(self) -> bool:
        scale = EDGE_TOL * max(float(self.lengths.min(initial=1.0)), 1e-300)
        return bool(np.all(self.lefts[1:] >= self.rights[:-1] - scale) and np.all(self.rights >= self.lefts))

    def to_csv(self) -> str:
        output = io.StringIO()
        output.write(
            f"# depth={self.depth},spec_hash={self.spec_hash},placement={self.placement},"
            f"seed={'' if self.seed is None else self.seed}\n"
        )
        writer = csv.writer(output, lineterminator="\n")
        writer.writerow(["a", "b"])
        for a, b in zip(self.lefts.tolist(), self.rights.tolist()):
            writer.writerow([repr(a), repr(b)])
        return output.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "IntervalSet":
        meta: Dict[str, str] = {}
        rows: List[List[str]] = []
        for number, line in enumerate(text.splitlines(), start=1):
            if line.startswith("#"):
                for item in line[1:].strip().split(","):
                    key, _, value = item.partition("=")
                    meta[key.strip()] = value.strip()
            elif line.strip():
                rows.append(next(csv.reader([line])) + [str(number)])
        if not rows or rows[0][:2] != ["a", "b"]:
            raise SpecParseError("IntervalSet CSV needs an 'a,b' header row")
        lefts, rights = [], []
        for a, b, number in rows[1:]:
            try:
                lefts.append(float(a))
                rights.append(float(b))
            except ValueError:
                raise SpecParseError(
                    f"IntervalSet CSV row {number} is not numeric",
                    fields=[FieldError("a,b", ErrorCode.FIELD_INVALID_FORMAT.value, f"{a},{b}", line=int(number))],
                )
        seed = meta.get("seed")
        return cls(
            lefts=np.array(lefts),
            rights=np.array(rights),
            depth=int(meta.get("depth", 0) or 0),
            spec_hash=meta.get("spec_hash", ""),
            placement=meta.get("placement", ""),
            seed=int(seed) if seed else None,
        )


@dataclass(frozen=True)
class CoverResult:
    x: float
    R: float
    r: float
    count: int
    witnesses: Tuple[Tuple[float, float], ...] = ()

    def covers(self, S: IntervalSet) -> bool:
        """True when the witness intervals cover B(x, R) ∩ S."""
        pieces = _trace(S, self.x, self.R)
        if not self.witnesses:
            return len(pieces[0]) == 0
        ordered = sorted(self.witnesses)
        merged: List[List[float]] = [list(ordered[0])]
        for a, b in ordered[1:]:
            if a <= merged[-1][1] + EDGE_TOL * self.r:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        starts = np.array([m[0] for m in merged])
        for a, b in zip(*pieces):
            index = int(np.searchsorted(starts, a + EDGE_TOL * self.r, side="right")) - 1
            if index < 0 or merged[index][1] < b - EDGE_TOL * self.r:
                return False
        return True


@dataclass(frozen=True)
class EmpiricalEstimate:
    estimate: float
    t_by_rho: Tuple[Tuple[float, float], ...]
    table: Tuple[Tuple[float, float, float, int, float], ...]
    depth: int
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    def rows(self) -> List[Dict[str, object]]:
        return [
            {"rho": repr(rho), "R": repr(R), "x": repr(x), "N": N, "t": repr(t)}
            for rho, R, x, N, t in self.table
        ]


@dataclass(frozen=True)
class OverlapResult:
    max_count: int
    by_delta: Tuple[Tuple[float, int], ...]

    @property
    def is_constant(self) -> bool:
        return len({count for _, count in self.by_delta}) == 1


def _trace(S: IntervalSet, x: float, R: float) -> Tuple[np.ndarray, np.ndarray]:
    """Pieces of S ∩ [x - R, x + R] (closed)."""
    lo, hi = x - R, x + R
    first = int(np.searchsorted(S.rights, lo, side="left"))
    last = int(np.searchsorted(S.lefts, hi, side="right"))
    if first >= last:
        return np.zeros(0), np.zeros(0)
    return np.maximum(S.lefts[first:last], lo), np.minimum(S.rights[first:last], hi)


class GeometryService:
    @staticmethod
    def _level_ratios(
        spec: AnySpec,
        k: int,
        parents: int,
        rng: Optional[np.random.Generator],
    ) -> np.ndarray:
        level = spec.level_at(k)
        base = np.array([float(c) for c in level.ratios])
        if not isinstance(spec, CantorLikeSpec):
            return np.broadcast_to(base, (parents, level.n))
        a_k = float(spec.perturbation.at(k))
        if rng is None:
            signs = np.where(np.arange(1, level.n + 1) % 2 == 1, -1.0, 1.0)
            return np.broadcast_to(base * (1 + signs * a_k), (parents, level.n))
        signs = rng.uniform(-1.0, 1.0, size=(parents, level.n))
        return base[None, :] * (1 + signs * a_k)

    @staticmethod
    def _max_log_length(spec: AnySpec, k: int) -> float:
        level = spec.level_at(k)
        bump = float(spec.perturbation.at(k)) if isinstance(spec, CantorLikeSpec) else 0.0
        return math.log(float(level.largest) * (1 + bump))

    @classmethod
    def depth_for(cls, spec: AnySpec, scale: float, budget: int = DEFAULT_REALIZATION_BUDGET) -> int:
        """First level whose intervals all have length <= scale."""
        if scale >= 1:
            return 0
        target = math.log(scale) + 1e-12
        log_length = 0.0
        words = 1
        k = 0
        while log_length > target:
            k += 1
            log_length += cls._max_log_length(spec, k)
            words *= spec.level_at(k).n
            if words > budget:
                raise BudgetExceededError(
                    f"depth rule for scale {scale:.3e} needs more than {budget} intervals (level {k})",
                    bound=budget,
                    required=words,
                )
        return k

    @classmethod
    def realize_level(
        cls,
        spec: AnySpec,
        placement: Optional[Placement] = None,
        depth: int = 1,
        seed: Optional[int] = None,
        budget: int = DEFAULT_REALIZATION_BUDGET,
    ) -> IntervalSet:
        placement = placement or Placement()
        if spec.d != 1:
            raise PreconditionError(f"geometric realization is one-dimensional, spec has d={spec.d}")
        if depth < 0:
            raise PreconditionError(f"depth must be >= 0, got {depth}")
        required = math.prod(level.n for level in spec.schedule.levels(1, depth)) if depth else 1
        if required > budget:
            raise BudgetExceededError(
                f"depth {depth} realization has {required} intervals, above the budget of {budget}",
                bound=budget,
                required=required,
            )

        rng = np.random.default_rng(seed) if seed is not None and isinstance(spec, CantorLikeSpec) else None
        lefts = np.zeros(1)
        lengths = np.ones(1)
        for k in range(1, depth + 1):
            ratios = cls._level_ratios(spec, k, len(lefts), rng)
            offsets = placement.offsets(ratios, k)
            lefts = (lefts[:, None] + lengths[:, None] * offsets).ravel()
            lengths = (lengths[:, None] * ratios).ravel()

        result = IntervalSet(
            lefts=lefts,
            rights=lefts + lengths,
            depth=depth,
            spec_hash=spec_fingerprint(spec),
            placement=str(placement),
            seed=seed if rng is not None else None,
        )
        logger.info(f"realized depth {depth} with {len(result)} intervals ({placement})")
        return result

    @staticmethod
    def covering_number(S: IntervalSet, x: float, R: float, r: float) -> CoverResult:
        """Fewest closed r-balls covering B(x, R) ∩ S; greedy from the left is optimal in 1-D."""
        if r <= 0 or R <= 0:
            raise PreconditionError(f"radii must be positive, got R={R}, r={r}")
        if len(S) == 0:
            raise PreconditionError("covering needs a nonempty interval set")
        a, b = _trace(S, x, R)
        if a.size == 0:
            return CoverResult(x, R, r, 0)
        if r >= R:
            return CoverResult(x, R, r, 1, ((x - r, x + r),))

        width = 2 * r
        witnesses: List[Tuple[float, float]] = []
        end = -math.inf
        j = 0
        while j < a.size:
            p = max(a[j], end)
            span = (b[j] - p) / width
            balls = max(1, math.ceil(span - 1e-12 * max(1.0, span)))
            witnesses.extend((p + width * i, p + width * (i + 1)) for i in range(balls))
            end = p + width * balls
            j = int(np.searchsorted(b, end, side="right"))
        return CoverResult(x, R, r, len(witnesses), tuple(witnesses))

    @staticmethod
    def _centers(spec: AnySpec, S: IntervalSet, R: float, count: int) -> np.ndarray:
        """Left endpoints of the level-k_R intervals, k_R the first level with lengths <= R."""
        if S.depth == 0 or len(S) == 1:
            return S.lefts[:1].copy()
        k_R = min(GeometryService.depth_for(spec, R), S.depth)
        block = math.prod(level.n for level in spec.schedule.levels(k_R + 1, S.depth)) if k_R < S.depth else 1
        anchors = S.lefts[::block]
        if len(anchors) <= count:
            return anchors
        picks = np.unique(np.linspace(0, len(anchors) - 1, count).round().astype(int))
        return anchors[picks]

    @classmethod
    def empirical_assouad(
        cls,
        spec: AnySpec,
        placement: Optional[Placement] = None,
        rho_grid: Sequence[float] = (),
        R_grid: Sequence[float] = (),
        centers_per_R: int = 8,
        budget: int = DEFAULT_REALIZATION_BUDGET,
        seed: Optional[int] = None,
        intervals: Optional[IntervalSet] = None,
        workers: int = 1,
    ) -> EmpiricalEstimate:
        rho_grid = sorted((float(rho) for rho in rho_grid), reverse=True)
        R_grid = sorted((float(R) for R in R_grid), reverse=True)
        if not rho_grid or not R_grid:
            raise PreconditionError("empirical estimate needs nonempty ρ and R grids")
        if not all(0 < rho < 1 for rho in rho_grid) or not all(0 < R <= 1 for R in R_grid):
            raise PreconditionError("grids need 0 < ρ < 1 and 0 < R <= 1")
        if centers_per_R < 1:
            raise PreconditionError(f"centers_per_R must be >= 1, got {centers_per_R}")

        warnings: List[str] = []
        finest = rho_grid[-1] * R_grid[-1] * float(spec.c_star())
        if intervals is None:
            depth = cls.depth_for(spec, finest, budget)
            S = cls.realize_level(spec, placement, depth, seed, budget)
        else:
            S = intervals
            if float(S.lengths.max()) > finest * (1 + EDGE_TOL):
                warnings.append(
                    f"imported intervals (longest {float(S.lengths.max()):.3e}) are coarser than ρR·c_* = {finest:.3e}"
                )

        def run(R: float) -> List[Tuple[float, float, float, int, float]]:
            rows = []
            for x in cls._centers(spec, S, R, centers_per_R):
                for rho in rho_grid:
                    count = cls.covering_number(S, float(x), R, rho * R).count
                    rows.append((rho, R, float(x), count, math.log(count) / -math.log(rho)))
            return rows

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                chunks = list(executor.map(in_run_context(run), R_grid))
        else:
            chunks = [run(R) for R in R_grid]
        table = tuple(row for chunk in chunks for row in chunk)

        t_by_rho = tuple((rho, max(row[4] for row in table if row[0] == rho)) for rho in rho_grid)
        for (rho_a, t_a), (rho_b, t_b) in zip(t_by_rho, t_by_rho[1:]):
            if t_b > t_a + 0.05:
                warnings.append(f"t(ρ) rises from {t_a:.4f} at ρ={rho_a:.3e} to {t_b:.4f} at ρ={rho_b:.3e}")
        for warning in warnings:
            logger.warning(warning)

        result = EmpiricalEstimate(
            estimate=t_by_rho[-1][1],
            t_by_rho=t_by_rho,
            table=table,
            depth=S.depth,
            warnings=tuple(warnings),
        )
        logger.info(f"empirical Assouad estimate {result.estimate:.4f} at ρ={rho_grid[-1]:.3e} (depth {S.depth})")
        return result

    @classmethod
    def locate_cutset(cls, spec: AnySpec, cut, placement: Optional[Placement] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Left and right endpoints of the cylinders of a root cutset, in left-to-right order."""
        placement = placement or Placement()
        lefts = np.zeros(cut.size)
        lengths = np.ones(cut.size)
        for offset, level in enumerate(cut.levels):
            k = cut.base.end + offset + 1
            ratios = cls._level_ratios(spec, k, 1, None)
            offsets = placement.offsets(ratios, k)[0]
            active = cut.depths > offset
            letters = cut.letters[active, offset] - 1
            lefts[active] += lengths[active] * offsets[letters]
            lengths[active] *= ratios[0][letters]
        return lefts, lefts + lengths

    @classmethod
    def overlap_bound(
        cls,
        spec: AnySpec,
        placement: Optional[Placement] = None,
        deltas: Sequence[Ratio] = (),
        centers: int = 32,
        seed: Optional[int] = 0,
        budget: int = DEFAULT_BUDGET,
    ) -> OverlapResult:
        """
        Max number of cutset cylinders meeting a closed δ-ball centered in the set.

        Endpoint contacts count, with EDGE_TOL·δ of slack.
        """
        if not deltas:
            raise PreconditionError("overlap bound needs at least one δ")
        rng = np.random.default_rng(seed)
        by_delta = []
        for delta in deltas:
            cut = CutsetService.cutset(spec, None, delta, budget)
            lefts, rights = cls.locate_cutset(spec, cut, placement)
            radius = float(delta)
            slack = EDGE_TOL * radius
            if cut.size <= centers:
                points = lefts
            else:
                points = np.sort(lefts[rng.choice(cut.size, size=centers, replace=False)])
            hits = (
                np.searchsorted(lefts, points + radius + slack, side="right")
                - np.searchsorted(rights, points - radius - slack, side="left")
            )
            by_delta.append((radius, int(hits.max())))
            logger.debug(f"overlap at δ={radius:.3e}: {int(hits.max())} over {len(points)} centers")
        result = OverlapResult(max_count=max(count for _, count in by_delta), by_delta=tuple(by_delta))
        logger.info(f"overlap bound {result.max_count} across {len(by_delta)} δ values")
        return result


realize_level = GeometryService.realize_level
covering_number = GeometryService.covering_number
empirical_assouad = GeometryService.empirical_assouad
overlap_bound = GeometryService.overlap_bound
