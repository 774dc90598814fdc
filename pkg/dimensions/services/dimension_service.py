"""
Dimension Service - Moran equation roots and dimension estimates.

Responsibilities:
- log Δ_{k,k'}(s) and its root s_{k,k'} (bisection on [0, d])
- θ_m = sup_k s_{k,k+m} and its running infimum (Assouad estimate s**)
- tail-window estimates of s_* = liminf s_{0,m} and s^* = limsup s_{0,m}
- closed-form fast path for levels with equal ratios (Cantor-like and uniform specs)

Every window is reduced to a count vector over the schedule's level alphabet, so
log Δ over the window is Σ_t count_t · log Σ_j c_{t,j}^s. Windows sharing a count
vector are solved once, and all distinct windows are solved together.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from dimensions.specs import AnySpec, CantorLikeSpec, Level, MoranSpec, RatioSchedule
from dimensions.validation.errors import ErrorCode, PreconditionError, SolverError
from moranlab.run_context import in_run_context

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
DEFAULT_TAIL_FRACTION = Fraction(1, 8)
DEFAULT_PRE_HORIZON = 40_000
# Rows of window counts handled per batch.
BATCH_ROWS = 2_000_000
# log Δ(d) may exceed 0 by rounding only.
BRACKET_SLACK = 1e-9

WindowSolver = Callable[[np.ndarray], np.ndarray]


class MoranEquation:
    """log Δ for windows given as count vectors over a level alphabet."""

    def __init__(self, alphabet: Sequence[Level], d: int = 1):
        self.alphabet = tuple(alphabet)
        self.d = d
        self._log_c = [level.log_ratios() for level in self.alphabet]
        self._log_n = np.array([math.log(level.n) for level in self.alphabet])
        self._neg_log_c = np.array([-float(lc.mean()) for lc in self._log_c])

    @property
    def size(self) -> int:
        return len(self.alphabet)

    def level_terms(self, s: np.ndarray) -> np.ndarray:
        """log Σ_j c_{t,j}^s for every exponent in s (rows) and level type t (columns)."""
        s = np.asarray(s, dtype=float)
        columns = [np.logaddexp.reduce(np.multiply.outer(s, lc), axis=-1) for lc in self._log_c]
        return np.stack(columns, axis=-1)

    def log_delta(self, counts: np.ndarray, s: np.ndarray) -> np.ndarray:
        counts = np.atleast_2d(np.asarray(counts, dtype=float))
        s = np.broadcast_to(np.asarray(s, dtype=float), (counts.shape[0],))
        return np.einsum("wt,wt->w", counts, self.level_terms(s))

    def solve(self, counts: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
        """Roots of log Δ = 0, one per row of counts, each within tol."""
        counts = np.atleast_2d(np.asarray(counts, dtype=float))
        rows = counts.shape[0]
        lo = np.zeros(rows)
        hi = np.full(rows, float(self.d))

        levels = np.maximum(counts.sum(axis=1), 1.0)
        at_hi = self.log_delta(counts, hi)
        if np.any(at_hi > BRACKET_SLACK * levels):
            worst = int(np.argmax(at_hi))
            raise SolverError(
                f"no bracketing root on [0, {self.d}]: log Δ(d) = {at_hi[worst]:.3e} > 0 "
                f"for window counts {counts[worst].astype(int).tolist()}"
            )
        if np.any(self.log_delta(counts, lo) <= 0):
            raise SolverError("log Δ(0) <= 0: window has no levels with n >= 2")

        iterations = max(1, math.ceil(math.log2(self.d / tol)))
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            above = self.log_delta(counts, mid) > 0
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        return 0.5 * (lo + hi)

    def closed_form(self, counts: np.ndarray) -> np.ndarray:
        """Σ log n / Σ(-log c): exact root when every level has equal ratios."""
        counts = np.atleast_2d(np.asarray(counts, dtype=float))
        return (counts @ self._log_n) / (counts @ self._neg_log_c)


@dataclass(frozen=True)
class ThetaResult:
    m: int
    theta: float
    argmax_k: int
    starts_scanned: int
    exact: bool


@dataclass(frozen=True)
class PreDimensions:
    s_lower: float
    s_upper: float
    m_lo: int
    m_hi: int
    trace: Tuple[Tuple[int, float], ...]


@dataclass(frozen=True)
class DimensionReport:
    s_lower: float
    s_upper: float
    s_assouad: float
    horizon_k: int
    horizon_m: int
    theta_trace: Tuple[Tuple[int, float, float], ...]
    convergence_gap: float
    solver_tolerance: float
    pre_window: Tuple[int, int]
    pre_trace: Tuple[Tuple[int, float], ...] = ()
    method: str = "moran"
    d: int = 1
    exact_sup: bool = True
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def running_infimum(self) -> List[float]:
        return [row[2] for row in self.theta_trace]

    @property
    def ordering_slack(self) -> float:
        """Amount by which s_upper exceeds s_assouad + convergence_gap (0 when ordered)."""
        return max(0.0, self.s_upper - (self.s_assouad + self.convergence_gap))

    @property
    def appears_regular(self) -> bool:
        values = (self.s_lower, self.s_upper, self.s_assouad)
        return max(values) - min(values) <= 2 * self.solver_tolerance


def cumulative_counts(codes: np.ndarray, types: int) -> np.ndarray:
    """Row j holds the per-type level counts of levels 1..j (row 0 is zero)."""
    table = np.zeros((len(codes) + 1, types), dtype=np.int64)
    if len(codes):
        onehot = np.zeros((len(codes), types), dtype=np.int64)
        onehot[np.arange(len(codes)), codes] = 1
        np.cumsum(onehot, axis=0, out=table[1:])
    return table


def _dedupe(counts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Distinct count rows and the index of each row among them."""
    base = int(counts.max()) + 1 if counts.size else 1
    types = counts.shape[1]
    if types * math.log2(max(base, 2)) < 62:
        weights = base ** np.arange(types, dtype=np.int64)
        keys = counts @ weights
        _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        return counts[first], inverse.ravel()
    unique, inverse = np.unique(counts, axis=0, return_inverse=True)
    return unique, inverse.ravel()


def _solve_rows(counts: np.ndarray, solver: WindowSolver) -> np.ndarray:
    unique, inverse = _dedupe(counts)
    return solver(unique)[inverse]


class DimensionService:
    @staticmethod
    def equation(spec: AnySpec) -> MoranEquation:
        return MoranEquation(spec.schedule.alphabet, spec.d)

    @staticmethod
    def _window_counts(spec: AnySpec, k: int, k_end: int) -> np.ndarray:
        if k < 0:
            raise PreconditionError(f"window start must be >= 0, got k={k}")
        if k >= k_end:
            raise PreconditionError(f"window needs k < k', got k={k}, k'={k_end}")
        codes = spec.schedule.codes(k + 1, k_end)
        return np.bincount(codes, minlength=len(spec.schedule.alphabet))

    @classmethod
    def log_delta(cls, spec: AnySpec, k: int, k_end: int, s: float) -> float:
        """log Δ_{k,k'}(s) = Σ_{i=k+1}^{k'} log Σ_j c_{i,j}^s."""
        if s < 0:
            raise PreconditionError(f"exponent must be >= 0, got s={s}")
        counts = cls._window_counts(spec, k, k_end)
        return float(cls.equation(spec).log_delta(counts, s)[0])

    @classmethod
    def solve_skk(cls, spec: AnySpec, k: int, k_end: int, tol: float = DEFAULT_TOL) -> float:
        if tol <= 0:
            raise PreconditionError(f"tolerance must be positive, got {tol}")
        counts = cls._window_counts(spec, k, k_end)
        return float(cls.equation(spec).solve(counts, tol)[0])

    @classmethod
    def pre_dimensions(
        cls,
        spec: AnySpec,
        m_max: int,
        tol: float = DEFAULT_TOL,
        tail_fraction: Union[Fraction, float] = DEFAULT_TAIL_FRACTION,
        solver: Optional[WindowSolver] = None,
    ) -> PreDimensions:
        """Tail min/max of s_{0,m} over m in [ceil(tail_fraction*m_max), m_max]."""
        if m_max < 1:
            raise PreconditionError(f"m_max must be >= 1, got {m_max}")
        if not 0 < tail_fraction <= 1:
            raise PreconditionError(f"tail fraction must lie in (0, 1], got {tail_fraction}")
        schedule = spec.schedule
        equation = MoranEquation(schedule.alphabet, spec.d)
        solver = solver or (lambda rows: equation.solve(rows, tol))

        m_lo = max(1, math.ceil(Fraction(tail_fraction) * m_max))
        table = cumulative_counts(schedule.codes(1, m_max), equation.size)
        ms = np.arange(m_lo, m_max + 1)
        values = _solve_rows(table[ms], solver)

        trace = tuple(zip(ms.tolist(), values.tolist()))
        result = PreDimensions(float(values.min()), float(values.max()), m_lo, m_max, trace)
        logger.info(f"pre-dimensions over m in [{m_lo}, {m_max}]: s_lower={result.s_lower:.6f}, s_upper={result.s_upper:.6f}")
        return result

    @classmethod
    def theta_trace(
        cls,
        spec: AnySpec,
        m_max: int,
        k_max: int,
        tol: float = DEFAULT_TOL,
        solver: Optional[WindowSolver] = None,
        workers: int = 1,
    ) -> List[ThetaResult]:
        """θ_1..θ_{m_max}; the sup over k is exact for uniform and eventually periodic schedules."""
        if m_max < 1:
            raise PreconditionError(f"m_max must be >= 1, got {m_max}")
        if k_max < 0:
            raise PreconditionError(f"k_max must be >= 0, got {k_max}")
        schedule = spec.schedule
        equation = MoranEquation(schedule.alphabet, spec.d)
        solver = solver or (lambda rows: equation.solve(rows, tol))

        exact_starts = schedule.exact_window_starts()
        starts = exact_starts if exact_starts is not None else k_max + 1
        table = cumulative_counts(schedule.codes(1, starts - 1 + m_max), equation.size)
        ks = np.arange(starts)

        per_batch = max(1, BATCH_ROWS // starts)
        batches = [np.arange(m, min(m + per_batch, m_max + 1)) for m in range(1, m_max + 1, per_batch)]

        def run(ms: np.ndarray) -> List[ThetaResult]:
            counts = table[ms[:, None] + ks[None, :]] - table[ks][None, :]
            roots = _solve_rows(counts.reshape(-1, equation.size), solver).reshape(len(ms), starts)
            best = roots.argmax(axis=1)
            return [
                ThetaResult(int(m), float(roots[row, best[row]]), int(best[row]), starts, exact_starts is not None)
                for row, m in enumerate(ms)
            ]

        if workers > 1 and len(batches) > 1:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                chunks = list(executor.map(in_run_context(run), batches))
        else:
            chunks = [run(ms) for ms in batches]
        results = [result for chunk in chunks for result in chunk]
        logger.debug(f"θ trace for m <= {m_max} over {starts} window starts")
        return results

    @classmethod
    def theta(cls, spec: AnySpec, m: int, k_max: int, tol: float = DEFAULT_TOL) -> ThetaResult:
        """θ_m = sup_k s_{k,k+m}, with k <= k_max unless the schedule is periodic."""
        if m < 1:
            raise PreconditionError(f"window length must be >= 1, got m={m}")
        schedule = spec.schedule
        equation = MoranEquation(schedule.alphabet, spec.d)
        exact_starts = schedule.exact_window_starts()
        starts = exact_starts if exact_starts is not None else k_max + 1
        table = cumulative_counts(schedule.codes(1, starts - 1 + m), equation.size)
        ks = np.arange(starts)
        roots = _solve_rows(table[ks + m] - table[ks], lambda rows: equation.solve(rows, tol))
        best = int(roots.argmax())
        return ThetaResult(m, float(roots[best]), best, starts, exact_starts is not None)

    @classmethod
    def _report(
        cls,
        spec: AnySpec,
        m_max: int,
        k_max: int,
        tol: float,
        pre_horizon: Optional[int],
        tail_fraction: Union[Fraction, float],
        solver: Optional[WindowSolver],
        method: str,
        workers: int = 1,
    ) -> DimensionReport:
        schedule: RatioSchedule = spec.schedule
        warnings: List[str] = []

        thetas = cls.theta_trace(spec, m_max, k_max, tol, solver=solver, workers=workers)
        values = np.array([t.theta for t in thetas])
        running = np.minimum.accumulate(values)
        trace = tuple((t.m, t.theta, float(r)) for t, r in zip(thetas, running))

        exact_sup = schedule.exact_window_starts() is not None
        if not exact_sup:
            warnings.append(f"sup over k truncated at k_max={k_max}")
            horizon = schedule.structural_horizon(m_max)
            if horizon is not None and k_max < horizon:
                warnings.append(
                    f"k_max={k_max} is below the structural horizon {horizon} for m={m_max}; "
                    f"θ_m may be underestimated"
                )

        pre = cls.pre_dimensions(
            spec, pre_horizon or max(m_max, DEFAULT_PRE_HORIZON), tol, tail_fraction, solver=solver
        )
        s_assouad = float(running[-1])
        report = DimensionReport(
            s_lower=pre.s_lower,
            s_upper=pre.s_upper,
            s_assouad=s_assouad,
            horizon_k=(thetas[-1].starts_scanned - 1 + m_max),
            horizon_m=m_max,
            theta_trace=trace,
            convergence_gap=float(values[-1] - running[-1]),
            solver_tolerance=tol,
            pre_window=(pre.m_lo, pre.m_hi),
            pre_trace=pre.trace,
            method=method,
            d=spec.d,
            exact_sup=exact_sup,
            warnings=tuple(warnings),
        )
        if report.ordering_slack > 2 * tol:
            warnings.append(
                f"tail estimate s_upper exceeds s** + gap by {report.ordering_slack:.3e} at these truncated horizons"
            )
            report = replace(report, warnings=tuple(warnings))
        for warning in report.warnings:
            logger.warning(warning)
        logger.info(
            f"{method}: s_lower={report.s_lower:.6f} s_upper={report.s_upper:.6f} "
            f"s**<={report.s_assouad:.6f} (gap {report.convergence_gap:.2e})"
        )
        return report

    @classmethod
    def assouad_moran(
        cls,
        spec: MoranSpec,
        m_max: int,
        k_max: int,
        tol: float = DEFAULT_TOL,
        pre_horizon: Optional[int] = None,
        tail_fraction: Union[Fraction, float] = DEFAULT_TAIL_FRACTION,
        workers: int = 1,
    ) -> DimensionReport:
        if not spec.c_star() > 0:
            raise PreconditionError("Assouad dimension formula needs c_* > 0")
        return cls._report(spec, m_max, k_max, tol, pre_horizon, tail_fraction, None, "moran", workers)

    @classmethod
    def uniform_corollary(
        cls,
        spec: AnySpec,
        m_max: int,
        k_max: int,
        tol: float = DEFAULT_TOL,
        pre_horizon: Optional[int] = None,
        tail_fraction: Union[Fraction, float] = DEFAULT_TAIL_FRACTION,
        method: str = "uniform",
    ) -> DimensionReport:
        """Fast path for levels with c_{k,1} = ... = c_{k,n_k}: s_{k,k+m} = Σ log n / Σ(-log c)."""
        schedule = spec.schedule
        if not schedule.is_uniform_ratio:
            uneven = next(level for level in schedule.alphabet if not level.is_uniform)
            raise PreconditionError(
                f"closed form needs equal ratios within each level, got {uneven}",
                code=ErrorCode.NON_UNIFORM_LEVELS,
            )
        equation = MoranEquation(schedule.alphabet, spec.d)
        return cls._report(spec, m_max, k_max, tol, pre_horizon, tail_fraction, equation.closed_form, method)

    @classmethod
    def assouad_cantor(
        cls,
        spec: CantorLikeSpec,
        m_max: int,
        k_max: int,
        tol: float = DEFAULT_TOL,
        pre_horizon: Optional[int] = None,
        tail_fraction: Union[Fraction, float] = DEFAULT_TAIL_FRACTION,
    ) -> DimensionReport:
        """Ratio of log-sums; the perturbation a_k does not enter."""
        return cls.uniform_corollary(spec, m_max, k_max, tol, pre_horizon, tail_fraction, method="cantor")

    @classmethod
    def estimate(cls, spec: AnySpec, m_max: int, k_max: int, **options) -> DimensionReport:
        if isinstance(spec, CantorLikeSpec):
            options.pop("workers", None)
            return cls.assouad_cantor(spec, m_max, k_max, **options)
        return cls.assouad_moran(spec, m_max, k_max, **options)


log_delta = DimensionService.log_delta
solve_skk = DimensionService.solve_skk
pre_dimensions = DimensionService.pre_dimensions
theta = DimensionService.theta
assouad_moran = DimensionService.assouad_moran
assouad_cantor = DimensionService.assouad_cantor
uniform_corollary = DimensionService.uniform_corollary
