"""
Scale Service - piecewise-constant scale functions of homogeneous sets.

A ScaleFunction stores log breakpoints 0 = u_0 > u_1 > ... > u_K (u_k = log r_k)
and values h_k on the pieces (r_k, r_{k-1}]. Everything works in log space, so
depths of several hundred thousand levels stay representable.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from dimensions.specs import AnySpec, spec_fingerprint
from dimensions.validation.errors import (
    ErrorCode,
    FieldError,
    PreconditionError,
    ScaleRangeError,
    SpecParseError,
)

logger = logging.getLogger(__name__)

DEFAULT_DEPTH = 4096
SNAP_TOL = 1e-9
TAIL_RULES = ("extend_last", "none")


@dataclass(frozen=True, eq=False)
class ScaleFunction:
    log_breakpoints: np.ndarray
    values: np.ndarray
    floor_log: Optional[float] = None
    tail: str = "extend_last"
    source: str = ""

    def __post_init__(self):
        u = np.ascontiguousarray(self.log_breakpoints, dtype=float)
        h = np.ascontiguousarray(self.values, dtype=float)
        if u.ndim != 1 or u.size < 2 or u[0] != 0.0:
            raise PreconditionError("scale function needs breakpoints starting at log r_0 = 0")
        if not np.all(np.diff(u) < 0):
            raise PreconditionError("scale function breakpoints must be strictly decreasing")
        if h.shape != (u.size - 1,):
            raise PreconditionError(f"{u.size - 1} pieces need {u.size - 1} values, got {h.size}")
        if not np.all(np.isfinite(h)) or not np.all(h > 0):
            raise PreconditionError("scale function values must be positive and finite")
        if self.tail not in TAIL_RULES:
            raise PreconditionError(f"tail rule must be one of {', '.join(TAIL_RULES)}, got {self.tail!r}")
        floor = float(u[-1]) if self.floor_log is None else float(self.floor_log)
        if floor > u[-1] or (self.tail == "none" and floor != u[-1]):
            raise PreconditionError(f"floor log r = {floor} is inconsistent with the last breakpoint {u[-1]}")
        u.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "log_breakpoints", u)
        object.__setattr__(self, "values", h)
        object.__setattr__(self, "floor_log", floor)
        object.__setattr__(self, "_ascending", np.ascontiguousarray(u[1:][::-1]))

    @classmethod
    def from_pieces(
        cls,
        breakpoints: Sequence[float],
        values: Sequence[float],
        floor: Optional[float] = None,
        tail: str = "extend_last",
    ) -> "ScaleFunction":
        """Breakpoints r_1 > r_2 > ... (r_0 = 1 implied) with one value per piece."""
        u = np.concatenate([[0.0], np.log(np.asarray(breakpoints, dtype=float))])
        return cls(u, np.asarray(values, dtype=float), None if floor is None else math.log(floor), tail)

    @classmethod
    def constant(cls, s: float, floor: float = 1e-300) -> "ScaleFunction":
        return cls(np.array([0.0, math.log(floor)]), np.array([s]), source="constant")

    @property
    def depth(self) -> int:
        return int(self.values.size)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.exp(self.log_breakpoints)

    def snap(self, u: np.ndarray) -> np.ndarray:
        """Move points within SNAP_TOL (relative) of a breakpoint onto it."""
        u = np.asarray(u, dtype=float)
        asc = self._ascending
        right = np.clip(np.searchsorted(asc, u), 0, asc.size - 1)
        left = np.clip(right - 1, 0, asc.size - 1)
        nearest = np.where(np.abs(asc[left] - u) < np.abs(asc[right] - u), asc[left], asc[right])
        close = np.abs(nearest - u) <= SNAP_TOL * np.maximum(1.0, np.abs(u))
        return np.where(close, nearest, u)

    def touches_tail(self, u: np.ndarray) -> bool:
        return bool(np.any(self.snap(u) < self.log_breakpoints[-1]))

    def value_at(self, u: Union[float, np.ndarray], side: str = "point") -> np.ndarray:
        """
        h at log r = u. side="point" uses the piece containing u, side="above" the
        limit from larger r (they differ only at breakpoints).
        """
        u = self.snap(np.atleast_1d(np.asarray(u, dtype=float)))
        if np.any(u > 0):
            raise ScaleRangeError(f"scale function queried above r = 1 (log r = {float(u.max()):.6g})")
        if np.any(u < self.floor_log):
            raise ScaleRangeError(
                f"scale function queried at log r = {float(u.min()):.6g}, below its floor {self.floor_log:.6g}"
            )
        K = self.values.size
        if side == "point":
            at_or_above = K - np.searchsorted(self._ascending, u, side="left")
        elif side == "above":
            at_or_above = K - np.searchsorted(self._ascending, u, side="right")
        else:
            raise PreconditionError(f"side must be 'point' or 'above', got {side!r}")
        # pieces past K are the tail
        return self.values[np.minimum(at_or_above, K - 1)]

    def __call__(self, r: float) -> float:
        return float(self.value_at(math.log(r))[0])

    def to_csv(self) -> str:
        output = io.StringIO()
        output.write(f"# floor_log={self.floor_log!r},tail={self.tail},source={self.source}\n")
        writer = csv.writer(output, lineterminator="\n")
        writer.writerow(["r", "log_r", "h"])
        for u, h in zip(self.log_breakpoints[1:].tolist(), self.values.tolist()):
            writer.writerow([repr(math.exp(u)), repr(u), repr(h)])
        return output.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ScaleFunction":
        meta: Dict[str, str] = {}
        body = []
        for line in text.splitlines():
            if line.startswith("#"):
                for item in line[1:].strip().split(","):
                    key, _, value = item.partition("=")
                    meta[key.strip()] = value.strip()
            elif line.strip():
                body.append(line)
        reader = csv.DictReader(body)
        if not reader.fieldnames or "h" not in reader.fieldnames:
            raise SpecParseError("scale function CSV needs an 'h' column and one of 'log_r' or 'r'")
        logs, values = [0.0], []
        for number, row in enumerate(reader, start=2):
            try:
                logs.append(float(row["log_r"]) if row.get("log_r") else math.log(float(row["r"])))
                values.append(float(row["h"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise SpecParseError(
                    f"scale function CSV row {number - 1} is malformed",
                    fields=[FieldError("r,log_r,h", ErrorCode.FIELD_INVALID_FORMAT.value, str(exc), line=number)],
                )
        floor = meta.get("floor_log")
        return cls(
            np.array(logs),
            np.array(values),
            float(floor) if floor else None,
            meta.get("tail", "extend_last") or "extend_last",
            meta.get("source", ""),
        )


@dataclass(frozen=True)
class ScaleEstimate:
    estimate: float
    t_by_rho: Tuple[Tuple[float, float, float], ...]
    table: Tuple[Tuple[float, float, float], ...]
    touches_tail: bool = False
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    def rows(self) -> List[Dict[str, object]]:
        return [{"rho": repr(rho), "R": repr(R), "psi": repr(value)} for rho, R, value in self.table]


@dataclass(frozen=True)
class EquivalenceResult:
    ok: bool
    max_violation: float
    worst_r: Optional[float]
    points: int


class ScaleService:
    @staticmethod
    def scale_from_cantor(spec: AnySpec, depth: int = DEFAULT_DEPTH) -> ScaleFunction:
        """r_k = c_1...c_k and h_k = log(n_1...n_k) / -log(c_1...c_k)."""
        if depth < 1:
            raise PreconditionError(f"depth must be >= 1, got {depth}")
        schedule = spec.schedule
        if not schedule.is_uniform_ratio:
            raise PreconditionError(
                "scale function needs one ratio per level",
                code=ErrorCode.NON_UNIFORM_LEVELS,
            )
        alphabet = schedule.alphabet
        log_n = np.array([math.log(level.n) for level in alphabet])
        log_c = np.array([math.log(level.ratios[0]) for level in alphabet])
        codes = schedule.codes(1, depth)
        u = np.concatenate([[0.0], np.cumsum(log_c[codes])])
        h = np.cumsum(log_n[codes]) / -u[1:]
        logger.info(f"scale function of depth {depth} down to log r = {u[-1]:.6g}")
        return ScaleFunction(u, h, tail="extend_last", source=spec_fingerprint(spec))

    @staticmethod
    def _check_rho(rho: float) -> float:
        rho = float(rho)
        if not 0 < rho < 1:
            raise PreconditionError(f"ρ must lie in (0, 1), got {rho}")
        return rho

    @classmethod
    def psi(cls, h: ScaleFunction, R: float, rho: float) -> float:
        """|(h(R) log R - h(ρR) log(ρR)) / log ρ|"""
        rho = cls._check_rho(rho)
        if not 0 < R <= 1:
            raise PreconditionError(f"R must lie in (0, 1], got {R}")
        return float(cls._psi_log(h, np.array([math.log(R)]), math.log(rho))[0])

    @staticmethod
    def _psi_log(h: ScaleFunction, u: np.ndarray, L: float, side: str = "point") -> np.ndarray:
        low = h.snap(u + L)
        return np.abs(h.value_at(u, side) * u - h.value_at(low, side) * low) / -L

    @classmethod
    def _sup(cls, h: ScaleFunction, L: float, lo: float, hi: float) -> Tuple[float, float]:
        """
        Exact sup of ψ(e^u, e^L) for u in [lo, hi].

        Both terms are linear in u between breakpoints, so the sup sits at u = u_k,
        u = u_k - L or an endpoint, taken either as a value or as the limit from above.
        """
        u = h.log_breakpoints[1:]
        shifted = u - L
        candidates = np.concatenate([[lo, hi], u[(u >= lo) & (u <= hi)], shifted[(shifted >= lo) & (shifted <= hi)]])
        candidates = np.unique(h.snap(candidates))
        candidates = candidates[(candidates >= lo) & (candidates <= hi)]
        point = cls._psi_log(h, candidates, L, "point")
        inner = candidates[candidates < hi]
        above = cls._psi_log(h, inner, L, "above") if inner.size else np.zeros(0)
        best_point = int(point.argmax())
        if above.size and above.max() > point[best_point]:
            best = int(above.argmax())
            return float(above[best]), float(inner[best])
        return float(point[best_point]), float(candidates[best_point])

    @classmethod
    def assouad_from_scale(
        cls,
        h: ScaleFunction,
        rho_grid: Sequence[float],
        R_grid: Optional[Sequence[float]] = None,
        R_max: float = 1.0,
    ) -> ScaleEstimate:
        rhos = sorted((cls._check_rho(rho) for rho in rho_grid), reverse=True)
        if not rhos:
            raise PreconditionError("assouad_from_scale needs a nonempty ρ grid")
        hi = math.log(R_max)
        grid_lo = -math.inf
        if R_grid is not None:
            R_values = np.array([float(R) for R in R_grid])
            if R_values.size == 0 or np.any(R_values <= 0) or np.any(R_values > 1):
                raise PreconditionError("R grid must be a nonempty list of values in (0, 1]")
            # the sup runs over [min R_grid, max R_grid], breakpoints included
            grid_lo, hi = float(np.log(R_values.min())), min(hi, float(np.log(R_values.max())))
        t_by_rho = []
        table: List[Tuple[float, float, float]] = []
        touches = False
        for rho in rhos:
            L = math.log(rho)
            lo = max(h.floor_log - L, grid_lo)
            if lo > hi:
                raise ScaleRangeError(
                    f"ρ = {rho:.3e} reaches below the floor log r = {h.floor_log:.6g} for every R in range"
                )
            t, u_best = cls._sup(h, L, lo, hi)
            touches = touches or h.touches_tail(np.array([lo + L]))
            t_by_rho.append((rho, t, math.exp(u_best)))
            if R_grid is None:
                table.append((rho, math.exp(u_best), t))
            else:
                usable = R_values[np.log(R_values) >= h.floor_log - L]
                for R, value in zip(usable.tolist(), cls._psi_log(h, np.log(usable), L).tolist()):
                    table.append((rho, R, value))
            logger.debug(f"sup ψ(R, {rho:.3e}) = {t:.6f} at R = {math.exp(u_best):.3e}")

        warnings = []
        if touches:
            warnings.append(f"ψ queries reach the extended tail below r_K = {math.exp(h.log_breakpoints[-1]):.3e}")
        result = ScaleEstimate(
            estimate=t_by_rho[-1][1],
            t_by_rho=tuple(t_by_rho),
            table=tuple(table),
            touches_tail=touches,
            warnings=tuple(warnings),
        )
        logger.info(f"scale-function estimate {result.estimate:.6f} at ρ = {rhos[-1]:.3e}")
        return result

    @classmethod
    def equivalence_check(
        cls,
        h: ScaleFunction,
        g: ScaleFunction,
        C: float,
        r_grid: Sequence[float] = (),
    ) -> EquivalenceResult:
        """
        Checks |h(r) - g(r)| <= C / |log r| on the grid and at every breakpoint of both.

        Breakpoints are checked as values and as limits from above; the bound is
        tightest at the open lower end of a piece.
        """
        floor = max(h.floor_log, g.floor_log)
        grid = np.log(np.asarray(r_grid, dtype=float)) if len(r_grid) else np.zeros(0)
        if np.any(grid < floor) or np.any(grid > 0):
            raise ScaleRangeError(f"r grid leaves the common range [e^{floor:.6g}, 1]")
        points = np.concatenate([grid, h.log_breakpoints[1:], g.log_breakpoints[1:]])
        points = np.unique(points[(points >= floor) & (points < 0)])
        if points.size == 0:
            return EquivalenceResult(True, 0.0, None, 0)
        bound = C / np.abs(points)
        violation = np.maximum(
            np.abs(h.value_at(points) - g.value_at(points)) - bound,
            np.abs(h.value_at(points, "above") - g.value_at(points, "above")) - bound,
        )
        worst = int(violation.argmax())
        result = EquivalenceResult(
            ok=bool(violation[worst] <= 1e-12),
            max_violation=float(violation[worst]),
            worst_r=math.exp(points[worst]),
            points=int(points.size),
        )
        logger.info(f"equivalence with C={C}: ok={result.ok} (max violation {result.max_violation:.3e})")
        return result

    @classmethod
    def range_independence(
        cls,
        h: ScaleFunction,
        rho_grid: Sequence[float],
        eps1: float,
        eps2: float,
    ) -> Tuple[float, float, float]:
        """Estimates restricted to R <= eps1 and R <= eps2, and their difference."""
        first = cls.assouad_from_scale(h, rho_grid, R_max=eps1).estimate
        second = cls.assouad_from_scale(h, rho_grid, R_max=eps2).estimate
        return first, second, abs(first - second)

    @staticmethod
    def tail_extremes(h: ScaleFunction, tail_fraction: Union[Fraction, float] = Fraction(1, 8)) -> Tuple[float, float]:
        """Min and max of h_k over k in [ceil(tail_fraction * K), K]."""
        if not 0 < tail_fraction < 1:
            raise PreconditionError(f"tail_fraction must lie in (0, 1), got {tail_fraction}")
        start = max(math.ceil(tail_fraction * h.depth), 1)
        tail = h.values[start - 1:]
        return float(tail.min()), float(tail.max())


scale_from_cantor = ScaleService.scale_from_cantor
psi = ScaleService.psi
assouad_from_scale = ScaleService.assouad_from_scale
equivalence_check = ScaleService.equivalence_check
range_independence = ScaleService.range_independence
tail_extremes = ScaleService.tail_extremes
