"""
Spec model for Moran and Cantor-like constructions.

A spec is a finitely presented infinite sequence of levels. Level k carries the
branch count n_k and the contraction ratios (c_{k,1}, ..., c_{k,n_k}).

Responsibilities:
- Immutable level and schedule types (uniform, eventually periodic, block program)
- Per-level access (level_at) and vectorized level codes over a finite alphabet
- Exact lower bound c_* over the presentation
- The built-in marker_runs block program and its marker sequences
"""

from __future__ import annotations

import hashlib
import math
import threading
from abc import ABC, abstractmethod
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import ClassVar, Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from dimensions.validation.errors import ErrorCode, FieldError, PreconditionError, SpecValidationError

Ratio = Union[Fraction, float]

# Markers beyond this size are never generated; rounds past it are unreachable in practice.
MARKER_CEILING = 10**18


def as_ratio(value: Union[Ratio, int, str]) -> Ratio:
    """Parse a ratio, keeping "p/q" strings, decimals and integers exact."""
    if isinstance(value, bool):
        raise TypeError("booleans are not ratios")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        return Fraction(value.replace(" ", ""))
    raise TypeError(f"cannot interpret {value!r} as a ratio")


def format_ratio(value: Ratio) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return repr(float(value))


@dataclass(frozen=True)
class Level:
    ratios: Tuple[Ratio, ...]

    def __post_init__(self):
        object.__setattr__(self, "ratios", tuple(as_ratio(c) for c in self.ratios))

    @classmethod
    def uniform(cls, n: int, c: Union[Ratio, str]) -> "Level":
        return cls(tuple([as_ratio(c)] * n))

    @property
    def n(self) -> int:
        return len(self.ratios)

    @property
    def is_uniform(self) -> bool:
        return len(set(self.ratios)) == 1

    @property
    def is_exact(self) -> bool:
        return all(isinstance(c, Fraction) for c in self.ratios)

    @property
    def smallest(self) -> Ratio:
        return min(self.ratios)

    @property
    def largest(self) -> Ratio:
        return max(self.ratios)

    def power_sum(self, d: int) -> Ratio:
        return sum((c**d for c in self.ratios), Fraction(0))

    def log_ratios(self) -> np.ndarray:
        return np.log(np.array([float(c) for c in self.ratios], dtype=float))

    def __str__(self) -> str:
        if self.is_uniform:
            return f"{self.n} x {format_ratio(self.ratios[0])}"
        return "(" + ", ".join(format_ratio(c) for c in self.ratios) + ")"


class RatioSchedule(ABC):
    kind: ClassVar[str]

    @property
    @abstractmethod
    def alphabet(self) -> Tuple[Level, ...]:
        """Distinct level values in first-seen order."""

    @abstractmethod
    def codes(self, k_lo: int, k_hi: int) -> np.ndarray:
        """Alphabet indices of levels k_lo..k_hi (inclusive, 1-based)."""

    def level_at(self, k: int) -> Level:
        _require_level_index(k)
        return self.alphabet[int(self.codes(k, k)[0])]

    def levels(self, k_lo: int, k_hi: int) -> List[Level]:
        alphabet = self.alphabet
        return [alphabet[int(code)] for code in self.codes(k_lo, k_hi)]

    def c_star(self) -> Ratio:
        return min(level.smallest for level in self.alphabet)

    def exact_window_starts(self) -> Optional[int]:
        """Number of window offsets k = 0, 1, ... that realize every window; None if unbounded."""
        return None

    def structural_horizon(self, m: int) -> Optional[int]:
        return None

    def first_occurrences(self, limit: int) -> Dict[int, int]:
        codes = self.codes(1, limit)
        found, first = np.unique(codes, return_index=True)
        return {int(code): int(index) + 1 for code, index in zip(found, first)}

    @property
    def is_uniform_ratio(self) -> bool:
        return all(level.is_uniform for level in self.alphabet)

    @property
    def is_exact(self) -> bool:
        return all(level.is_exact for level in self.alphabet)


def _require_level_index(k: int) -> None:
    if k < 1:
        raise PreconditionError(f"level index must be >= 1, got {k}")


@dataclass(frozen=True)
class UniformSchedule(RatioSchedule):
    kind: ClassVar[str] = "uniform"

    n: int
    c: Ratio

    def __post_init__(self):
        object.__setattr__(self, "c", as_ratio(self.c))

    @cached_property
    def alphabet(self) -> Tuple[Level, ...]:
        return (Level.uniform(self.n, self.c),)

    def codes(self, k_lo: int, k_hi: int) -> np.ndarray:
        _require_level_index(k_lo)
        return np.zeros(max(k_hi - k_lo + 1, 0), dtype=np.int64)

    def exact_window_starts(self) -> Optional[int]:
        return 1


@dataclass(frozen=True)
class PeriodicSchedule(RatioSchedule):
    kind: ClassVar[str] = "eventually_periodic"

    prefix: Tuple[Level, ...]
    cycle: Tuple[Level, ...]

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "cycle", tuple(self.cycle))
        if not self.cycle:
            raise SpecValidationError(
                "Eventually periodic schedule needs a nonempty cycle",
                fields=[FieldError("schedule.cycle", ErrorCode.FIELD_REQUIRED.value, "cycle is empty")],
            )

    @cached_property
    def alphabet(self) -> Tuple[Level, ...]:
        return tuple(dict.fromkeys(self.prefix + self.cycle))

    @cached_property
    def _prefix_codes(self) -> np.ndarray:
        index = {level: code for code, level in enumerate(self.alphabet)}
        return np.array([index[level] for level in self.prefix], dtype=np.int64)

    @cached_property
    def _cycle_codes(self) -> np.ndarray:
        index = {level: code for code, level in enumerate(self.alphabet)}
        return np.array([index[level] for level in self.cycle], dtype=np.int64)

    def codes(self, k_lo: int, k_hi: int) -> np.ndarray:
        _require_level_index(k_lo)
        ks = np.arange(k_lo, k_hi + 1, dtype=np.int64)
        out = np.empty(ks.shape, dtype=np.int64)
        p = len(self.prefix)
        in_prefix = ks <= p
        out[in_prefix] = self._prefix_codes[ks[in_prefix] - 1]
        out[~in_prefix] = self._cycle_codes[(ks[~in_prefix] - 1 - p) % len(self.cycle)]
        return out

    def exact_window_starts(self) -> Optional[int]:
        return len(self.prefix) + len(self.cycle)


@dataclass(frozen=True)
class MarkerSequence:
    """p_1 < p_2 < ... : factorial p_i = (i+offset)!, power p_i = scale*base^i."""

    kind: str = "factorial"
    offset: int = 1
    base: int = 2
    scale: int = 1

    def __call__(self, i: int) -> int:
        if self.kind == "factorial":
            return math.factorial(i + self.offset)
        if self.kind == "power":
            return self.scale * self.base**i
        raise SpecValidationError(f"unknown marker sequence kind {self.kind!r}")


@dataclass(frozen=True)
class LengthRule:
    """Stage length in round i: const a | round a*i+b | marker p_{i+1}+b | marker_gap p_{i+1}-p_i-(a*i+b)."""

    rule: str
    a: int = 0
    b: int = 0

    RULES: ClassVar[Tuple[str, ...]] = ("const", "round", "marker", "marker_gap")

    def length(self, i: int, markers: MarkerSequence) -> int:
        if self.rule == "const":
            return self.a
        if self.rule == "round":
            return self.a * i + self.b
        if self.rule == "marker":
            return markers(i + 1) + self.b
        if self.rule == "marker_gap":
            return markers(i + 1) - markers(i) - (self.a * i + self.b)
        raise SpecValidationError(f"unknown length rule {self.rule!r}")

    @property
    def grows(self) -> bool:
        return self.rule in ("marker", "marker_gap") or (self.rule == "round" and self.a > 0)


@dataclass(frozen=True)
class Stage:
    length: LengthRule
    levels: Tuple[Level, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))

    def level_for_round(self, i: int) -> Level:
        return self.levels[i % len(self.levels)]


class Segment(NamedTuple):
    start: int
    end: int
    code: int
    round_index: int
    stage_index: int

    @property
    def length(self) -> int:
        return self.end - self.start + 1


class _SegmentCache:
    """Lazily materialized runs of a block program; safe to share across threads."""

    def __init__(self, segments: Iterator[Segment]):
        self._segments = segments
        self._lock = threading.Lock()
        self.items: List[Segment] = []
        self.starts: List[int] = []

    def extend_to(self, k: int) -> None:
        if self.items and self.items[-1].end >= k:
            return
        with self._lock:
            while not self.items or self.items[-1].end < k:
                segment = next(self._segments)
                self.items.append(segment)
                self.starts.append(segment.start)


@dataclass(frozen=True)
class BlockSchedule(RatioSchedule):
    """Head stages (round 0) followed by rounds i = 1, 2, ... of stages."""

    kind: ClassVar[str] = "block_program"
    MAX_EMPTY_ROUNDS: ClassVar[int] = 1000

    head: Tuple[Stage, ...]
    rounds: Tuple[Stage, ...]
    markers: MarkerSequence = field(default_factory=MarkerSequence)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(self.head))
        object.__setattr__(self, "rounds", tuple(self.rounds))
        if not self.rounds:
            raise SpecValidationError(
                "Block program needs at least one round stage",
                fields=[FieldError("schedule.rounds", ErrorCode.FIELD_REQUIRED.value, "rounds is empty")],
            )
        object.__setattr__(self, "_cache", _SegmentCache(self.iter_segments()))

    @cached_property
    def alphabet(self) -> Tuple[Level, ...]:
        values: List[Level] = []
        for stage in self.head + self.rounds:
            values.extend(stage.levels)
        return tuple(dict.fromkeys(values))

    @cached_property
    def _index(self) -> Dict[Level, int]:
        return {level: code for code, level in enumerate(self.alphabet)}

    def stage_lengths(self, i: int) -> List[int]:
        stages = self.head if i == 0 else self.rounds
        return [stage.length.length(i, self.markers) for stage in stages]

    def iter_segments(self) -> Iterator[Segment]:
        """Yield maximal constant stretches in level order; zero-length stages are skipped."""
        position = 1
        i = 0
        empty_rounds = 0
        while True:
            stages = self.head if i == 0 else self.rounds
            produced = 0
            for stage_index, stage in enumerate(stages):
                length = stage.length.length(i, self.markers)
                if length < 0:
                    raise SpecValidationError(
                        f"stage {stage_index} of round {i} has negative length {length}",
                        fields=[FieldError(
                            f"schedule.rounds[{stage_index}].length",
                            ErrorCode.FIELD_OUT_OF_RANGE.value,
                            f"negative length {length} in round {i}",
                        )],
                    )
                if length == 0:
                    continue
                code = self._index[stage.level_for_round(i)]
                yield Segment(position, position + length - 1, code, i, stage_index)
                position += length
                produced += length
            if i > 0:
                empty_rounds = empty_rounds + 1 if produced == 0 else 0
                if empty_rounds > self.MAX_EMPTY_ROUNDS:
                    raise SpecValidationError(
                        f"block program produced no levels for {self.MAX_EMPTY_ROUNDS} consecutive rounds"
                    )
            i += 1

    def segment_at(self, k: int) -> Segment:
        _require_level_index(k)
        cache: _SegmentCache = self._cache
        cache.extend_to(k)
        return cache.items[bisect_right(cache.starts, k) - 1]

    def codes(self, k_lo: int, k_hi: int) -> np.ndarray:
        _require_level_index(k_lo)
        if k_hi < k_lo:
            return np.zeros(0, dtype=np.int64)
        cache: _SegmentCache = self._cache
        cache.extend_to(k_hi)
        first = bisect_right(cache.starts, k_lo) - 1
        last = bisect_right(cache.starts, k_hi) - 1
        window = cache.items[first:last + 1]
        starts = np.array([max(seg.start, k_lo) for seg in window], dtype=np.int64)
        ends = np.array([min(seg.end, k_hi) for seg in window], dtype=np.int64)
        values = np.array([seg.code for seg in window], dtype=np.int64)
        return np.repeat(values, ends - starts + 1)

    def marker_gaps(self, rounds: int) -> List[Tuple[int, int]]:
        """(i, p_{i+1} - p_i) for generated rounds i below the marker ceiling."""
        gaps = []
        for i in range(1, rounds + 1):
            if self.markers(i + 1) > MARKER_CEILING:
                break
            gaps.append((i, self.markers(i + 1) - self.markers(i)))
        return gaps

    def structural_horizon(self, m: int, max_rounds: int = 64) -> Optional[int]:
        """
        Last level needed before every level value has shown a run of length m.

        Windows of length m whose sup sits inside such runs are missed when the
        scan horizon stops short of this index.
        """
        pending = set(range(len(self.alphabet)))
        completion: Dict[int, int] = {}
        run_code, run_start = None, None
        for segment in self.iter_segments():
            if segment.round_index > max_rounds or segment.start > MARKER_CEILING:
                break
            if segment.code != run_code:
                run_code, run_start = segment.code, segment.start
            if segment.code in pending and segment.end - run_start + 1 >= m:
                completion[segment.code] = run_start + m - 1
                pending.discard(segment.code)
                if not pending:
                    break
        return max(completion.values()) if completion else None


QUARTER = Level.uniform(2, Fraction(1, 4))
EIGHTH = Level.uniform(2, Fraction(1, 8))
SIXTEENTH = Level.uniform(2, Fraction(1, 16))


def marker_runs_schedule(markers: Optional[MarkerSequence] = None) -> BlockSchedule:
    """
    Runs of 1/4 on [p_i+1, p_i+i], then 1/8 (even i) or 1/16 (odd i)
    up to p_{i+1}. Levels 1..p_1 are assigned 1/4.
    """
    return BlockSchedule(
        head=(Stage(LengthRule("marker"), (QUARTER,)),),
        rounds=(
            Stage(LengthRule("round", a=1), (QUARTER,)),
            Stage(LengthRule("marker_gap", a=1), (EIGHTH, SIXTEENTH)),
        ),
        markers=markers or MarkerSequence(),
        label="marker_runs",
    )


@dataclass(frozen=True)
class MoranSpec:
    schedule: RatioSchedule
    d: int = 1
    name: str = ""

    kind: ClassVar[str] = "moran"

    def level_at(self, k: int) -> Level:
        return self.schedule.level_at(k)

    def c_star(self) -> Ratio:
        return self.schedule.c_star()

    @property
    def ambient_dimension(self) -> int:
        return self.d


@dataclass(frozen=True)
class GeometricPerturbation:
    """a_k = A * gamma^k."""

    amplitude: Ratio
    decay: Ratio

    kind: ClassVar[str] = "geometric"

    def __post_init__(self):
        object.__setattr__(self, "amplitude", as_ratio(self.amplitude))
        object.__setattr__(self, "decay", as_ratio(self.decay))

    def at(self, k: int) -> Ratio:
        return self.amplitude * self.decay**k

    def worst_on(self, ks: Sequence[int]) -> Ratio:
        return self.at(int(min(ks))) if len(ks) else Fraction(0)

    def tail_bound(self, k: int) -> Ratio:
        return self.at(k)

    def as_array(self, k_lo: int, k_hi: int) -> np.ndarray:
        ks = np.arange(k_lo, k_hi + 1, dtype=float)
        return float(self.amplitude) * np.power(float(self.decay), ks)


@dataclass(frozen=True)
class FinitePerturbation:
    """a_1, ..., a_L followed by a zero tail."""

    values: Tuple[Ratio, ...] = ()

    kind: ClassVar[str] = "finite"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(as_ratio(a) for a in self.values))

    def at(self, k: int) -> Ratio:
        return self.values[k - 1] if 1 <= k <= len(self.values) else Fraction(0)

    def worst_on(self, ks: Sequence[int]) -> Ratio:
        return max((self.at(int(k)) for k in ks if k <= len(self.values)), default=Fraction(0))

    def tail_bound(self, k: int) -> Ratio:
        return max(self.values[k - 1:], default=Fraction(0))

    def as_array(self, k_lo: int, k_hi: int) -> np.ndarray:
        return np.array([float(self.at(k)) for k in range(k_lo, k_hi + 1)], dtype=float)


Perturbation = Union[GeometricPerturbation, FinitePerturbation]


@dataclass(frozen=True)
class CantorLikeSpec:
    """One ratio per level; children may deviate within c_k(1 +- a_k)."""

    schedule: RatioSchedule
    perturbation: Perturbation = field(default_factory=FinitePerturbation)
    name: str = ""

    kind: ClassVar[str] = "cantor_like"
    d: ClassVar[int] = 1

    def level_at(self, k: int) -> Level:
        return self.schedule.level_at(k)

    def ratio_at(self, k: int) -> Ratio:
        return self.schedule.level_at(k).ratios[0]

    def c_star(self) -> Ratio:
        return self.schedule.c_star()

    def as_moran(self) -> MoranSpec:
        """Nominal construction with every a_k = 0."""
        return MoranSpec(schedule=self.schedule, d=1, name=self.name)


AnySpec = Union[MoranSpec, CantorLikeSpec]


def c_star(spec: AnySpec) -> Ratio:
    """Exact infimum of all contraction ratios over the finite presentation."""
    return spec.c_star()


def level_at(schedule: RatioSchedule, k: int) -> Tuple[int, Tuple[Ratio, ...]]:
    level = schedule.level_at(k)
    return level.n, level.ratios


def spec_fingerprint(spec: AnySpec) -> str:
    digest = hashlib.sha256(repr(spec).encode("utf-8")).hexdigest()
    return digest[:12]
