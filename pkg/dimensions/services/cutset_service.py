"""
Cutset Service - finite-word machinery over a spec.

Responsibilities:
- Words and their contraction products c_v (kept in log space)
- δ-cutsets A_u(δ) = {u*v : c_v <= δ < c_{v^-}}
- the cutset measure identity Σ c_v^s / Π Σ c^s = 1 as a residual
- dyadic classes B_p = {j : 2^{-p-1} < c_j <= 2^{-p}} of a window
- lower-bound witnesses (q, #B_q) with 2^{-εq}(1 - 2^{-ε}) <= #B_q 2^{-qs}

Sandwich comparisons c_v <= δ run on log values; words within a guard band of δ
are re-checked with exact rational products when the spec and δ are rational.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from dimensions.specs import AnySpec, Level, Ratio, format_ratio
from dimensions.validation.errors import BudgetExceededError, ErrorCode, PreconditionError

from .dimension_service import DEFAULT_TOL, MoranEquation, solve_skk

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 10_000_000
LOG_GUARD = 1e-14
LOG2_GUARD = 1e-9


@dataclass(frozen=True)
class Word:
    """Letters (u_{k+1}, ..., u_{k'}) read from level start+1 on."""

    start: int = 0
    letters: Tuple[int, ...] = ()
    log_c: float = 0.0

    @classmethod
    def build(cls, spec: AnySpec, letters: Sequence[int], start: int = 0) -> "Word":
        if start < 0:
            raise PreconditionError(f"word start level must be >= 0, got {start}")
        log_c = 0.0
        for offset, letter in enumerate(letters):
            level = spec.level_at(start + offset + 1)
            if not 1 <= letter <= level.n:
                raise PreconditionError(
                    f"letter {letter} at level {start + offset + 1} outside 1..{level.n}"
                )
            log_c += math.log(level.ratios[letter - 1])
        return cls(start=start, letters=tuple(int(letter) for letter in letters), log_c=log_c)

    @classmethod
    def parse(cls, spec: AnySpec, text: str, start: int = 0) -> "Word":
        """"1.2.1" -> letters (1, 2, 1); "" or "-" -> empty word."""
        text = text.strip()
        if text in ("", "-", "∅"):
            return cls.build(spec, (), start)
        try:
            letters = [int(part) for part in text.split(".")]
        except ValueError:
            raise PreconditionError(f"word must be dot-separated letters, got {text!r}")
        return cls.build(spec, letters, start)

    @property
    def end(self) -> int:
        return self.start + len(self.letters)

    @property
    def c(self) -> float:
        return math.exp(self.log_c)

    def exact_c(self, spec: AnySpec) -> Optional[Fraction]:
        return exact_product(spec, self.start, self.letters)

    def __str__(self) -> str:
        return ".".join(str(letter) for letter in self.letters) or "-"


def exact_product(spec: AnySpec, start: int, letters: Sequence[int]) -> Optional[Fraction]:
    product = Fraction(1)
    for offset, letter in enumerate(letters):
        ratio = spec.level_at(start + offset + 1).ratios[int(letter) - 1]
        if not isinstance(ratio, Fraction):
            return None
        product *= ratio
    return product


@dataclass(frozen=True, eq=False)
class Cutset:
    base: Word
    delta: Ratio
    letters: np.ndarray
    depths: np.ndarray
    log_c: np.ndarray
    levels: Tuple[Level, ...]
    near_ties: int = 0
    volume_ok: bool = True

    @property
    def size(self) -> int:
        return int(len(self.depths))

    def __len__(self) -> int:
        return self.size

    def suffixes(self) -> Iterator[Tuple[int, ...]]:
        for row, depth in zip(self.letters, self.depths):
            yield tuple(int(letter) for letter in row[:depth])

    def members(self) -> Iterator[Word]:
        for suffix, log_c in zip(self.suffixes(), self.log_c):
            yield Word(start=self.base.end, letters=suffix, log_c=float(log_c))

    def rows(self) -> List[Dict[str, object]]:
        return [
            {"word": ".".join(map(str, suffix)), "depth": len(suffix), "log_c": repr(float(log_c))}
            for suffix, log_c in zip(self.suffixes(), self.log_c)
        ]


@dataclass(frozen=True)
class DyadicClasses:
    k_lo: int
    k_hi: int
    counts: Dict[int, int]
    min_log2_c: Dict[int, float]
    total: int

    @property
    def p_min(self) -> int:
        return min(self.counts)

    def rows(self) -> List[Dict[str, object]]:
        return [{"p": p, "count": count} for p, count in sorted(self.counts.items())]


@dataclass(frozen=True)
class Witness:
    q: int
    count: int
    lhs_log2: float
    rhs_log2: float

    @property
    def holds(self) -> bool:
        return self.lhs_log2 <= self.rhs_log2


@dataclass(frozen=True)
class WitnessScales:
    """Scales R = c_i (i = 1...1 of length k_lo) and r = min_{j in B_q} c_{i*j}, in log form."""

    q: int
    count: int
    log_R: float
    log_r: float

    @property
    def ratio_log2(self) -> float:
        return (self.log_r - self.log_R) / math.log(2)


class CutsetService:
    @staticmethod
    def _delta_in_range(spec: AnySpec, delta: Ratio) -> None:
        lower = spec.c_star()
        if not 0 < delta < lower:
            raise PreconditionError(
                f"δ = {format_ratio(delta)} must lie in (0, c_*) = (0, {format_ratio(lower)})",
                code=ErrorCode.DELTA_OUT_OF_RANGE,
            )

    @classmethod
    def cutset(
        cls,
        spec: AnySpec,
        u: Optional[Word] = None,
        delta: Ratio = Fraction(1, 4),
        budget: int = DEFAULT_BUDGET,
    ) -> Cutset:
        u = u or Word()
        cls._delta_in_range(spec, delta)
        exact = spec.schedule.is_exact and isinstance(delta, Fraction)
        log_delta = math.log(delta)

        open_log = np.zeros(1)
        open_letters = np.zeros((1, 0), dtype=np.int32)
        found_letters: List[np.ndarray] = []
        found_log: List[np.ndarray] = []
        levels: List[Level] = []
        near_ties = 0
        total = 0

        while open_log.size:
            level = spec.level_at(u.end + len(levels) + 1)
            levels.append(level)
            n = level.n
            child_log = (open_log[:, None] + level.log_ratios()[None, :]).ravel()
            child_letters = np.hstack([
                np.repeat(open_letters, n, axis=0),
                np.tile(np.arange(1, n + 1, dtype=np.int32), len(open_log))[:, None],
            ])

            member = child_log <= log_delta - LOG_GUARD
            ties = np.flatnonzero(np.abs(child_log - log_delta) <= LOG_GUARD)
            if ties.size:
                near_ties += int(ties.size)
                for row in ties:
                    product = exact_product(spec, u.end, child_letters[row]) if exact else None
                    member[row] = product <= delta if product is not None else child_log[row] <= log_delta

            total += int(member.sum())
            if total > budget or (~member).sum() > budget:
                raise BudgetExceededError(
                    f"cutset at δ = {format_ratio(delta)} exceeds the enumeration budget of {budget} words",
                    bound=budget,
                    required=total,
                )
            found_letters.append(child_letters[member])
            found_log.append(child_log[member])
            open_log = child_log[~member]
            open_letters = child_letters[~member]

        depth = len(levels)
        padded = np.zeros((total, depth), dtype=np.int32)
        depths = np.zeros(total, dtype=np.int64)
        position = 0
        for group in found_letters:
            padded[position:position + len(group), :group.shape[1]] = group
            depths[position:position + len(group)] = group.shape[1]
            position += len(group)
        log_c = np.concatenate(found_log) if found_log else np.zeros(0)

        # depth-first order is lexicographic order of the (prefix-free) words
        order = np.lexsort(padded[:, ::-1].T) if depth else np.arange(total)
        d = spec.d
        volume_ok = bool(
            math.log(total) + d * (math.log(spec.c_star()) + log_delta) <= 1e-12
        ) if total else True
        if not volume_ok:
            logger.warning(f"cutset of {total} words breaks count·(c_*δ)^d <= 1")
        if near_ties:
            logger.info(f"cutset: {near_ties} near-tie comparison(s) resolved {'exactly' if exact else 'in log space'}")

        result = Cutset(
            base=u,
            delta=delta,
            letters=padded[order],
            depths=depths[order],
            log_c=log_c[order],
            levels=tuple(levels),
            near_ties=near_ties,
            volume_ok=volume_ok,
        )
        logger.info(f"cutset at δ = {format_ratio(delta)} from word {u}: {result.size} members, depth <= {depth}")
        return result

    @classmethod
    def identity_residual(
        cls,
        spec: AnySpec,
        u: Optional[Word] = None,
        delta: Ratio = Fraction(1, 4),
        s: float = 0.0,
        budget: int = DEFAULT_BUDGET,
        cut: Optional[Cutset] = None,
    ) -> float:
        """|Σ_v exp(s log c_v - Σ_p log Σ_q c_{p,q}^s) - 1| over the cutset."""
        cut = cut or cls.cutset(spec, u, delta, budget)
        equation = MoranEquation(cut.levels, spec.d)
        per_level = equation.level_terms(np.array([s]))[0]
        denominators = np.concatenate([[0.0], np.cumsum(per_level)])
        weights = np.exp(s * cut.log_c - denominators[cut.depths])
        return abs(math.fsum(weights.tolist()) - 1.0)

    @classmethod
    def _window_log2(cls, spec: AnySpec, k_lo: int, k_hi: int, budget: int) -> Tuple[np.ndarray, List[Level]]:
        if k_lo < 0 or k_lo >= k_hi:
            raise PreconditionError(f"window needs 0 <= k_lo < k_hi, got ({k_lo}, {k_hi})")
        levels = spec.schedule.levels(k_lo + 1, k_hi)
        required = math.prod(level.n for level in levels)
        if required > budget:
            raise BudgetExceededError(
                f"window ({k_lo}, {k_hi}] has {required} words, above the enumeration budget of {budget}",
                bound=budget,
                required=required,
            )
        log2_c = np.zeros(1)
        for level in levels:
            log2_c = (log2_c[:, None] + level.log_ratios()[None, :] / math.log(2)).ravel()
        return log2_c, levels

    @classmethod
    def dyadic_classes(cls, spec: AnySpec, k_lo: int, k_hi: int, budget: int = DEFAULT_BUDGET) -> DyadicClasses:
        log2_c, levels = cls._window_log2(spec, k_lo, k_hi, budget)
        x = -log2_c
        classes = np.floor(x).astype(np.int64)

        nearest = np.round(x)
        near = np.flatnonzero(np.abs(x - nearest) <= LOG2_GUARD)
        if near.size:
            shape = tuple(level.n for level in levels)
            keys, first = np.unique(np.round(x[near], 9), return_index=True)
            resolved = {}
            for key, index in zip(keys, near[first]):
                p0 = int(round(key))
                letters = [int(i) + 1 for i in np.unravel_index(int(index), shape)]
                product = exact_product(spec, k_lo, letters)
                if product is None:
                    resolved[key] = p0
                else:
                    resolved[key] = p0 if product <= Fraction(1, 2**p0) else p0 - 1
            classes[near] = [resolved[key] for key in np.round(x[near], 9)]

        found, counts = np.unique(classes, return_counts=True)
        minima = {int(p): float(log2_c[classes == p].min()) for p in found}
        result = DyadicClasses(
            k_lo=k_lo,
            k_hi=k_hi,
            counts={int(p): int(c) for p, c in zip(found, counts)},
            min_log2_c=minima,
            total=int(len(classes)),
        )
        logger.info(f"dyadic classes of window ({k_lo}, {k_hi}]: {len(result.counts)} nonempty, p_min={result.p_min}")
        return result

    @classmethod
    def lower_bound_witness(
        cls,
        spec: AnySpec,
        k_lo: int,
        k_hi: int,
        s: float,
        epsilon: float,
        tol: float = DEFAULT_TOL,
        budget: int = DEFAULT_BUDGET,
    ) -> Optional[Witness]:
        """Smallest q >= p_min with 2^{-εq}(1 - 2^{-ε}) <= #B_q 2^{-qs}, checked in log2 form."""
        if epsilon <= 0:
            raise PreconditionError(f"ε must be positive, got {epsilon}")
        root = solve_skk(spec, k_lo, k_hi, tol)
        if s >= root:
            raise PreconditionError(f"s = {s} is not below s_(k_lo,k_hi) = {root:.12f}")

        classes = cls.dyadic_classes(spec, k_lo, k_hi, budget)
        offset = math.log2(1 - 2 ** (-epsilon))
        for q in sorted(classes.counts):
            count = classes.counts[q]
            lhs = -epsilon * q + offset
            rhs = math.log2(count) - q * s
            if lhs <= rhs:
                return Witness(q=q, count=count, lhs_log2=lhs, rhs_log2=rhs)
        logger.error(f"no witness in window ({k_lo}, {k_hi}] for s={s}, ε={epsilon}")
        return None

    @classmethod
    def witness_scales(
        cls,
        spec: AnySpec,
        k_lo: int,
        k_hi: int,
        q: int,
        budget: int = DEFAULT_BUDGET,
    ) -> WitnessScales:
        classes = cls.dyadic_classes(spec, k_lo, k_hi, budget)
        if q not in classes.counts:
            raise PreconditionError(f"class B_{q} is empty in window ({k_lo}, {k_hi}]")
        log_R = sum(math.log(level.ratios[0]) for level in spec.schedule.levels(1, k_lo)) if k_lo else 0.0
        log_r = log_R + classes.min_log2_c[q] * math.log(2)
        return WitnessScales(q=q, count=classes.counts[q], log_R=log_R, log_r=log_r)


cutset = CutsetService.cutset
cutset_identity_residual = CutsetService.identity_residual
dyadic_classes = CutsetService.dyadic_classes
lower_bound_witness = CutsetService.lower_bound_witness
witness_scales = CutsetService.witness_scales
