"""
RunConfig - validated parameters of one CLI invocation.

Grids are given as comma lists of ratios ("1/9,1/27,0.01", "3^-2") or as exponent
ladders ("3^-2..3^-6").
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from django.conf import settings

from dimensions.specs import as_ratio
from dimensions.validation.errors import ConfigError, format_schema_errors

POWER = re.compile(r"^\s*(?P<base>[0-9.]+(?:/[0-9]+)?)\s*\^\s*(?P<exp>[-+]?[0-9]+)\s*$")
LADDER = re.compile(r"^\s*(?P<base>[0-9.]+(?:/[0-9]+)?)\s*\^\s*(?P<lo>[-+]?[0-9]+)\s*\.\.\s*(?:(?P=base)\s*\^\s*)?(?P<hi>[-+]?[0-9]+)\s*$")

COMMANDS = ("validate", "dims", "cutset", "witness", "empirical", "scale", "compare", "realize")
FORMATS = ("text", "csv")


def parse_value(text: str) -> float:
    match = POWER.match(text)
    if match:
        return float(as_ratio(match["base"]) ** int(match["exp"]))
    return float(as_ratio(text.strip()))


def parse_grid(text: Optional[str], name: str = "grid") -> Tuple[float, ...]:
    """'1/9,1/27' -> (0.111.., 0.037..); '3^-2..3^-4' -> (1/9, 1/27, 1/81)."""
    if text is None or not str(text).strip():
        return ()
    try:
        match = LADDER.match(str(text))
        if match:
            base = as_ratio(match["base"])
            lo, hi = int(match["lo"]), int(match["hi"])
            step = 1 if hi >= lo else -1
            return tuple(float(base**e) for e in range(lo, hi + step, step))
        return tuple(parse_value(item) for item in str(text).split(",") if item.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(
            f"--{name.replace('_', '-')} is not a grid: {text!r}",
            fields=format_schema_errors({name: [f"Invalid format: {exc}"]}),
        )


def _strictly_monotone(values: Tuple[float, ...]) -> bool:
    pairs = list(zip(values, values[1:]))
    return all(a > b for a, b in pairs) or all(a < b for a, b in pairs)


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_path: Path
    fmt: str = "text"
    tol: float = 1e-12
    m_max: int = 64
    k_max: int = 4096
    depth: Optional[int] = None
    rho_grid: Tuple[float, ...] = ()
    r_grid: Tuple[float, ...] = ()
    placement: str = "uniform_gap"
    gamma: float = 1.0
    seed: Optional[int] = None
    out: Optional[Path] = None
    workers: int = 1
    pre_horizon: Optional[int] = None
    tail_fraction: Fraction = Fraction(1, 8)
    delta: Optional[Fraction] = None
    word: str = ""
    start: int = 0
    s: Optional[float] = None
    epsilon: float = 0.1
    k_lo: int = 0
    k_hi: Optional[int] = None
    q: Optional[int] = None
    centers: int = 8
    intervals: Optional[Path] = None
    scale_csv: Optional[Path] = None

    @classmethod
    def from_options(cls, command: str, options: Mapping[str, Any]) -> "RunConfig":
        defaults = settings.MORANLAB

        def pick(key: str, default: Any = None) -> Any:
            value = options.get(key)
            return default if value is None else value

        def path(key: str) -> Optional[Path]:
            value = options.get(key)
            return Path(value) if value else None

        delta = options.get("delta")
        try:
            delta = as_ratio(delta) if delta is not None else None
            tail_fraction = as_ratio(pick("tail_fraction", defaults["TAIL_FRACTION"]))
        except (ValueError, ZeroDivisionError, TypeError) as exc:
            raise ConfigError(f"not a ratio: {exc}", fields=format_schema_errors({"delta": [str(exc)]}))

        config = cls(
            command=command,
            input_path=Path(options["spec"]),
            fmt=pick("format", "text"),
            tol=pick("tol", defaults["SOLVER_TOL"]),
            m_max=pick("m_max", defaults["M_MAX"]),
            k_max=pick("k_max", defaults["K_MAX"]),
            depth=options.get("depth"),
            rho_grid=parse_grid(options.get("rho_grid"), "rho_grid"),
            r_grid=parse_grid(options.get("r_grid"), "r_grid"),
            placement=pick("placement", "uniform_gap"),
            gamma=pick("gamma", 1.0),
            seed=options.get("seed"),
            out=path("out"),
            workers=pick("workers", 1),
            pre_horizon=pick("pre_horizon", defaults["PRE_HORIZON"]),
            tail_fraction=tail_fraction,
            delta=delta,
            word=pick("word", ""),
            start=pick("start", 0),
            s=options.get("s"),
            epsilon=pick("epsilon", 0.1),
            k_lo=pick("k_lo", 0),
            k_hi=options.get("k_hi"),
            q=options.get("q"),
            centers=pick("centers", defaults["CENTERS_PER_R"]),
            intervals=path("intervals"),
            scale_csv=path("scale_csv"),
        )
        config.validate()
        return config

    def validate(self) -> None:
        errors: Dict[str, List[str]] = {}

        def require(name: str, ok: bool, message: str) -> None:
            if not ok:
                errors.setdefault(name, []).append(message)

        require("command", self.command in COMMANDS, f"Invalid choice: {self.command}")
        require("format", self.fmt in FORMATS, f"Invalid choice: {self.fmt}")
        require("tol", 0 < self.tol < 1, "Must be in range (0, 1)")
        require("m_max", self.m_max >= 1, "Must be positive")
        require("k_max", self.k_max >= 0, "Must not be negative")
        require("workers", self.workers >= 1, "Must be positive")
        require("centers", self.centers >= 1, "Must be positive")
        require("epsilon", self.epsilon > 0, "Must be positive")
        require("gamma", 0 < self.gamma <= 1, "Must be in range (0, 1]")
        require("tail_fraction", 0 < self.tail_fraction < 1, "Must be in range (0, 1)")
        require("start", self.start >= 0, "Must not be negative")
        require("k_lo", self.k_lo >= 0, "Must not be negative")
        if self.depth is not None:
            require("depth", self.depth >= 0, "Must not be negative")
        if self.pre_horizon is not None:
            require("pre_horizon", self.pre_horizon >= 1, "Must be positive")
        if self.k_hi is not None:
            require("k_hi", self.k_hi > self.k_lo, "Must be greater than k_lo")
        if self.delta is not None:
            require("delta", self.delta > 0, "Must be positive")
        if self.s is not None:
            require("s", self.s >= 0, "Must not be negative")
        require("rho_grid", all(0 < rho < 1 for rho in self.rho_grid), "Must be in range (0, 1)")
        require("rho_grid", _strictly_monotone(self.rho_grid), "Must be strictly monotone")
        require("r_grid", all(0 < R <= 1 for R in self.r_grid), "Must be in range (0, 1]")
        require("r_grid", _strictly_monotone(self.r_grid), "Must be strictly monotone")

        if errors:
            fields = format_schema_errors(errors)
            raise ConfigError(f"Invalid run configuration: {fields[0]}", fields=fields)

    def output_dir(self) -> Path:
        return self.out or Path(settings.MORANLAB["OUTPUT_DIR"])
