from fractions import Fraction
from pathlib import Path

import pytest

from dimensions.specs import (
    CantorLikeSpec,
    GeometricPerturbation,
    Level,
    MoranSpec,
    PeriodicSchedule,
    UniformSchedule,
    marker_runs_schedule,
)

SPEC_DIR = Path(__file__).resolve().parent.parent / "specs"


@pytest.fixture(autouse=True)
def output_dir(settings, tmp_path):
    out = tmp_path / "out"
    settings.MORANLAB = {**settings.MORANLAB, "OUTPUT_DIR": out}
    return out


@pytest.fixture
def spec_dir():
    return SPEC_DIR


@pytest.fixture
def middle_third():
    return MoranSpec(UniformSchedule(2, Fraction(1, 3)), name="middle-third")


@pytest.fixture
def full_interval():
    return MoranSpec(UniformSchedule(2, Fraction(1, 2)), name="full-interval")


@pytest.fixture
def alternating():
    cycle = (Level.uniform(2, Fraction(1, 4)), Level.uniform(2, Fraction(1, 8)))
    return MoranSpec(PeriodicSchedule(prefix=(), cycle=cycle), name="alternating")


@pytest.fixture
def marker_runs():
    return MoranSpec(marker_runs_schedule(), name="marker_runs")


@pytest.fixture
def cantor_alternating(alternating):
    return CantorLikeSpec(
        schedule=alternating.schedule,
        perturbation=GeometricPerturbation(Fraction(1, 10), Fraction(1, 2)),
        name="cantor-alternating",
    )


@pytest.fixture
def cantor_marker_runs(marker_runs):
    return CantorLikeSpec(
        schedule=marker_runs.schedule,
        perturbation=GeometricPerturbation(Fraction(1, 10), Fraction(1, 2)),
        name="cantor-marker-runs",
    )
