from fractions import Fraction

import factory
from hypothesis import strategies as st

from dimensions.specs import (
    CantorLikeSpec,
    GeometricPerturbation,
    Level,
    MoranSpec,
    PeriodicSchedule,
    UniformSchedule,
)


class LevelFactory(factory.Factory):
    class Meta:
        model = Level

    ratios = (Fraction(1, 3), Fraction(1, 3))


class UniformScheduleFactory(factory.Factory):
    class Meta:
        model = UniformSchedule

    n = 2
    c = Fraction(1, 3)


class PeriodicScheduleFactory(factory.Factory):
    class Meta:
        model = PeriodicSchedule

    prefix = ()
    cycle = factory.LazyFunction(
        lambda: (Level.uniform(2, Fraction(1, 4)), Level.uniform(2, Fraction(1, 8)))
    )


class MoranSpecFactory(factory.Factory):
    class Meta:
        model = MoranSpec

    schedule = factory.SubFactory(UniformScheduleFactory)
    d = 1
    name = factory.Sequence(lambda n: f"spec{n}")


class GeometricPerturbationFactory(factory.Factory):
    class Meta:
        model = GeometricPerturbation

    amplitude = Fraction(1, 10)
    decay = Fraction(1, 2)


class CantorLikeSpecFactory(factory.Factory):
    class Meta:
        model = CantorLikeSpec

    schedule = factory.SubFactory(PeriodicScheduleFactory)
    perturbation = factory.SubFactory(GeometricPerturbationFactory)
    name = factory.Sequence(lambda n: f"cantor{n}")


@st.composite
def periodic_specs(draw, max_prefix=2, max_cycle=3):
    """Eventually periodic Moran specs with 2 or 3 pieces of ratio 1/n..1/9 per level."""

    def level():
        n = draw(st.integers(2, 3))
        return Level(tuple(Fraction(1, draw(st.integers(n, 9))) for _ in range(n)))

    prefix = tuple(level() for _ in range(draw(st.integers(0, max_prefix))))
    cycle = tuple(level() for _ in range(draw(st.integers(1, max_cycle))))
    return MoranSpec(PeriodicSchedule(prefix=prefix, cycle=cycle))
