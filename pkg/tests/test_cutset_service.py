import math
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings as hypothesis_settings, strategies as st

from dimensions.services.cutset_service import CutsetService, Word, exact_product
from dimensions.services.dimension_service import solve_skk
from dimensions.specs import Level, MoranSpec, PeriodicSchedule
from dimensions.validation.errors import BudgetExceededError, ErrorCode, PreconditionError
from tests.factories import periodic_specs


class TestWord:
    def test_build_and_parse(self, alternating):
        word = Word.parse(alternating, "1.2")
        assert word.letters == (1, 2)
        assert word.end == 2
        assert abs(word.c - 1 / 32) < 1e-15
        assert word.exact_c(alternating) == Fraction(1, 32)
        assert str(word) == "1.2"
        assert str(Word.parse(alternating, "-")) == "-"

    def test_letter_out_of_range(self, alternating):
        with pytest.raises(PreconditionError):
            Word.parse(alternating, "1.3")

    def test_garbage(self, alternating):
        with pytest.raises(PreconditionError):
            Word.parse(alternating, "a.b")

    def test_exact_product_with_start(self, alternating):
        assert exact_product(alternating, 1, [2, 1]) == Fraction(1, 32)


class TestCutset:
    def test_middle_third_cutset(self, middle_third):
        cut = CutsetService.cutset(middle_third, delta=Fraction(1, 27))
        assert cut.size == 8
        assert set(cut.depths.tolist()) == {3}
        assert cut.near_ties == 8
        assert cut.volume_ok
        assert list(cut.suffixes())[:2] == [(1, 1, 1), (1, 1, 2)]

    def test_mixed_depths(self):
        spec = MoranSpec(PeriodicSchedule(prefix=(), cycle=(Level((Fraction(1, 2), Fraction(1, 4))),)))
        cut = CutsetService.cutset(spec, delta=Fraction(1, 8))
        assert [".".join(map(str, s)) for s in cut.suffixes()] == ["1.1.1", "1.1.2", "1.2", "2.1", "2.2"]
        assert cut.depths.tolist() == [3, 3, 2, 2, 2]

    def test_cutset_from_word(self, alternating):
        base = Word.parse(alternating, "1")
        cut = CutsetService.cutset(alternating, base, Fraction(1, 16))
        assert cut.base == base
        assert all(member.start == 1 for member in cut.members())

    def test_delta_out_of_range(self, middle_third):
        with pytest.raises(PreconditionError) as exc_info:
            CutsetService.cutset(middle_third, delta=Fraction(1, 2))
        assert exc_info.value.code == ErrorCode.DELTA_OUT_OF_RANGE.value

    def test_budget(self, middle_third):
        with pytest.raises(BudgetExceededError) as exc_info:
            CutsetService.cutset(middle_third, delta=Fraction(1, 3**12), budget=1000)
        assert exc_info.value.exit_status == 4

    def test_rows(self, middle_third):
        cut = CutsetService.cutset(middle_third, delta=Fraction(1, 9))
        rows = cut.rows()
        assert rows[0]["word"] == "1.1"
        assert rows[0]["depth"] == 2
        assert float(rows[0]["log_c"]) == pytest.approx(-2 * math.log(3))


class TestCutsetIdentity:
    def test_residual_at_root(self, middle_third):
        s = math.log(2) / math.log(3)
        assert CutsetService.identity_residual(middle_third, None, Fraction(1, 81), s) <= 1e-10

    @hypothesis_settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(
        spec=periodic_specs(),
        denominator=st.integers(10, 2000),
        s=st.floats(0.0, 1.0),
        start=st.integers(0, 3),
    )
    def test_identity_holds(self, spec, denominator, s, start):
        base = Word.build(spec, [1] * start)
        delta = Fraction(1, denominator)
        assert CutsetService.identity_residual(spec, base, delta, s) <= 1e-10


class TestWitness:
    def test_dyadic_classes(self, middle_third):
        classes = CutsetService.dyadic_classes(middle_third, 0, 8)
        assert classes.counts == {12: 256}
        assert classes.p_min == 12
        assert classes.total == 256
        assert classes.rows() == [{"p": 12, "count": 256}]

    def test_exact_dyadic_boundary(self):
        spec = MoranSpec(PeriodicSchedule(prefix=(), cycle=(Level.uniform(2, "1/4"),)))
        classes = CutsetService.dyadic_classes(spec, 0, 3)
        # c = 2^-6 exactly: 2^-7 < c <= 2^-6 puts it in class 6
        assert classes.counts == {6: 8}

    def test_witness_is_sound(self, middle_third):
        root = solve_skk(middle_third, 0, 8)
        witness = CutsetService.lower_bound_witness(middle_third, 0, 8, 0.9 * root, 0.1)
        assert witness is not None
        assert witness.holds
        assert witness.q == 12
        lhs = 2 ** (-0.1 * witness.q) * (1 - 2**-0.1)
        assert lhs <= witness.count * 2 ** (-witness.q * 0.9 * root)

    @hypothesis_settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(
        spec=periodic_specs(),
        k_lo=st.integers(0, 3),
        length=st.integers(1, 5),
        fraction=st.floats(0.05, 0.95),
        epsilon=st.floats(0.05, 1.0),
    )
    def test_witness_found_and_sound(self, spec, k_lo, length, fraction, epsilon):
        k_hi = k_lo + length
        s = fraction * solve_skk(spec, k_lo, k_hi)
        witness = CutsetService.lower_bound_witness(spec, k_lo, k_hi, s, epsilon)
        assert witness is not None
        assert witness.holds
        assert witness.count == CutsetService.dyadic_classes(spec, k_lo, k_hi).counts[witness.q]
        lhs = 2 ** (-epsilon * witness.q) * (1 - 2**-epsilon)
        rhs = witness.count * 2 ** (-witness.q * s)
        assert lhs <= rhs * (1 + 1e-12)

    def test_witness_needs_s_below_root(self, middle_third):
        with pytest.raises(PreconditionError):
            CutsetService.lower_bound_witness(middle_third, 0, 8, 0.7, 0.1)

    def test_witness_scales(self, alternating):
        scales = CutsetService.witness_scales(alternating, 2, 6, 10)
        assert scales.log_R == pytest.approx(math.log(1 / 32))
        assert scales.log_r == pytest.approx(math.log(1 / 32) - 10 * math.log(2))
        assert scales.ratio_log2 == pytest.approx(-10)

    def test_window_budget(self, middle_third):
        with pytest.raises(BudgetExceededError):
            CutsetService.dyadic_classes(middle_third, 0, 20, budget=1000)
