import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings as hypothesis_settings, strategies as st

from dimensions.services.dimension_service import (
    DimensionService,
    MoranEquation,
    cumulative_counts,
    log_delta,
    solve_skk,
)
from dimensions.specs import Level, MoranSpec, PeriodicSchedule
from dimensions.validation.errors import ErrorCode, PreconditionError, SolverError
from tests.factories import MoranSpecFactory, UniformScheduleFactory, periodic_specs

LOG2_3 = math.log(2) / math.log(3)


def alternating_theta(m):
    return m / (2 * math.ceil(m / 2) + 3 * (m // 2))


def grid_root(levels, d=1):
    """Largest s on a 1e-4 grid, then a 1e-7 grid, with the plain product Δ(s) >= 1."""

    def delta(s):
        product = np.ones_like(s)
        for level in levels:
            product *= np.power.outer(np.array([float(c) for c in level.ratios]), s).sum(axis=0)
        return product

    coarse = np.linspace(0.0, d, 10_000 * d + 1)
    last = int(np.nonzero(delta(coarse) >= 1)[0][-1])
    fine = np.linspace(coarse[last], coarse[min(last + 1, coarse.size - 1)], 1001)
    return float(fine[np.nonzero(delta(fine) >= 1)[0][-1]])


class TestMoranEquation:
    def test_uniform_root(self):
        equation = MoranEquation([Level.uniform(2, "1/3")])
        root = equation.solve(np.array([[5]]))[0]
        assert abs(root - LOG2_3) < 1e-11

    def test_closed_form_matches_bisection(self):
        equation = MoranEquation([Level.uniform(2, "1/4"), Level.uniform(3, "1/8")])
        counts = np.array([[3, 1], [0, 4], [7, 2]])
        np.testing.assert_allclose(equation.solve(counts), equation.closed_form(counts), atol=1e-11)

    def test_mixed_level_root(self):
        # 1/2^s + 1/4^s = 1 at s = log2(golden ratio)
        equation = MoranEquation([Level((Fraction(1, 2), Fraction(1, 4)))])
        root = equation.solve(np.array([[1]]))[0]
        assert abs(root - math.log2((1 + math.sqrt(5)) / 2)) < 1e-11

    def test_no_bracket(self):
        equation = MoranEquation([Level.uniform(2, "2/3")])
        with pytest.raises(SolverError):
            equation.solve(np.array([[2]]))

    def test_cumulative_counts(self):
        table = cumulative_counts(np.array([0, 1, 0, 0]), 2)
        assert table.tolist() == [[0, 0], [1, 0], [1, 1], [2, 1], [3, 1]]


class TestWindowDimensions:
    def test_log_delta_sign(self, middle_third):
        assert log_delta(middle_third, 0, 4, 0.5) > 0
        assert log_delta(middle_third, 0, 4, 0.7) < 0
        assert abs(log_delta(middle_third, 0, 4, LOG2_3)) < 1e-12

    def test_solve_skk(self, alternating):
        assert abs(solve_skk(alternating, 0, 1) - 0.5) < 1e-11
        assert abs(solve_skk(alternating, 1, 2) - 1 / 3) < 1e-11
        assert abs(solve_skk(alternating, 0, 2) - 0.4) < 1e-11

    def test_empty_window(self, middle_third):
        with pytest.raises((PreconditionError, SolverError)):
            solve_skk(middle_third, 3, 3)

    def test_bad_tolerance(self, middle_third):
        with pytest.raises(PreconditionError):
            solve_skk(middle_third, 0, 2, tol=0)


windows = st.tuples(st.integers(0, 4), st.integers(1, 6))


class TestWindowProperties:
    @hypothesis_settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(spec=periodic_specs(), window=windows)
    def test_root_solves_equation(self, spec, window):
        k, length = window
        root = solve_skk(spec, k, k + length)
        assert 0 < root <= 1
        assert abs(math.expm1(log_delta(spec, k, k + length, root))) <= 1e-9

    @hypothesis_settings(max_examples=100, deadline=None)
    @given(spec=periodic_specs(), window=windows)
    def test_log_delta_strictly_decreasing(self, spec, window):
        k, length = window
        values = [log_delta(spec, k, k + length, s) for s in np.linspace(0.0, 1.0, 21)]
        assert all(a > b for a, b in zip(values, values[1:]))
        log_n = sum(math.log(level.n) for level in spec.schedule.levels(k + 1, k + length))
        assert values[0] == pytest.approx(log_n)

    @hypothesis_settings(max_examples=100, deadline=None)
    @given(spec=periodic_specs(), k=st.integers(0, 4), first=st.integers(1, 5), second=st.integers(1, 5))
    def test_split_window_root_between_parts(self, spec, k, first, second):
        whole = solve_skk(spec, k, k + first + second)
        left = solve_skk(spec, k, k + first)
        right = solve_skk(spec, k + first, k + first + second)
        assert min(left, right) - 1e-9 <= whole <= max(left, right) + 1e-9

    @hypothesis_settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(spec=periodic_specs(), window=st.tuples(st.integers(0, 6), st.integers(1, 12)))
    def test_root_matches_grid_search(self, spec, window):
        k, length = window
        levels = spec.schedule.levels(k + 1, k + length)
        assert abs(solve_skk(spec, k, k + length) - grid_root(levels)) <= 1e-6

    @hypothesis_settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(spec=periodic_specs(), m=st.integers(1, 6))
    def test_theta_matches_grid_search(self, spec, m):
        starts = spec.schedule.exact_window_starts()
        expected = max(grid_root(spec.schedule.levels(k + 1, k + m)) for k in range(starts))
        result = DimensionService.theta(spec, m, k_max=0)
        assert result.exact
        assert abs(result.theta - expected) <= 1e-6

    def test_alternating_theta_matches_grid_search(self, alternating):
        for m in range(1, 9):
            expected = max(grid_root(alternating.schedule.levels(k + 1, k + m)) for k in range(2))
            assert abs(DimensionService.theta(alternating, m, k_max=0).theta - expected) <= 1e-6


class TestAssouadMoran:
    def test_uniform(self, middle_third):
        report = DimensionService.assouad_moran(middle_third, m_max=16, k_max=0, pre_horizon=64)
        assert abs(report.s_lower - LOG2_3) < 1e-9
        assert abs(report.s_upper - LOG2_3) < 1e-9
        assert abs(report.s_assouad - LOG2_3) < 1e-9
        assert report.exact_sup
        assert report.appears_regular
        assert report.warnings == ()

    def test_alternating_theta_trace(self, alternating):
        trace = DimensionService.theta_trace(alternating, m_max=100, k_max=0)
        for result in trace:
            assert abs(result.theta - alternating_theta(result.m)) < 1e-9
            assert result.exact
            assert result.starts_scanned == 2

    def test_alternating_theta_is_attained_on_quarter_start(self, alternating):
        result = DimensionService.theta(alternating, 3, k_max=0)
        assert result.argmax_k == 0
        assert abs(result.theta - 3 / 7) < 1e-9

    def test_alternating_report(self, alternating):
        report = DimensionService.assouad_moran(alternating, m_max=100, k_max=0, pre_horizon=400)
        assert abs(report.s_assouad - 0.4) < 1e-3
        assert abs(report.s_lower - 0.4) < 1e-3
        assert abs(report.s_upper - 51 / 127) < 1e-9
        assert any("exceeds s** + gap" in warning for warning in report.warnings)
        running = report.running_infimum
        assert all(a >= b for a, b in zip(running, running[1:]))
        assert report.horizon_m == 100

    def test_workers_do_not_change_results(self, alternating):
        serial = DimensionService.theta_trace(alternating, m_max=40, k_max=0)
        threaded = DimensionService.theta_trace(alternating, m_max=40, k_max=0, workers=4)
        assert [r.theta for r in serial] == [r.theta for r in threaded]

    def test_marker_runs_theta(self, marker_runs):
        trace = DimensionService.theta_trace(marker_runs, m_max=8, k_max=400000)
        for result in trace:
            assert abs(result.theta - 0.5) < 1e-9
            assert not result.exact

    def test_marker_runs_short_horizon_warns(self, marker_runs):
        report = DimensionService.assouad_moran(marker_runs, m_max=8, k_max=1000, pre_horizon=200)
        assert not report.exact_sup
        assert any("structural horizon 362888" in warning for warning in report.warnings)

    def test_marker_runs_pre_dimensions(self, marker_runs):
        pre = DimensionService.pre_dimensions(marker_runs, 40000)
        assert 0.250 <= pre.s_lower <= 0.262
        assert 0.315 <= pre.s_upper <= 0.334
        assert (pre.m_lo, pre.m_hi) == (5000, 40000)

    def test_tail_fraction(self, alternating):
        pre = DimensionService.pre_dimensions(alternating, 80, tail_fraction=Fraction(1, 2))
        assert pre.m_lo == 40
        assert pre.trace[0][0] == 40

    def test_higher_dimension(self):
        spec = MoranSpecFactory(schedule=UniformScheduleFactory(n=4, c="1/3"), d=2)
        report = DimensionService.assouad_moran(spec, m_max=8, k_max=0, pre_horizon=16)
        assert abs(report.s_assouad - math.log(4) / math.log(3)) < 1e-9

    def test_bad_horizons(self, middle_third):
        with pytest.raises(PreconditionError):
            DimensionService.theta_trace(middle_third, m_max=0, k_max=0)
        with pytest.raises(PreconditionError):
            DimensionService.theta_trace(middle_third, m_max=4, k_max=-1)


class TestCantorFormulas:
    def test_uniform_corollary_matches_moran(self, alternating):
        general = DimensionService.assouad_moran(alternating, m_max=30, k_max=0, pre_horizon=60)
        closed = DimensionService.uniform_corollary(alternating, m_max=30, k_max=0, pre_horizon=60)
        assert abs(general.s_assouad - closed.s_assouad) < 1e-9
        assert closed.method == "uniform"

    def test_cantor_ignores_perturbation(self, cantor_alternating, alternating):
        report = DimensionService.estimate(cantor_alternating, 30, 0, pre_horizon=60, workers=2)
        nominal = DimensionService.estimate(alternating, 30, 0, pre_horizon=60)
        assert report.method == "cantor"
        assert abs(report.s_assouad - nominal.s_assouad) < 1e-9

    def test_corollary_needs_single_ratio(self):
        schedule = PeriodicSchedule(prefix=(), cycle=(Level((Fraction(1, 2), Fraction(1, 4))),))
        with pytest.raises(PreconditionError) as exc_info:
            DimensionService.uniform_corollary(MoranSpec(schedule), 4, 0)
        assert exc_info.value.code == ErrorCode.NON_UNIFORM_LEVELS.value
