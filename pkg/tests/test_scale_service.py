import math

import numpy as np
import pytest

from dimensions.services.dimension_service import DimensionService
from dimensions.services.scale_service import (
    ScaleFunction,
    ScaleService,
    assouad_from_scale,
    equivalence_check,
    psi,
    range_independence,
    scale_from_cantor,
    tail_extremes,
)
from dimensions.specs import Level, MoranSpec, PeriodicSchedule
from dimensions.validation.errors import ErrorCode, PreconditionError, ScaleRangeError, SpecParseError
from tests.factories import CantorLikeSpecFactory, UniformScheduleFactory

LOG2_3 = math.log(2) / math.log(3)


class TestScaleFunction:
    def test_piece_lookup(self):
        h = ScaleFunction.from_pieces([0.5, 0.25], [0.9, 0.7])
        assert h(0.75) == 0.9
        assert h(0.5) == 0.7
        assert h(0.3) == 0.7
        assert h.value_at(math.log(0.5), side="above")[0] == 0.9
        assert h.depth == 2
        np.testing.assert_allclose(h.breakpoints, [1.0, 0.5, 0.25])

    def test_extended_tail(self):
        h = ScaleFunction.from_pieces([0.5, 0.25], [0.9, 0.7], floor=1e-6)
        assert h(1e-3) == 0.7
        assert h.touches_tail(np.array([math.log(1e-3)]))
        assert not h.touches_tail(np.array([math.log(0.3)]))

    def test_floor(self):
        h = ScaleFunction.from_pieces([0.5, 0.25], [0.9, 0.7], tail="none")
        assert h(0.25) == 0.7
        with pytest.raises(ScaleRangeError):
            h(0.1)
        with pytest.raises(ScaleRangeError):
            h.value_at(0.5)

    def test_snap_to_breakpoint(self):
        h = ScaleFunction.from_pieces([0.5, 0.25], [0.9, 0.7])
        nudged = math.log(0.5) * (1 + 1e-12)
        assert h.value_at(nudged, side="above")[0] == 0.9

    @pytest.mark.parametrize(
        "u, values",
        [
            ([0.0, -1.0, -1.0], [0.5, 0.5]),
            ([0.1, -1.0], [0.5]),
            ([0.0, -1.0], [0.5, 0.6]),
            ([0.0, -1.0], [-0.5]),
        ],
    )
    def test_invalid(self, u, values):
        with pytest.raises(PreconditionError):
            ScaleFunction(np.array(u), np.array(values))

    def test_csv_import(self, alternating):
        h = scale_from_cantor(alternating, 64)
        loaded = ScaleFunction.from_csv(h.to_csv())
        np.testing.assert_array_equal(loaded.log_breakpoints, h.log_breakpoints)
        np.testing.assert_array_equal(loaded.values, h.values)
        assert loaded.floor_log == h.floor_log
        assert loaded.source == h.source

    def test_csv_from_radii(self):
        h = ScaleFunction.from_csv("r,h\n0.5,0.9\n0.25,0.7\n")
        assert h(0.3) == 0.7

    def test_csv_needs_values(self):
        with pytest.raises(SpecParseError):
            ScaleFunction.from_csv("r,log_r\n0.5,-0.69\n")


class TestScaleFromCantor:
    def test_alternating_values(self, alternating):
        h = scale_from_cantor(alternating, 10)
        assert h.values[0] == pytest.approx(0.5)
        assert h.values[1] == pytest.approx(0.4)
        assert h(0.05) == pytest.approx(0.4)
        assert h.log_breakpoints[2] == pytest.approx(math.log(1 / 32))

    def test_needs_single_ratio(self):
        spec = MoranSpec(PeriodicSchedule(prefix=(), cycle=(Level((0.5, 0.25)),)))
        with pytest.raises(PreconditionError) as exc_info:
            scale_from_cantor(spec, 8)
        assert exc_info.value.code == ErrorCode.NON_UNIFORM_LEVELS.value

    def test_tail_extremes(self, alternating):
        h = scale_from_cantor(alternating, 16)
        low, high = tail_extremes(h)
        assert low == pytest.approx(0.4)
        # h_1 = 1/2 is outside the tail; odd depths peak at h_3 = 3/7
        assert high == pytest.approx(3 / 7)

    def test_lowered_floor_extends_last_value(self, alternating):
        h = scale_from_cantor(alternating, 8)
        assert h.tail == "extend_last"
        assert h.floor_log == h.log_breakpoints[-1]
        below = h.log_breakpoints[-1] - 5.0
        with pytest.raises(ScaleRangeError):
            h.value_at(below)
        extended = ScaleFunction(h.log_breakpoints, h.values, floor_log=below - 1.0)
        assert extended.value_at(below)[0] == h.values[-1]
        assert extended.touches_tail(np.array([below]))
        with pytest.raises(PreconditionError):
            ScaleFunction(h.log_breakpoints, h.values, floor_log=below - 1.0, tail="none")
        with pytest.raises(ScaleRangeError):
            ScaleFunction(h.log_breakpoints, h.values, tail="none").value_at(below)


class TestAssouadFromScale:
    def test_constant(self):
        h = ScaleFunction.constant(0.7)
        assert psi(h, 0.1, 0.01) == pytest.approx(0.7, abs=1e-12)
        result = assouad_from_scale(h, [1e-2, 1e-4])
        assert result.estimate == pytest.approx(0.7, abs=1e-9)
        assert not result.touches_tail

    def test_middle_third_matches_formula(self, middle_third):
        h = scale_from_cantor(middle_third, 512)
        result = assouad_from_scale(h, [3.0**-4, 3.0**-16, 3.0**-64])
        formula = DimensionService.assouad_moran(middle_third, 16, 0, pre_horizon=64)
        assert abs(result.estimate - formula.s_assouad) < 1e-9
        assert abs(result.estimate - LOG2_3) < 1e-9

    def test_alternating(self, alternating):
        h = scale_from_cantor(alternating, 4096)
        result = assouad_from_scale(h, [2.0**-100, 2.0**-200, 2.0**-400])
        assert abs(result.estimate - 0.4) <= 0.02
        assert [rho for rho, _, _ in result.t_by_rho] == [2.0**-100, 2.0**-200, 2.0**-400]

    def test_marker_runs(self, marker_runs):
        h = scale_from_cantor(marker_runs, marker_runs.schedule.structural_horizon(8))
        result = assouad_from_scale(h, [4.0**-2, 4.0**-4, 4.0**-8])
        assert abs(result.estimate - 0.5) <= 0.02

    def test_table_uses_r_grid(self, middle_third):
        h = scale_from_cantor(middle_third, 64)
        result = assouad_from_scale(h, [1 / 9], R_grid=[1 / 3, 1 / 27])
        assert [(rho, R) for rho, R, _ in result.table] == [(1 / 9, 1 / 3), (1 / 9, 1 / 27)]
        assert set(result.rows()[0]) == {"rho", "R", "psi"}

    def test_r_grid_restricts_sup(self):
        h = ScaleFunction.from_pieces([0.5, 1e-30], [0.3, 0.9])
        unrestricted = assouad_from_scale(h, [1e-3])
        result = assouad_from_scale(h, [1e-3], R_grid=[1e-5, 1e-6])
        assert unrestricted.estimate > 0.95
        assert result.estimate == pytest.approx(0.9)
        assert result.estimate == pytest.approx(max(value for _, _, value in result.table))

    def test_r_grid_sup_includes_inner_breakpoints(self):
        h = ScaleFunction.from_pieces([0.5, 0.01, 1e-30], [0.3, 0.5, 0.9])
        result = assouad_from_scale(h, [0.1], R_grid=[0.5, 1e-4])
        # limit as R decreases to 0.01, with ρR already in the 0.9 piece: 0.4 * 2 + 0.9
        assert result.estimate == pytest.approx(1.7)
        assert result.estimate > psi(h, 0.1, 0.1) > max(value for _, _, value in result.table)

    def test_empty_r_grid(self):
        with pytest.raises(PreconditionError):
            assouad_from_scale(ScaleFunction.constant(0.5), [0.1], R_grid=[])

    def test_tail_warning(self, middle_third):
        h = scale_from_cantor(middle_third, 8)
        h = ScaleFunction(h.log_breakpoints, h.values, floor_log=-100.0)
        result = assouad_from_scale(h, [1e-10])
        assert result.touches_tail
        assert result.warnings

    def test_rho_below_floor(self, middle_third):
        h = ScaleFunction(scale_from_cantor(middle_third, 8).log_breakpoints, [LOG2_3] * 8, tail="none")
        with pytest.raises(ScaleRangeError):
            assouad_from_scale(h, [3.0**-9])

    def test_bad_rho(self):
        with pytest.raises(PreconditionError):
            assouad_from_scale(ScaleFunction.constant(0.5), [1.5])


class TestEquivalence:
    def test_within_bound(self):
        h = ScaleFunction.constant(0.5)
        g = ScaleFunction(np.array([0.0, -10.0, -20.0]), np.array([0.6, 0.55]))
        result = equivalence_check(h, g, 1.0)
        assert result.ok
        assert result.points == 2

    def test_violation(self):
        h = ScaleFunction.constant(0.5)
        g = ScaleFunction(np.array([0.0, -10.0, -20.0]), np.array([0.6, 0.55]))
        result = equivalence_check(h, g, 0.5)
        assert not result.ok
        # just above r = e^-10 g is still 0.6
        assert result.worst_r == pytest.approx(math.exp(-10.0))
        assert result.max_violation == pytest.approx(0.05)

    def test_violation_just_above_breakpoint(self):
        h = ScaleFunction.constant(0.5)
        g = ScaleFunction(np.array([0.0, -1.0, -2.0]), np.array([1.55, 0.5]))
        result = equivalence_check(h, g, 1.0)
        assert not result.ok
        assert result.max_violation == pytest.approx(0.05)
        assert result.worst_r == pytest.approx(math.exp(-1.0))

    def test_grid_outside_range(self):
        h = ScaleFunction.constant(0.5)
        g = ScaleFunction(np.array([0.0, -10.0]), np.array([0.6]))
        with pytest.raises(ScaleRangeError):
            equivalence_check(h, g, 1.0, r_grid=[1e-6])

    def test_equivalent_functions_give_close_estimates(self, alternating):
        C = 0.5
        h = scale_from_cantor(alternating, 200)
        g = ScaleFunction(h.log_breakpoints, h.values + C / np.abs(h.log_breakpoints[1:]))
        assert equivalence_check(h, g, C).ok
        for rho in (2.0**-20, 2.0**-40):
            t_h = assouad_from_scale(h, [rho]).estimate
            t_g = assouad_from_scale(g, [rho]).estimate
            assert abs(t_h - t_g) <= 2 * C / abs(math.log(rho)) + 1e-9


class TestRangeIndependence:
    def test_middle_third(self, middle_third):
        h = scale_from_cantor(middle_third, 256)
        first, second, diff = range_independence(h, [3.0**-8], 1.0, 3.0**-20)
        assert abs(first - LOG2_3) < 1e-9
        assert diff < 1e-9

    def test_alternating(self, alternating):
        h = scale_from_cantor(alternating, 2048)
        _, _, diff = ScaleService.range_independence(h, [2.0**-200], 1.0, 2.0**-50)
        assert diff <= 0.02


class TestCantorCrossCheck:
    def test_uniform(self):
        spec = CantorLikeSpecFactory(schedule=UniformScheduleFactory())
        formula = DimensionService.assouad_cantor(spec, 16, 0, pre_horizon=64)
        scale = assouad_from_scale(scale_from_cantor(spec, 512), [3.0**-4, 3.0**-16, 3.0**-64])
        assert abs(scale.estimate - formula.s_assouad) <= 0.02

    def test_alternating(self, cantor_alternating):
        formula = DimensionService.assouad_cantor(cantor_alternating, 100, 0, pre_horizon=400)
        scale = assouad_from_scale(scale_from_cantor(cantor_alternating, 4096), [2.0**-100, 2.0**-200, 2.0**-400])
        assert abs(scale.estimate - formula.s_assouad) <= 0.02

    def test_marker_runs(self, cantor_marker_runs):
        formula = DimensionService.assouad_cantor(cantor_marker_runs, 8, 400000, pre_horizon=200)
        h = scale_from_cantor(cantor_marker_runs, cantor_marker_runs.schedule.structural_horizon(8))
        scale = assouad_from_scale(h, [4.0**-2, 4.0**-4, 4.0**-8])
        assert abs(formula.s_assouad - 0.5) <= 0.02
        assert abs(scale.estimate - 0.5) <= 0.02
        assert abs(scale.estimate - formula.s_assouad) <= 0.02
