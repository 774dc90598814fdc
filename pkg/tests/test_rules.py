from fractions import Fraction

import pytest

from dimensions.specs import FinitePerturbation, GeometricPerturbation, Level, PeriodicSchedule
from dimensions.validation.errors import SpecValidationError
from dimensions.validation.rules import ERROR, WARNING, validate_spec
from tests.factories import CantorLikeSpecFactory, MoranSpecFactory, UniformScheduleFactory


def checks(report, severity=ERROR):
    return {issue.check for issue in report.issues if issue.severity == severity}


class TestSpecRules:
    def test_middle_third_admissible(self, middle_third):
        report = validate_spec(middle_third)
        assert report.is_admissible
        assert report.issues == ()
        assert report.c_star == Fraction(1, 3)

    def test_overfull_level_breaks_msc(self):
        report = validate_spec(MoranSpecFactory(schedule=UniformScheduleFactory(c="2/3")))
        assert not report.is_admissible
        assert report.errors[0].check == "msc"
        assert str(report.errors[0]).startswith("[error] msc (level 1): Moran structure condition violated")
        assert {"ratio_bound", "branching_bound"} <= checks(report)

    def test_raise_if_invalid(self):
        report = validate_spec(MoranSpecFactory(schedule=UniformScheduleFactory(c="2/3")))
        with pytest.raises(SpecValidationError) as exc_info:
            report.raise_if_invalid()
        assert exc_info.value.exit_status == 3
        assert exc_info.value.message.startswith("msc:")
        assert exc_info.value.fields[0].field == "msc@level 1"
        assert exc_info.value.fields[0].code == "MSC_VIOLATED"
        codes = {field.code for field in exc_info.value.fields}
        assert codes == {"MSC_VIOLATED", "RATIO_OUT_OF_RANGE", "BRANCHING_TOO_SMALL"}

    def test_msc_uses_ambient_dimension(self):
        spec = MoranSpecFactory(schedule=UniformScheduleFactory(n=4, c="1/2"), d=2)
        assert validate_spec(spec).is_admissible
        assert "msc" in checks(validate_spec(MoranSpecFactory(schedule=UniformScheduleFactory(n=4, c="1/2"))))

    def test_single_branch_rejected(self):
        spec = MoranSpecFactory(schedule=UniformScheduleFactory(n=1, c="1/2"))
        assert "branching" in checks(validate_spec(spec))

    def test_ratio_outside_unit_interval(self):
        spec = MoranSpecFactory(schedule=UniformScheduleFactory(n=2, c="3/2"))
        report = validate_spec(spec)
        assert "ratio_range" in checks(report)
        assert "msc" not in checks(report)

    def test_bad_dimension(self):
        report = validate_spec(MoranSpecFactory(d=0))
        assert "dimension" in checks(report)

    def test_issue_level_points_at_first_occurrence(self):
        bad = Level.uniform(2, "2/3")
        schedule = PeriodicSchedule(prefix=(Level.uniform(2, "1/3"),) * 4, cycle=(bad,))
        report = validate_spec(MoranSpecFactory(schedule=schedule))
        msc = [issue for issue in report.errors if issue.check == "msc"]
        assert msc[0].level == 5

    def test_marker_runs_head_warning(self, marker_runs):
        report = validate_spec(marker_runs)
        assert report.is_admissible
        assert checks(report, WARNING) == {"marker_runs_head"}
        assert report.warnings[0].level == 1
        assert report.c_star == Fraction(1, 16)


class TestCantorLikeRules:
    def test_geometric_perturbation_realizable(self, cantor_alternating):
        assert validate_spec(cantor_alternating).is_admissible

    def test_mixed_level_rejected(self):
        schedule = PeriodicSchedule(prefix=(), cycle=(Level((Fraction(1, 4), Fraction(1, 8))),))
        report = validate_spec(CantorLikeSpecFactory(schedule=schedule))
        assert "single_ratio" in checks(report)

    def test_decay_out_of_range(self):
        spec = CantorLikeSpecFactory(perturbation=GeometricPerturbation("1/10", "3/2"))
        assert checks(validate_spec(spec)) == {"perturbation"}

    def test_negative_finite_perturbation(self):
        spec = CantorLikeSpecFactory(perturbation=FinitePerturbation(values=("1/10", "-1/10")))
        report = validate_spec(spec)
        assert report.errors[0].check == "perturbation"
        assert report.errors[0].level == 2

    def test_children_do_not_fit(self):
        spec = CantorLikeSpecFactory(
            schedule=UniformScheduleFactory(n=2, c="2/5"),
            perturbation=FinitePerturbation(values=("1/2",)),
        )
        report = validate_spec(spec)
        realizable = [issue for issue in report.errors if issue.check == "realizable"]
        assert realizable and realizable[0].level == 1
        assert realizable[0].code == "NOT_REALIZABLE"
        assert "no 1-D layout" in realizable[0].message
