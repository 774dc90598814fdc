import pytest
from django.core.exceptions import ImproperlyConfigured

from moranlab.env_validation import get_env_status, validate_env


class TestValidateEnv:
    def test_defaults_pass(self, monkeypatch):
        for var in ("MORANLAB_SOLVER_TOL", "MORANLAB_ENUMERATION_BUDGET", "MORANLAB_OUTPUT_DIR", "MORANLAB_PRE_HORIZON"):
            monkeypatch.delenv(var, raising=False)
        validate_env()

    def test_non_numeric_budget(self, monkeypatch):
        monkeypatch.setenv("MORANLAB_ENUMERATION_BUDGET", "lots")
        with pytest.raises(ImproperlyConfigured, match="MORANLAB_ENUMERATION_BUDGET must be a int"):
            validate_env()

    def test_negative_tolerance(self, monkeypatch):
        monkeypatch.setenv("MORANLAB_SOLVER_TOL", "-1e-9")
        with pytest.raises(ImproperlyConfigured, match="must be positive"):
            validate_env()

    def test_output_dir_is_a_file(self, monkeypatch, tmp_path):
        target = tmp_path / "out"
        target.write_text("", encoding="utf-8")
        monkeypatch.setenv("MORANLAB_OUTPUT_DIR", str(target))
        with pytest.raises(ImproperlyConfigured, match="points at a file"):
            validate_env()


class TestEnvStatus:
    def test_reports_overrides(self, monkeypatch):
        monkeypatch.setenv("MORANLAB_PRE_HORIZON", "1000")
        monkeypatch.delenv("SENTRY_DSN", raising=False)
        status = get_env_status()
        assert status["overrides"]["MORANLAB_PRE_HORIZON"] == {"configured": True, "value": "1000"}
        assert status["sentry"] == {"configured": False}
