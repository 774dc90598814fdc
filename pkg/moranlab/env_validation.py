import os
import logging
from django.core.exceptions import ImproperlyConfigured

logger = logging.getLogger(__name__)

NUMERIC_ENV_VARS = {
    "MORANLAB_SOLVER_TOL": float,
    "MORANLAB_ENUMERATION_BUDGET": int,
    "MORANLAB_REALIZATION_BUDGET": int,
    "MORANLAB_PRE_HORIZON": int,
}


def validate_env():
    """
    Validate numeric overrides before settings consume them.
    Runs once per process; subsequent calls are idempotent.
    """
    for var, cast in NUMERIC_ENV_VARS.items():
        raw = os.getenv(var)
        if raw is None or raw == "":
            continue
        try:
            value = cast(raw)
        except ValueError:
            error_msg = f"CRITICAL: {var} must be a {cast.__name__}, got {raw!r}"
            logger.critical(error_msg)
            raise ImproperlyConfigured(error_msg)
        if value <= 0:
            error_msg = f"CRITICAL: {var} must be positive, got {raw!r}"
            logger.critical(error_msg)
            raise ImproperlyConfigured(error_msg)

    output_dir = os.getenv("MORANLAB_OUTPUT_DIR", "")
    if output_dir and os.path.exists(output_dir) and not os.path.isdir(output_dir):
        error_msg = f"CRITICAL: MORANLAB_OUTPUT_DIR points at a file: {output_dir}"
        logger.critical(error_msg)
        raise ImproperlyConfigured(error_msg)

    logger.debug("Environment validation passed successfully")


def get_env_status() -> dict:
    """
    Return a structured dict describing which overrides are active.
    Printed by `manage.py validate -v 2`.
    """
    overrides = {}
    for var in list(NUMERIC_ENV_VARS) + ["MORANLAB_OUTPUT_DIR", "LOG_LEVEL"]:
        val = os.getenv(var)
        overrides[var] = {"configured": bool(val), "value": val or None}

    return {
        "overrides": overrides,
        "sentry": {"configured": bool(os.getenv("SENTRY_DSN"))},
    }
