"""
moranlab – Django settings
Numerical toolkit for Assouad, Hausdorff and packing dimensions of Moran sets.
"""

from fractions import Fraction
from pathlib import Path
import os
import environ

# =============================================================================
# BASE SETUP
# =============================================================================
BASE_DIR = Path(__file__).resolve().parent.parent
env = environ.Env()

env_file = BASE_DIR / ".env"
if env_file.exists():
    environ.Env.read_env(str(env_file))

DEBUG = os.getenv("DEBUG", "true").lower() == "true"

# =============================================================================
# ENVIRONMENT VALIDATION (FAIL-FAST)
# =============================================================================
from moranlab.env_validation import validate_env
validate_env()

# =============================================================================
# SECURITY
# =============================================================================
# Nothing is signed.
SECRET_KEY = env.str("SECRET_KEY", default="moranlab-unsigned")
ALLOWED_HOSTS = []

# =============================================================================
# LOGGING
# =============================================================================
LOG_LEVEL = env.str("LOG_LEVEL", default="INFO")

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'structured': {
            'format': '[%(asctime)s] %(levelname)s [%(name)s:%(lineno)s] [run_id=%(run_id)s] %(message)s',
        },
    },
    'filters': {
        'run_id': {
            '()': 'moranlab.run_context.RunIDFilter',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'structured',
            'filters': ['run_id'],
        },
    },
    'root': {
        'handlers': ['console'],
        'level': LOG_LEVEL,
    },
}

# =============================================================================
# INSTALLED APPS
# =============================================================================
INSTALLED_APPS = [
    "dimensions.apps.DimensionsConfig",
]

# No persistence: every computation is a pure function of the spec file.
DATABASES = {}

USE_TZ = True
TIME_ZONE = "UTC"

# =============================================================================
# NUMERICAL DEFAULTS
# =============================================================================
MORANLAB = {
    "SOLVER_TOL": env.float("MORANLAB_SOLVER_TOL", default=1e-12),
    "RESIDUAL_THRESHOLD": 1e-10,
    "ENUMERATION_BUDGET": env.int("MORANLAB_ENUMERATION_BUDGET", default=10_000_000),
    "REALIZATION_BUDGET": env.int("MORANLAB_REALIZATION_BUDGET", default=2_000_000),
    "PRE_HORIZON": env.int("MORANLAB_PRE_HORIZON", default=40_000),
    "TAIL_FRACTION": Fraction(1, 8),
    "M_MAX": 64,
    "K_MAX": 4096,
    "CENTERS_PER_R": 8,
    "SCALE_DEPTH": 4096,
    "OUTPUT_DIR": Path(env.str("MORANLAB_OUTPUT_DIR", default=str(BASE_DIR / "out"))),
}

# =============================================================================
# SENTRY (Error Monitoring)
# =============================================================================
SENTRY_DSN = os.getenv("SENTRY_DSN", "")
if SENTRY_DSN:
    import sentry_sdk
    from sentry_sdk.integrations.logging import LoggingIntegration
    import logging as _logging

    sentry_sdk.init(
        dsn=SENTRY_DSN,
        integrations=[
            LoggingIntegration(
                level=_logging.WARNING,
                event_level=_logging.ERROR,
            ),
        ],
        send_default_pii=False,
        environment=env.str("SENTRY_ENVIRONMENT", default="development"),
        release=os.getenv("APP_VERSION", "1.0.0"),
    )
