import logging

from django.apps import AppConfig

logger = logging.getLogger(__name__)


class DimensionsConfig(AppConfig):
    name = "dimensions"
    verbose_name = "Moran set dimensions"

    def ready(self):
        logger.debug("dimensions app ready")
