"""
Shared plumbing for the moranlab management commands.

Usage:
    python manage.py <command> SPEC [--tol 1e-12] [--format text|csv] [--out DIR] [--seed N] [--workers N]
"""

import logging

from django.core.management.base import BaseCommand, CommandError

from dimensions.validation.errors import ErrorCode, MoranLabError
from moranlab.run_context import begin_run, end_run

logger = logging.getLogger(__name__)


def add_geometry_arguments(parser):
    parser.add_argument('--placement', choices=['uniform_gap', 'left_packed'], default='uniform_gap')
    parser.add_argument('--gamma', type=float, default=1.0, help='Share of the slack used as gaps (default: 1)')


class MoranCommand(BaseCommand):
    command = ""
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument('spec', help='Spec document (JSON or YAML)')
        parser.add_argument('--tol', type=float, help='Bisection tolerance (default: settings MORANLAB SOLVER_TOL)')
        parser.add_argument('--format', choices=['text', 'csv'], default='text', help='Report format on stdout')
        parser.add_argument('--out', help='Directory for CSV artifacts (default: MORANLAB_OUTPUT_DIR)')
        parser.add_argument('--seed', type=int, help='Seed for randomized perturbation signs and sampling')
        parser.add_argument('--workers', type=int, default=1, help='Threads for grid evaluation (default: 1)')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def handle(self, *args, **options):
        from dimensions.management.run_config import RunConfig
        from dimensions.services.run_service import RunService

        run_id = begin_run()
        try:
            config = RunConfig.from_options(self.command, options)
            result = RunService.run(config)
            written = result.write_artifacts(config.output_dir(), config.input_path.stem) if result.artifacts else []
        except MoranLabError as exc:
            logger.error(f"{self.command} failed ({exc.code}): {exc.message}")
            raise CommandError(exc.describe(), returncode=exc.exit_status)
        except Exception as exc:
            logger.exception(f"{self.command} failed unexpectedly")
            raise CommandError(f"{ErrorCode.INTERNAL_ERROR.value}: {exc}", returncode=MoranLabError.exit_status)
        finally:
            end_run()

        self.stdout.write(result.text, ending='')
        if options['verbosity'] > 1:
            for path in written:
                self.stdout.write(f'wrote {path}')
        if result.status != 0:
            raise CommandError(
                f'{self.command} finished with status {result.status} (run {run_id}): {result.message}',
                returncode=result.status,
            )
        if options['format'] == 'text':
            self.stdout.write(self.style.SUCCESS(f'{self.command} completed (run {run_id})'))
