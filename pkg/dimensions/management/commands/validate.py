"""
Check a spec document for admissibility.

Usage:
    python manage.py validate specs/cantor13.json
    python manage.py validate specs/bad.json     # exits 3, names the failing check
    python manage.py validate specs/cantor13.json -v 2   # also lists active environment overrides
"""

from dimensions.management.base import MoranCommand
from moranlab.env_validation import get_env_status


class Command(MoranCommand):
    help = 'Validate a Moran or Cantor-like spec (MSC, ratio ranges, markers, realizability)'
    command = 'validate'

    def handle(self, *args, **options):
        if options['verbosity'] > 1:
            status = get_env_status()
            for var, entry in status['overrides'].items():
                if entry['configured']:
                    self.stdout.write(f'{var}={entry["value"]}')
            if status['sentry']['configured']:
                self.stdout.write('sentry: configured')
        super().handle(*args, **options)
