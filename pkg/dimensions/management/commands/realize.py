"""
Write the level-k interval cover of a spec as an IntervalSet CSV.

Usage:
    python manage.py realize specs/cantor13.json --depth 11 --out out/
"""

from dimensions.management.base import MoranCommand, add_geometry_arguments


class Command(MoranCommand):
    help = 'Realize a spec in [0, 1] down to the given depth'
    command = 'realize'

    def add_command_arguments(self, parser):
        add_geometry_arguments(parser)
        parser.add_argument('--depth', type=int, help='Level k to realize (default: first level with lengths <= 1e-3)')
