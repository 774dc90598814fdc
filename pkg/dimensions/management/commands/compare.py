"""
Formula, empirical and scale-function Assouad estimates side by side.

Usage:
    python manage.py compare specs/cantor13.json
"""

from dimensions.management.base import MoranCommand, add_geometry_arguments


class Command(MoranCommand):
    help = 'Compare s** with the covering-number and scale-function estimates'
    command = 'compare'

    def add_command_arguments(self, parser):
        add_geometry_arguments(parser)
        parser.add_argument('--m-max', type=int, help='Longest window length m (default: settings M_MAX)')
        parser.add_argument('--k-max', type=int, help='Largest window start k scanned (default: settings K_MAX)')
        parser.add_argument('--depth', type=int, help='Levels in the scale function (default: settings SCALE_DEPTH)')
        parser.add_argument('--rho-grid', help='Ratios ρ for the empirical estimate (default: c_*^2..c_*^6)')
        parser.add_argument('--r-grid', help='Radii R for the empirical estimate (default: c_*^1..c_*^4)')
        parser.add_argument('--centers', type=int, help='Centers sampled per R (default: settings CENTERS_PER_R)')
