"""
Empirical Assouad dimension from covering numbers of a 1-D realization.

Usage:
    python manage.py empirical specs/cantor13.json --rho-grid "3^-2..3^-6" --r-grid "3^-1..3^-4"
    python manage.py empirical specs/cantor13.json --intervals out/cantor13.intervals.csv
"""

from dimensions.management.base import MoranCommand, add_geometry_arguments


class Command(MoranCommand):
    help = 'Estimate dim_A as max log N(ρR, R) / -log ρ over sampled centers and scales'
    command = 'empirical'

    def add_command_arguments(self, parser):
        add_geometry_arguments(parser)
        parser.add_argument('--rho-grid', help='Ratios ρ, e.g. "3^-2..3^-6" (default: c_*^2..c_*^6)')
        parser.add_argument('--r-grid', help='Radii R, e.g. "1/3,1/9" (default: c_*^1..c_*^4)')
        parser.add_argument('--centers', type=int, help='Centers sampled per R (default: settings CENTERS_PER_R)')
        parser.add_argument('--intervals', help='Use an IntervalSet CSV written by realize instead of realizing')
