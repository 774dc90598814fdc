"""
Assouad dimension through the scale function h(r) of a Cantor-like set.

Usage:
    python manage.py scale specs/cantor_alternating.yaml --rho-grid "2^-10,2^-20,2^-40"
    python manage.py scale specs/cantor13.json --scale-csv out/cantor13.scale_function.csv
"""

from dimensions.management.base import MoranCommand


class Command(MoranCommand):
    help = 'Evaluate sup_R ψ(R, ρ) exactly over the breakpoints of h'
    command = 'scale'

    def add_command_arguments(self, parser):
        parser.add_argument('--depth', type=int, help='Levels in the scale function (default: settings SCALE_DEPTH)')
        parser.add_argument('--rho-grid', help='Ratios ρ (default: c_*^4, c_*^8, c_*^16, c_*^32)')
        parser.add_argument('--r-grid', help='Radii R tabulated in the ψ table (default: the maximizing R)')
        parser.add_argument('--tail-fraction', help='Tail share for the min/max of h (default: 1/8)')
        parser.add_argument('--scale-csv', help='Use a scale function CSV instead of building one from the spec')
