"""
Hausdorff, packing and Assouad dimension estimates from the defining ratios.

Usage:
    python manage.py dims specs/marker_runs.json --m-max 8 --k-max 400000
    python manage.py dims specs/alternating.json --m-max 10000 --format csv
"""

from dimensions.management.base import MoranCommand


class Command(MoranCommand):
    help = 'Compute s_* and s^* tail estimates and the s** upper estimate with its convergence gap'
    command = 'dims'

    def add_command_arguments(self, parser):
        parser.add_argument('--m-max', type=int, help='Longest window length m (default: settings M_MAX)')
        parser.add_argument('--k-max', type=int, help='Largest window start k scanned (default: settings K_MAX)')
        parser.add_argument('--pre-horizon', type=int, help='Horizon for the s_{0,m} tail (default: 40000)')
        parser.add_argument('--tail-fraction', help='Tail window starts at this fraction of the horizon (default: 1/8)')
