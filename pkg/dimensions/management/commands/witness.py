"""
Dyadic ratio classes of a window and the lower-bound witness class B_q.

Usage:
    python manage.py witness specs/alternating.json --k-lo 2 --k-hi 10 --epsilon 0.05
"""

from dimensions.management.base import MoranCommand


class Command(MoranCommand):
    help = 'Group window words by floor(-log2 c) and find a class certifying the lower bound'
    command = 'witness'

    def add_command_arguments(self, parser):
        parser.add_argument('--k-lo', type=int, default=0, help='Window start k (default: 0)')
        parser.add_argument('--k-hi', type=int, help="Window end k' (default: k-lo + 8)")
        parser.add_argument('--s', type=float, help="Exponent below s_(k,k') (default: 0.9 s_(k,k'))")
        parser.add_argument('--epsilon', type=float, default=0.1, help='Slack ε > 0 (default: 0.1)')
        parser.add_argument('--q', type=int, help='Class index for the reported scales (default: the witness)')
