"""
Enumerate the cutset A_u(δ) and check the identity Σ c_v^s / Δ = 1.

Usage:
    python manage.py cutset specs/cantor13.json --delta 1/100
    python manage.py cutset specs/alternating.json --delta 1/1000 --word 1.2 --s 0.4
"""

from dimensions.management.base import MoranCommand


class Command(MoranCommand):
    help = 'List the cutset A_u(delta) of a word and report the weighted identity residual'
    command = 'cutset'

    def add_command_arguments(self, parser):
        parser.add_argument('--delta', required=True, help='Cut scale δ in (0, c_*), e.g. 1/100')
        parser.add_argument('--word', default='', help='Base word as dot-separated letters (default: empty word)')
        parser.add_argument('--start', type=int, default=0, help='Level the base word starts after (default: 0)')
        parser.add_argument('--s', type=float, help='Exponent for the identity check (default: d)')
