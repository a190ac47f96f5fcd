from dramnet import fixtures
from dramnet.core import Coordinate, Transition
from dramnet.dsl import build_net


def net_of(name, banks=1, ranks=1, **overrides):
    return build_net(fixtures.load(name), banks, ranks, overrides or None)


def bank_cmd(cmd, bank=0, rank=0, group=None):
    return Transition(cmd, Coordinate.for_bank(rank, bank, group))


def rank_cmd(cmd, rank=0):
    return Transition(cmd, Coordinate.for_rank(rank))
