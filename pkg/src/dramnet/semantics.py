"""Enabledness, firing and minimum firing times over a :class:`Net`."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from .core import Marking, Net, Transition


class ContractError(Exception):
    """A precondition of :func:`fire` was violated."""


@dataclass(frozen=True)
class SimState:
    """Marking plus firing history, in bus cycles.

    ``now`` is -1 before the first command so that an unconstrained first
    command lands at cycle 0.
    """

    marking: Marking
    last_fired: Mapping[Transition, int] = field(default_factory=lambda: MappingProxyType({}))
    now: int = -1


def initial_state(net: Net) -> SimState:
    return SimState(net.initial_marking())


def _index(net: Net, t: Transition) -> int:
    try:
        return net.compiled.transition_index[t]
    except KeyError:
        raise ContractError(f"{t} is not a transition of this net") from None


def _vector(net: Net, marking: Marking) -> tuple[int, ...]:
    if tuple(marking) != net.place_order:
        marking = Marking.from_mapping(net, marking)
    return marking.vector


def enabled_untimed(net: Net, marking: Marking, t: Transition) -> bool:
    """Regular inputs hold at least their weight; inhibitor sources hold
    strictly less than theirs. Reset arcs impose nothing."""
    return net.compiled.enabled(_vector(net, marking), _index(net, t))


def min_fire_time(net: Net, state: SimState, t: Transition) -> int | None:
    cn = net.compiled
    ti = _index(net, t)
    if not cn.enabled(_vector(net, state.marking), ti):
        return None
    tau = state.now + 1
    for s, d in cn.timed_in[ti]:
        fired = state.last_fired.get(cn.transitions[s])
        if fired is not None and fired + d > tau:
            tau = fired + d
    return tau


def fire(net: Net, state: SimState, t: Transition, tau: int) -> SimState:
    """Fire ``t`` at cycle ``tau``: consume inputs, clear reset sources,
    then produce outputs."""
    earliest = min_fire_time(net, state, t)
    if earliest is None:
        raise ContractError(f"{t} is not enabled")
    if tau < earliest:
        raise ContractError(f"{t} cannot fire at {tau}; earliest is {earliest}")
    cn = net.compiled
    vec = cn.fire(_vector(net, state.marking), _index(net, t))
    assert min(vec, default=0) >= 0, "negative token count"
    last = dict(state.last_fired)
    last[t] = tau
    return SimState(Marking(cn.places, vec), MappingProxyType(last), tau)


def enabled_set(net: Net, state: SimState) -> dict[Transition, int]:
    """Every untimed-enabled transition with its minimum firing time."""
    out = {}
    for t in net.transition_order:
        tau = min_fire_time(net, state, t)
        if tau is not None:
            out[t] = tau
    return out
