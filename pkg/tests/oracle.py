"""Naive reference semantics used to cross-check the engine.

Works directly on the arcs of a Net with dict markings and plain
recursion: no compilation, no memoization, no shared code with the
engine beyond the data classes.
"""

from dramnet.core import ArcKind, Place, Transition


def initial(net):
    return {p: p.initial_tokens for p in net.places}


def enabled(net, marking, t):
    for a in net.arcs:
        if a.target != t or not isinstance(a.source, Place):
            continue
        if a.kind is ArcKind.REGULAR and marking[a.source] < a.weight:
            return False
        if a.kind is ArcKind.INHIBITOR and marking[a.source] >= a.weight:
            return False
    return True


def fire(net, marking, t):
    m = dict(marking)
    for a in net.arcs:
        if a.target == t and a.kind is ArcKind.REGULAR:
            m[a.source] -= a.weight
    for a in net.arcs:
        if a.target == t and a.kind is ArcKind.RESET:
            m[a.source] = 0
    for a in net.arcs:
        if a.source == t and isinstance(a.target, Place):
            m[a.target] += a.weight
    return m


def traces(net, k, marking=None):
    """Tr_k by trying every transition at every step."""
    marking = initial(net) if marking is None else marking
    if k == 0:
        return {()}
    out = set()
    for t in set(net.transitions):
        if enabled(net, marking, t):
            for rest in traces(net, k - 1, fire(net, marking, t)):
                out.add((t,) + rest)
    return out


def timed(net, trace):
    """Minimum firing times, scanning timed arcs by hand."""
    last = {}
    now = -1
    out = []
    for t in trace:
        tau = now + 1
        for ta in net.timed_arcs:
            if ta.target == t and ta.source in last:
                tau = max(tau, last[ta.source] + net.delay(ta))
        last[t] = tau
        now = tau
        out.append((t, tau))
    return tuple(out)


def first_difference(n1, n2, k):
    """Smallest j <= k with Tr_j(n1) != Tr_j(n2), or None."""
    for j in range(1, k + 1):
        if traces(n1, j) != traces(n2, j):
            return j
    return None


def is_trace(net, trace):
    m = initial(net)
    for t in trace:
        if not isinstance(t, Transition) or t not in set(net.transitions) or not enabled(net, m, t):
            return False
        m = fire(net, m, t)
    return True
