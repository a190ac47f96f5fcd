"""Bounded trace enumeration, deadlock search and distinguishing-trace search.

Untimed enabledness depends on the marking alone, so suffix sets are
memoized per ``(marking, remaining depth)``. The full trace set is still
materialized because trace sets are what the metrics compare.
"""

from __future__ import annotations

import os
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable

from .core import CompiledNet, Marking, Net, Transition

Trace = tuple[Transition, ...]
TimedTrace = tuple[tuple[Transition, int], ...]

DEFAULT_BUDGET = 10**7
BUDGET_ENV = "DRAMNET_BUDGET"


class BudgetExceeded(RuntimeError):
    def __init__(self, budget: int, what: str = "enumeration"):
        self.budget = budget
        super().__init__(f"{what} exceeded the expansion budget of {budget}")


def default_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    return int(raw) if raw else DEFAULT_BUDGET


class _Explorer:
    """Per-net successor cache with an expansion counter."""

    def __init__(self, cn: CompiledNet, budget: int, what: str = "enumeration"):
        self.cn = cn
        self.budget = budget
        self.what = what
        self.expansions = 0
        self._succ: dict[tuple[int, ...], list] = {}

    def tick(self):
        self.expansions += 1
        if self.expansions > self.budget:
            raise BudgetExceeded(self.budget, self.what)

    def successors(self, m):
        s = self._succ.get(m)
        if s is None:
            s = self._succ[m] = self.cn.successors(m)
        return s


def _enumerate_indices(net: Net, k: int, budget: int, roots: Iterable[int] | None = None):
    cn = net.compiled
    ex = _Explorer(cn, budget)
    memo: dict[tuple, list] = {}

    def suffixes(m, d):
        key = (m, d)
        hit = memo.get(key)
        if hit is not None:
            return hit
        ex.tick()
        out = []
        for t, m2 in ex.successors(m):
            if d == 1:
                out.append((t,))
            else:
                out.extend((t,) + s for s in suffixes(m2, d - 1))
        memo[key] = out
        return out

    if roots is None:
        return suffixes(cn.initial, k)
    roots = set(roots)
    ex.tick()
    out = []
    for t, m2 in ex.successors(cn.initial):
        if t not in roots:
            continue
        if k == 1:
            out.append((t,))
        else:
            out.extend((t,) + s for s in suffixes(m2, k - 1))
    return out


def _worker(net: Net, k: int, budget: int, roots: list[int]):
    return _enumerate_indices(net, k, budget, roots)


def enumerate_traces(net: Net, k: int, budget: int | None = None, workers: int = 1) -> frozenset[Trace]:
    """All length-``k`` transition sequences firable from the initial marking,
    timing ignored."""
    if k < 1:
        raise ValueError("trace length k must be >= 1")
    budget = default_budget() if budget is None else budget
    cn = net.compiled
    if workers <= 1:
        idx = _enumerate_indices(net, k, budget)
    else:
        firsts = [t for t, _ in cn.successors(cn.initial)]
        shards = [firsts[i::workers] for i in range(workers)]
        shards = [s for s in shards if s]
        idx = []
        with ProcessPoolExecutor(max_workers=len(shards) or 1) as pool:
            for part in pool.map(_worker, [net] * len(shards), [k] * len(shards),
                                 [budget] * len(shards), shards):
                idx.extend(part)
    labels = cn.transitions
    return frozenset(tuple(labels[i] for i in tr) for tr in idx)


def timed_annotation(net: Net, trace: Trace) -> TimedTrace:
    """Pair each step of ``trace`` with its minimum firing time."""
    cn = net.compiled
    m = cn.initial
    last: dict[int, int] = {}
    now = -1
    out = []
    for t in trace:
        ti = cn.transition_index[t]
        if not cn.enabled(m, ti):
            raise ValueError(f"{t} is not enabled after {out}")
        tau = now + 1
        for s, d in cn.timed_in[ti]:
            f = last.get(s)
            if f is not None and f + d > tau:
                tau = f + d
        m = cn.fire(m, ti)
        last[ti] = tau
        now = tau
        out.append((t, tau))
    return tuple(out)


def enumerate_timed_traces(net: Net, k: int, budget: int | None = None,
                           workers: int = 1) -> frozenset[TimedTrace]:
    return frozenset(timed_annotation(net, tr)
                     for tr in enumerate_traces(net, k, budget, workers))


def find_deadlocks(net: Net, depth: int, budget: int | None = None) -> list[tuple[Trace, Marking]]:
    """Markings reachable in at most ``depth`` untimed firings that enable
    nothing, each with a shortest witnessing trace."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    budget = default_budget() if budget is None else budget
    cn = net.compiled
    ex = _Explorer(cn, budget, "deadlock search")
    seen = {cn.initial: ()}
    frontier = [cn.initial]
    found = []
    for d in range(depth + 1):
        nxt = []
        for m in frontier:
            ex.tick()
            succ = ex.successors(m)
            if not succ:
                found.append((seen[m], m))
                continue
            if d == depth:
                continue
            for t, m2 in succ:
                if m2 not in seen:
                    seen[m2] = seen[m] + (t,)
                    nxt.append(m2)
        frontier = nxt
    labels = cn.transitions
    out = [(tuple(labels[i] for i in tr), Marking(cn.places, m)) for tr, m in found]
    out.sort(key=lambda tm: (len(tm[0]), format_trace(tm[0])))
    return out


# distinguishing traces --------------------------------------------------------------

class _Side:
    """Successors keyed by label string, so that two nets with different
    transition numberings can be walked in lockstep."""

    def __init__(self, net: Net, ex: _Explorer):
        self.net = net
        self.cn = net.compiled
        self.ex = ex
        self.by_label = dict(zip(self.cn.labels, self.cn.transitions))

    def enabled(self, m) -> dict[str, tuple[int, ...]]:
        labels = self.cn.labels
        return {labels[t]: m2 for t, m2 in self.ex.successors(m)}


def _relabel(prefix: tuple[str, ...], sides) -> Trace:
    table = {**sides[1].by_label, **sides[0].by_label}
    return tuple(table[s] for s in prefix)


def shortest_witness(n1: Net, n2: Net, k: int, budget: int | None = None):
    """Shortest trace of length <= ``k`` firable in exactly one of the nets.

    Both nets are label-deterministic (a transition label determines the
    successor marking), so it suffices to walk the synchronous product and
    compare enabled label sets. Returns ``(trace, side)`` with ``side`` 1 or
    2 naming the net that admits the trace, or None when the nets are
    ``k``-bounded trace equivalent.
    """
    if k < 1:
        return None
    budget = default_budget() if budget is None else budget
    ex1 = _Explorer(n1.compiled, budget, "equivalence search")
    ex2 = _Explorer(n2.compiled, budget, "equivalence search")
    s1, s2 = _Side(n1, ex1), _Side(n2, ex2)
    start = (n1.compiled.initial, n2.compiled.initial)
    seen = {start}
    queue = deque([(start, ())])
    while queue:
        (m1, m2), prefix = queue.popleft()
        ex1.tick()
        e1, e2 = s1.enabled(m1), s2.enabled(m2)
        if e1.keys() != e2.keys():
            diff = min(e1.keys() ^ e2.keys())
            return _relabel(prefix + (diff,), (s1, s2)), (1 if diff in e1 else 2)
        if len(prefix) + 1 >= k:
            continue
        for label in sorted(e1):
            pair = (e1[label], e2[label])
            if pair not in seen:
                seen.add(pair)
                queue.append((pair, prefix + (label,)))
    return None


def _extension(side: _Side, m, r: int, memo: dict):
    """Some sequence of exactly ``r`` firings from ``m``, or None."""
    if r == 0:
        return ()
    key = (m, r)
    if key in memo:
        return memo[key]
    memo[key] = None
    for label, m2 in sorted(side.enabled(m).items()):
        rest = _extension(side, m2, r - 1, memo)
        if rest is not None:
            memo[key] = (label,) + rest
            break
    return memo[key]


def exact_length_witness(n1: Net, n2: Net, k: int, budget: int | None = None):
    """A length-``k`` trace in exactly one of Tr_k(n1), Tr_k(n2), or None."""
    budget = default_budget() if budget is None else budget
    ex1 = _Explorer(n1.compiled, budget, "equivalence search")
    ex2 = _Explorer(n2.compiled, budget, "equivalence search")
    sides = (_Side(n1, ex1), _Side(n2, ex2))
    memos: tuple[dict, dict] = ({}, {})
    start = (n1.compiled.initial, n2.compiled.initial)
    seen = {(start, 0)}
    queue = deque([(start, ())])
    while queue:
        (m1, m2), prefix = queue.popleft()
        ex1.tick()
        e1, e2 = sides[0].enabled(m1), sides[1].enabled(m2)
        rem = k - len(prefix) - 1
        for label in sorted(e1.keys() | e2.keys()):
            if label in e1 and label in e2:
                pair = (e1[label], e2[label])
                if rem > 0 and (pair, len(prefix) + 1) not in seen:
                    seen.add((pair, len(prefix) + 1))
                    queue.append((pair, prefix + (label,)))
                continue
            which = 0 if label in e1 else 1
            succ = (e1 if which == 0 else e2)[label]
            ext = _extension(sides[which], succ, rem, memos[which])
            if ext is not None:
                return _relabel(prefix + (label,) + ext, sides), which + 1
    return None


# serialization --------------------------------------------------------------------

def format_trace(trace: Trace) -> str:
    return ",".join(str(t) for t in trace)


def format_timed_trace(trace: TimedTrace) -> str:
    return ",".join(f"{t}:{tau}" for t, tau in trace)


def parse_trace(line: str) -> Trace:
    line = line.strip()
    return tuple(Transition.parse(s) for s in line.split(",")) if line else ()


def parse_timed_trace(line: str) -> TimedTrace:
    out = []
    for step in line.strip().split(","):
        label, _, tau = step.rpartition(":")
        out.append((Transition.parse(label), int(tau)))
    return tuple(out)


def serialize_traces(traces: Iterable[Trace]) -> str:
    lines = sorted(format_trace(t) for t in traces)
    return "".join(line + "\n" for line in lines)


def serialize_timed_traces(traces: Iterable[TimedTrace]) -> str:
    lines = sorted(format_timed_trace(t) for t in traces)
    return "".join(line + "\n" for line in lines)
