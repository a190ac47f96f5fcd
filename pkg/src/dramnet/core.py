"""DRAM Petri net data model: coordinates, nodes, arcs, nets and markings."""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping

from .expr import Expr


class NetError(Exception):
    """Raised when a net cannot be constructed."""


class CoordKind(enum.Enum):
    BANK = "bank"
    RANK = "rank"
    DEVICE = "device"  # nodes of a model's ``global`` block


@dataclass(frozen=True)
class Coordinate:
    kind: CoordKind
    rank: int | None = None
    group: int | None = None
    bank: int | None = None

    @classmethod
    def for_bank(cls, rank: int, bank: int, group: int | None = None) -> Coordinate:
        return cls(CoordKind.BANK, rank, group, bank)

    @classmethod
    def for_rank(cls, rank: int) -> Coordinate:
        return cls(CoordKind.RANK, rank)

    @classmethod
    def device(cls) -> Coordinate:
        return cls(CoordKind.DEVICE)

    def __str__(self) -> str:
        if self.kind is CoordKind.DEVICE:
            return "dev"
        s = f"r{self.rank}"
        if self.group is not None:
            s += f".g{self.group}"
        if self.bank is not None:
            s += f".b{self.bank}"
        return s

    @classmethod
    def parse(cls, text: str) -> Coordinate:
        if text == "dev":
            return cls.device()
        rank = group = bank = None
        for part in text.split("."):
            if not part or part[0] not in "rgb" or not part[1:].isdigit():
                raise ValueError(f"bad coordinate {text!r}")
            val = int(part[1:])
            if part[0] == "r":
                rank = val
            elif part[0] == "g":
                group = val
            else:
                bank = val
        if rank is None:
            raise ValueError(f"bad coordinate {text!r}: missing rank")
        if bank is None:
            if group is not None:
                raise ValueError(f"bad coordinate {text!r}: group without bank")
            return cls.for_rank(rank)
        return cls.for_bank(rank, bank, group)

    def sort_key(self):
        return (self.kind is not CoordKind.DEVICE, self.rank or 0,
                -1 if self.group is None else self.group,
                -1 if self.bank is None else self.bank)


@dataclass(frozen=True)
class Place:
    name: str
    coord: Coordinate
    initial_tokens: int = field(default=0, compare=False)

    def __str__(self) -> str:
        return f"{self.name}@{self.coord}"


@dataclass(frozen=True)
class Transition:
    command: str
    coord: Coordinate

    def __str__(self) -> str:
        return f"{self.command}@{self.coord}"

    def sort_key(self):
        return (str(self),)

    @classmethod
    def parse(cls, text: str) -> Transition:
        cmd, _, coord = text.partition("@")
        if not cmd or not coord:
            raise ValueError(f"bad transition label {text!r}")
        return cls(cmd, Coordinate.parse(coord))


Node = Place | Transition


class ArcKind(enum.Enum):
    REGULAR = "arc"
    INHIBITOR = "inhibitor"
    RESET = "reset"


@dataclass(frozen=True)
class Arc:
    kind: ArcKind
    source: Node
    target: Node
    weight: int = 1

    def __post_init__(self):
        if self.kind is ArcKind.RESET and self.weight != 1:
            object.__setattr__(self, "weight", 1)

    def __str__(self) -> str:
        w = f" weight {self.weight}" if self.kind is not ArcKind.RESET else ""
        return f"{self.kind.value} {self.source} -> {self.target}{w}"


@dataclass(frozen=True)
class TimedArc:
    source: Transition
    target: Transition
    delay: Expr

    def __str__(self) -> str:
        return f"{self.source} => {self.target} : {self.delay}"


@dataclass(frozen=True, eq=False)
class Net:
    """An immutable DRAM Petri net.

    Node collections are tuples so that malformed nets (duplicates,
    dangling endpoints) can still be represented and reported on by
    :func:`validate_structure`. Equality is by labels: two nets are equal
    when their node, arc and timed-arc sets and initial marking agree,
    regardless of construction order.
    """

    banks_per_rank: int
    ranks: int
    bank_groups: int | None = None
    places: tuple[Place, ...] = ()
    transitions: tuple[Transition, ...] = ()
    arcs: tuple[Arc, ...] = ()
    timed_arcs: tuple[TimedArc, ...] = ()
    timing_params: Mapping[str, int] = field(default_factory=dict)

    @property
    def config(self) -> tuple[int, int]:
        return (self.banks_per_rank, self.ranks)

    def _key(self):
        return (
            self.banks_per_rank,
            self.ranks,
            self.bank_groups,
            frozenset((p, p.initial_tokens) for p in self.places),
            frozenset(self.transitions),
            frozenset(self.arcs),
            frozenset(self.timed_arcs),
            frozenset(self.timing_params.items()),
        )

    def __eq__(self, other):
        if not isinstance(other, Net):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def replace(self, **changes) -> Net:
        fields = dict(
            banks_per_rank=self.banks_per_rank,
            ranks=self.ranks,
            bank_groups=self.bank_groups,
            places=self.places,
            transitions=self.transitions,
            arcs=self.arcs,
            timed_arcs=self.timed_arcs,
            timing_params=self.timing_params,
        )
        fields.update(changes)
        for name in ("places", "transitions", "arcs", "timed_arcs"):
            fields[name] = tuple(fields[name])
        return Net(**fields)

    def initial_marking(self) -> Marking:
        return Marking(self.place_order, tuple(p.initial_tokens for p in self.place_order))

    def delay(self, timed_arc: TimedArc) -> int:
        return timed_arc.delay.evaluate(self.timing_params)

    # stable orderings used by the engine; labels only, never insertion order
    @cached_property
    def place_order(self) -> tuple[Place, ...]:
        uniq = {p: p for p in self.places}
        return tuple(sorted(uniq, key=lambda p: (p.name, p.coord.sort_key())))

    @cached_property
    def transition_order(self) -> tuple[Transition, ...]:
        return tuple(sorted(set(self.transitions), key=lambda t: str(t)))

    @cached_property
    def compiled(self) -> CompiledNet:
        return CompiledNet(self)

    def transitions_by_command(self) -> dict[str, list[Transition]]:
        out: dict[str, list[Transition]] = defaultdict(list)
        for t in self.transition_order:
            out[t.command].append(t)
        return out


class CompiledNet:
    """Index-based view of a :class:`Net` for the simulation engine.

    Places and transitions are numbered by their sorted labels. Markings
    are plain tuples of token counts in ``net.place_order``.
    """

    def __init__(self, net: Net):
        self.net = net
        self.places = net.place_order
        self.transitions = net.transition_order
        self.place_index = {p: i for i, p in enumerate(self.places)}
        self.transition_index = {t: i for i, t in enumerate(self.transitions)}
        self.labels = tuple(str(t) for t in self.transitions)
        n = len(self.transitions)
        pre: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        post: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        inhib: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        reset: list[list[int]] = [[] for _ in range(n)]
        for arc in net.arcs:
            src, dst = arc.source, arc.target
            if isinstance(src, Place) and isinstance(dst, Transition):
                if src not in self.place_index or dst not in self.transition_index:
                    raise NetError(f"dangling arc: {arc}")
                p, t = self.place_index[src], self.transition_index[dst]
                if arc.kind is ArcKind.REGULAR:
                    pre[t].append((p, arc.weight))
                elif arc.kind is ArcKind.INHIBITOR:
                    inhib[t].append((p, arc.weight))
                else:
                    reset[t].append(p)
            elif (isinstance(src, Transition) and isinstance(dst, Place)
                  and arc.kind is ArcKind.REGULAR):
                if src not in self.transition_index or dst not in self.place_index:
                    raise NetError(f"dangling arc: {arc}")
                post[self.transition_index[src]].append((self.place_index[dst], arc.weight))
            else:
                raise NetError(f"malformed arc: {arc}")
        self.pre = [tuple(x) for x in pre]
        self.post = [tuple(x) for x in post]
        self.inhib = [tuple(x) for x in inhib]
        self.reset = [tuple(sorted(set(x))) for x in reset]
        timed_in: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for ta in net.timed_arcs:
            s = self.transition_index.get(ta.source)
            d = self.transition_index.get(ta.target)
            if s is None or d is None:
                raise NetError(f"dangling timed arc: {ta}")
            timed_in[d].append((s, net.delay(ta)))
        self.timed_in = [tuple(sorted(set(x))) for x in timed_in]
        self.initial = tuple(p.initial_tokens for p in self.places)

    def enabled(self, marking: tuple[int, ...], t: int) -> bool:
        for p, w in self.pre[t]:
            if marking[p] < w:
                return False
        for p, w in self.inhib[t]:
            if marking[p] >= w:
                return False
        return True

    def fire(self, marking: tuple[int, ...], t: int) -> tuple[int, ...]:
        m = list(marking)
        for p, w in self.pre[t]:
            m[p] -= w
        for p in self.reset[t]:
            m[p] = 0
        for p, w in self.post[t]:
            m[p] += w
        return tuple(m)

    def successors(self, marking: tuple[int, ...]) -> list[tuple[int, tuple[int, ...]]]:
        return [(t, self.fire(marking, t))
                for t in range(len(self.transitions)) if self.enabled(marking, t)]


class Marking(Mapping[Place, int]):
    """Token counts over exactly the places of one net."""

    __slots__ = ("_places", "_tokens", "_index")

    def __init__(self, places: tuple[Place, ...], tokens: tuple[int, ...]):
        if len(places) != len(tokens):
            raise ValueError("marking length does not match place count")
        self._places = places
        self._tokens = tuple(tokens)
        self._index = None

    @classmethod
    def from_mapping(cls, net: Net, tokens: Mapping[Place, int]) -> Marking:
        unknown = set(tokens) - set(net.place_order)
        if unknown:
            raise KeyError(f"places not in net: {sorted(map(str, unknown))}")
        return cls(net.place_order, tuple(tokens.get(p, 0) for p in net.place_order))

    @property
    def vector(self) -> tuple[int, ...]:
        return self._tokens

    def __getitem__(self, place: Place) -> int:
        if self._index is None:
            self._index = {p: i for i, p in enumerate(self._places)}
        return self._tokens[self._index[place]]

    def __iter__(self) -> Iterator[Place]:
        return iter(self._places)

    def __len__(self) -> int:
        return len(self._places)

    def __eq__(self, other):
        if isinstance(other, Marking):
            return self._places == other._places and self._tokens == other._tokens
        return super().__eq__(other)

    def __hash__(self):
        return hash((self._places, self._tokens))

    def __repr__(self) -> str:
        nz = ", ".join(f"{p}={n}" for p, n in zip(self._places, self._tokens) if n)
        return f"Marking({nz})"


# structural validation ----------------------------------------------------------

@dataclass
class ValidationReport:
    empty: bool = False
    orphaned_places: list[Place] = field(default_factory=list)
    orphaned_transitions: list[Transition] = field(default_factory=list)
    dangling_arcs: list[Arc | TimedArc] = field(default_factory=list)
    malformed_arcs: list[Arc] = field(default_factory=list)
    duplicate_labels: list[Node] = field(default_factory=list)
    unbound_parameters: list[str] = field(default_factory=list)
    bad_delays: list[TimedArc] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems()

    def problems(self) -> list[str]:
        out = []
        if self.empty:
            out.append("net has no nodes")
        out += [f"orphaned place {p}" for p in self.orphaned_places]
        out += [f"orphaned transition {t}" for t in self.orphaned_transitions]
        out += [f"dangling arc endpoint in {a}" for a in self.dangling_arcs]
        out += [f"malformed arc {a}" for a in self.malformed_arcs]
        out += [f"duplicate label {n}" for n in self.duplicate_labels]
        out += [f"unbound timing parameter {n}" for n in self.unbound_parameters]
        out += [f"timed arc delay below 1: {a}" for a in self.bad_delays]
        return out


def validate_structure(net: Net) -> ValidationReport:
    report = ValidationReport()
    if not net.places and not net.transitions:
        report.empty = True
    seen: set = set()
    for node in (*net.places, *net.transitions):
        if node in seen and node not in report.duplicate_labels:
            report.duplicate_labels.append(node)
        seen.add(node)
    places, transitions = set(net.places), set(net.transitions)
    incident: set = set()
    for arc in net.arcs:
        src_ok = arc.source in places or arc.source in transitions
        dst_ok = arc.target in places or arc.target in transitions
        if not (src_ok and dst_ok):
            report.dangling_arcs.append(arc)
        if arc.kind is ArcKind.REGULAR:
            shape_ok = (isinstance(arc.source, Place) and isinstance(arc.target, Transition)) or (
                isinstance(arc.source, Transition) and isinstance(arc.target, Place))
        else:
            shape_ok = isinstance(arc.source, Place) and isinstance(arc.target, Transition)
        if not shape_ok or arc.weight < 1:
            report.malformed_arcs.append(arc)
        incident.add(arc.source)
        incident.add(arc.target)
    report.orphaned_places = sorted(places - incident, key=str)
    report.orphaned_transitions = sorted(transitions - incident, key=str)
    unbound: set[str] = set()
    for ta in net.timed_arcs:
        if ta.source not in transitions or ta.target not in transitions:
            report.dangling_arcs.append(ta)
        missing = ta.delay.names() - set(net.timing_params)
        if missing:
            unbound |= missing
        elif ta.delay.evaluate(net.timing_params) < 1:
            report.bad_delays.append(ta)
    report.unbound_parameters = sorted(unbound)
    return report


# hypothesis checks ------------------------------------------------------------

def _swap_banks(coord: Coordinate, rank: int, group: int | None, a: int, b: int) -> Coordinate:
    if coord.kind is not CoordKind.BANK or coord.rank != rank or coord.group != group:
        return coord
    if coord.bank == a:
        return Coordinate.for_bank(rank, b, group)
    if coord.bank == b:
        return Coordinate.for_bank(rank, a, group)
    return coord


def relabel_banks(net: Net, mapping) -> Net:
    """Apply ``mapping`` (Coordinate -> Coordinate) to every node of ``net``."""

    def node(n):
        if isinstance(n, Place):
            return Place(n.name, mapping(n.coord), n.initial_tokens)
        return Transition(n.command, mapping(n.coord))

    return net.replace(
        places=[node(p) for p in net.places],
        transitions=[node(t) for t in net.transitions],
        arcs=[Arc(a.kind, node(a.source), node(a.target), a.weight) for a in net.arcs],
        timed_arcs=[TimedArc(node(ta.source), node(ta.target), ta.delay) for ta in net.timed_arcs],
    )


def bank_transpositions(net: Net) -> Iterable:
    """Yield coordinate maps for the transpositions (b0 bj) in every rank/group."""
    groups = range(net.bank_groups) if net.bank_groups else [None]
    for r in range(net.ranks):
        for g in groups:
            for j in range(1, net.banks_per_rank):
                yield lambda c, r=r, g=g, j=j: _swap_banks(c, r, g, 0, j)


def check_bank_symmetry(net: Net) -> bool:
    # transpositions (0 j) generate the symmetric group on bank indices
    return all(relabel_banks(net, swap) == net for swap in bank_transpositions(net))
