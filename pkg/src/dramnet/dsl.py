"""Model-description language for DRAM Petri nets.

A model file declares per-bank, per-rank and global node templates plus
timing-constraint families::

    device mini {
      timing_params { tRCD = 3; tRP = 3..5; }
      per rank r { transition PREA; }
      per bank b {
        place ACTIVE init 0;
        transition ACT;
        inhibitor ACTIVE -> ACT;
        arc ACT -> ACTIVE;
        reset ACTIVE -> PREA(r);
      }
      timing intra_bank [ACT] -> [RD, WR] : tRCD;
    }

:func:`parse_model` turns text into a :class:`ModelDefinition`,
:func:`format_model` prints one back, and :func:`build_net` instantiates
it for a given bank/rank count.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Mapping, Union

from .core import (
    Arc,
    ArcKind,
    Coordinate,
    CoordKind,
    Net,
    NetError,
    Place,
    TimedArc,
    Transition,
)
from .expr import Expr, ExprParser, UnboundParameter


class Level(enum.Enum):
    BANK = "bank"
    RANK = "rank"
    GLOBAL = "global"


class Scope(enum.Enum):
    INTRA_BANK = "intra_bank"
    INTRA_BANK_GROUP = "intra_bank_group"
    INTRA_RANK = "intra_rank"
    GLOBAL = "global"


# tightest first
SCOPE_ORDER = (Scope.INTRA_BANK, Scope.INTRA_BANK_GROUP, Scope.INTRA_RANK, Scope.GLOBAL)

# names always bound when evaluating weight/init expressions
CONFIG_NAMES = ("B", "R", "G")


def scope_admits(scope: Scope, a: Coordinate, b: Coordinate) -> bool:
    """Coordinate-pair predicate of a timing-constraint scope."""
    if scope is Scope.GLOBAL:
        return True
    if scope is Scope.INTRA_BANK:
        return a.kind is CoordKind.BANK and a == b
    if scope is Scope.INTRA_RANK:
        return a.rank is not None and a.rank == b.rank
    return (a.rank is not None and a.rank == b.rank
            and a.group is not None and a.group == b.group)


# model definition ---------------------------------------------------------------

@dataclass(frozen=True)
class Ref:
    name: str
    qualifier: str | None = None
    pos: tuple[int, int] | None = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return self.name if self.qualifier is None else f"{self.name}({self.qualifier})"


@dataclass(frozen=True)
class PlaceDecl:
    name: str
    init: Expr = Expr()
    pos: tuple[int, int] | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class TransitionDecl:
    name: str
    pos: tuple[int, int] | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ArcDecl:
    kind: ArcKind
    source: Ref
    target: Ref
    weight: Expr | None = None  # None: implicit weight 1


Stmt = Union[PlaceDecl, TransitionDecl, ArcDecl]


@dataclass(frozen=True)
class TimingConstraintDecl:
    scope: Scope
    sources: tuple[str, ...]
    destinations: tuple[str, ...]
    delay: Expr
    pos: tuple[int, int] | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ParamRange:
    low: int
    high: int

    def __str__(self) -> str:
        return f"{self.low}..{self.high}"


@dataclass(frozen=True)
class ModelDefinition:
    name: str = ""
    params: tuple[tuple[str, int], ...] = ()
    timing_params: tuple[tuple[str, int | ParamRange], ...] = ()
    bank_var: str = "b"
    rank_var: str = "r"
    per_bank: tuple[Stmt, ...] = ()
    per_rank: tuple[Stmt, ...] = ()
    global_: tuple[Stmt, ...] = ()
    timing: tuple[TimingConstraintDecl, ...] = ()

    def block(self, level: Level) -> tuple[Stmt, ...]:
        return {Level.BANK: self.per_bank, Level.RANK: self.per_rank,
                Level.GLOBAL: self.global_}[level]

    def with_block(self, level: Level, stmts) -> ModelDefinition:
        attr = {Level.BANK: "per_bank", Level.RANK: "per_rank", Level.GLOBAL: "global_"}[level]
        return replace(self, **{attr: tuple(stmts)})

    @property
    def bank_groups(self) -> int | None:
        return dict(self.params).get("bank_groups") or None

    def timing_defaults(self) -> dict[str, int]:
        return {k: (v.low if isinstance(v, ParamRange) else v) for k, v in self.timing_params}

    def is_empty(self) -> bool:
        return not (self.params or self.timing_params or self.per_bank
                    or self.per_rank or self.global_ or self.timing)


# diagnostics ----------------------------------------------------------------------

@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str
    expected: tuple[str, ...] = ()

    def __str__(self) -> str:
        s = f"{self.line}:{self.col}: {self.message}"
        if self.expected:
            s += " (expected " + ", ".join(self.expected) + ")"
        return s


class ModelError(Exception):
    """Parse or semantic errors in a model description."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


class BuildError(NetError):
    pass


# lexer ---------------------------------------------------------------------------

_LEX = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>\#[^\n]*)"
    r"|(?P<NAT>\d+)|(?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<SYM>->|\.\.|[{}()\[\];,:=+\-*])"
)


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _LEX.match(text, pos)
        if m is None:
            raise ModelError([Diagnostic(line, pos - line_start + 1,
                                         f"unexpected character {text[pos]!r}")])
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("NAT", "IDENT", "SYM"):
            toks.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(Token("EOF", "", line, pos - line_start + 1))
    return toks


# parser -----------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self):
        t = self.tok
        return (t.kind, t.value)

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def fail(self, expected):
        t = self.tok
        found = "end of input" if t.kind == "EOF" else repr(t.value)
        raise ModelError([Diagnostic(t.line, t.col, f"syntax error at {found}",
                                     tuple(sorted(expected)))])

    def is_sym(self, s: str) -> bool:
        return self.tok.kind == "SYM" and self.tok.value == s

    def is_kw(self, s: str) -> bool:
        return self.tok.kind == "IDENT" and self.tok.value == s

    def sym(self, s: str) -> Token:
        if not self.is_sym(s):
            self.fail({f"'{s}'"})
        return self.advance()

    def kw(self, s: str) -> Token:
        if not self.is_kw(s):
            self.fail({f"'{s}'"})
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "IDENT":
            self.fail({"IDENT"})
        return self.advance()

    def nat(self) -> int:
        if self.tok.kind != "NAT":
            self.fail({"NAT"})
        return int(self.advance().value)

    def expr(self) -> Expr:
        return ExprParser(self.peek, self.advance, self.fail).parse()

    # grammar

    def model(self) -> ModelDefinition:
        if self.tok.kind == "EOF":
            return ModelDefinition()
        self.kw("device")
        name = self.ident().value
        self.sym("{")
        params: list = []
        tparams: list = []
        blocks = {Level.BANK: [], Level.RANK: [], Level.GLOBAL: []}
        bank_var = rank_var = None
        timing: list = []
        while not self.is_sym("}"):
            if self.is_kw("params"):
                params += self.params()
            elif self.is_kw("timing_params"):
                tparams += self.timing_params()
            elif self.is_kw("per"):
                start = self.advance()
                if self.is_kw("bank"):
                    self.advance()
                    var = self.ident().value
                    if bank_var not in (None, var):
                        self._var_clash(start, "bank", bank_var, var)
                    bank_var = var
                    blocks[Level.BANK] += self.block()
                elif self.is_kw("rank"):
                    self.advance()
                    var = self.ident().value
                    if rank_var not in (None, var):
                        self._var_clash(start, "rank", rank_var, var)
                    rank_var = var
                    blocks[Level.RANK] += self.block()
                else:
                    self.fail({"'bank'", "'rank'"})
            elif self.is_kw("global"):
                self.advance()
                blocks[Level.GLOBAL] += self.block()
            elif self.is_kw("timing"):
                timing.append(self.timing())
            else:
                self.fail({"'params'", "'timing_params'", "'per'", "'global'", "'timing'", "'}'"})
        self.sym("}")
        if self.tok.kind != "EOF":
            self.fail({"end of input"})
        return ModelDefinition(
            name=name,
            params=tuple(params),
            timing_params=tuple(tparams),
            bank_var=bank_var or "b",
            rank_var=rank_var or "r",
            per_bank=tuple(blocks[Level.BANK]),
            per_rank=tuple(blocks[Level.RANK]),
            global_=tuple(blocks[Level.GLOBAL]),
            timing=tuple(timing),
        )

    def _var_clash(self, tok, level, old, new):
        raise ModelError([Diagnostic(tok.line, tok.col,
                                     f"per {level} variable {new!r} conflicts with earlier {old!r}")])

    def params(self):
        self.advance()
        self.sym("{")
        out = []
        while not self.is_sym("}"):
            name = self.ident().value
            self.sym("=")
            out.append((name, self.nat()))
            self.sym(";")
        self.advance()
        return out

    def timing_params(self):
        self.advance()
        self.sym("{")
        out = []
        while not self.is_sym("}"):
            name = self.ident().value
            self.sym("=")
            low = self.nat()
            value: int | ParamRange = low
            if self.is_sym(".."):
                self.advance()
                value = ParamRange(low, self.nat())
            out.append((name, value))
            self.sym(";")
        self.advance()
        return out

    def block(self) -> list[Stmt]:
        self.sym("{")
        out: list[Stmt] = []
        while not self.is_sym("}"):
            out.append(self.stmt())
        self.advance()
        return out

    def stmt(self) -> Stmt:
        t = self.tok
        if self.is_kw("place"):
            self.advance()
            name = self.ident().value
            self.kw("init")
            init = self.expr()
            self.sym(";")
            return PlaceDecl(name, init, pos=(t.line, t.col))
        if self.is_kw("transition"):
            self.advance()
            name = self.ident().value
            self.sym(";")
            return TransitionDecl(name, pos=(t.line, t.col))
        for kind in ArcKind:
            if self.is_kw(kind.value):
                self.advance()
                src = self.ref()
                self.sym("->")
                dst = self.ref()
                weight = None
                if kind is not ArcKind.RESET and self.is_kw("weight"):
                    self.advance()
                    weight = self.expr()
                self.sym(";")
                return ArcDecl(kind, src, dst, weight)
        self.fail({"'place'", "'transition'", "'arc'", "'inhibitor'", "'reset'", "'}'"})
        raise AssertionError  # pragma: no cover

    def ref(self) -> Ref:
        t = self.ident()
        qual = None
        if self.is_sym("("):
            self.advance()
            qual = self.ident().value
            self.sym(")")
        return Ref(t.value, qual, pos=(t.line, t.col))

    def timing(self) -> TimingConstraintDecl:
        t = self.advance()
        scope_tok = self.ident()
        try:
            scope = Scope(scope_tok.value)
        except ValueError:
            self.i -= 1
            self.fail({f"'{s.value}'" for s in Scope})
        srcs = self.label_list()
        self.sym("->")
        dsts = self.label_list()
        self.sym(":")
        delay = self.expr()
        self.sym(";")
        return TimingConstraintDecl(scope, srcs, dsts, delay, pos=(t.line, t.col))

    def label_list(self) -> tuple[str, ...]:
        self.sym("[")
        out = [self.ident().value]
        while self.is_sym(","):
            self.advance()
            out.append(self.ident().value)
        self.sym("]")
        return tuple(out)


# semantic checks -------------------------------------------------------------------

_LOOKUP = {
    Level.BANK: (Level.BANK, Level.RANK, Level.GLOBAL),
    Level.RANK: (Level.RANK, Level.GLOBAL),
    Level.GLOBAL: (Level.GLOBAL,),
}


def _declarations(model: ModelDefinition):
    """Map level -> name -> decl, plus duplicate diagnostics."""
    decls: dict[Level, dict[str, Stmt]] = {lv: {} for lv in Level}
    diags = []
    for level in Level:
        for st in model.block(level):
            if isinstance(st, ArcDecl):
                continue
            if st.name in decls[level]:
                line, col = st.pos or (0, 0)
                diags.append(Diagnostic(line, col,
                                        f"duplicate declaration of {st.name!r} in {level.value} block"))
            else:
                decls[level][st.name] = st
    return decls, diags


def resolve(model: ModelDefinition, decls, level: Level, ref: Ref):
    """Return (level, decl) that ``ref`` names from within a ``level`` block."""
    levels = _LOOKUP[level]
    if ref.qualifier is not None:
        qual = {model.bank_var: Level.BANK, model.rank_var: Level.RANK}.get(ref.qualifier)
        if qual is None:
            raise KeyError(f"unknown coordinate variable {ref.qualifier!r} in {ref}")
        if qual not in levels:
            raise KeyError(f"{ref} is not visible from a {level.value} block")
        levels = (qual,)
    for lv in levels:
        if ref.name in decls[lv]:
            return lv, decls[lv][ref.name]
    raise KeyError(f"reference to undeclared label {ref.name!r}")


def check_model(model: ModelDefinition) -> list[Diagnostic]:
    """Semantic diagnostics: duplicates, dangling references, unbound names."""
    decls, diags = _declarations(model)
    param_names = {k for k, _ in model.params} | set(CONFIG_NAMES)
    timing_names = {k for k, _ in model.timing_params}
    for level in Level:
        for st in model.block(level):
            if isinstance(st, PlaceDecl):
                for n in sorted(st.init.names() - param_names):
                    line, col = st.pos or (0, 0)
                    diags.append(Diagnostic(line, col, f"unbound parameter {n!r} in init of {st.name}"))
                continue
            if not isinstance(st, ArcDecl):
                continue
            ends = []
            for ref in (st.source, st.target):
                try:
                    ends.append(resolve(model, decls, level, ref)[1])
                except KeyError as exc:
                    line, col = ref.pos or (0, 0)
                    diags.append(Diagnostic(line, col, exc.args[0]))
            line, col = st.source.pos or (0, 0)
            if len(ends) == 2:
                a, b = ends
                if st.kind is ArcKind.REGULAR:
                    ok = (isinstance(a, PlaceDecl) and isinstance(b, TransitionDecl)) or (
                        isinstance(a, TransitionDecl) and isinstance(b, PlaceDecl))
                else:
                    ok = isinstance(a, PlaceDecl) and isinstance(b, TransitionDecl)
                if not ok:
                    diags.append(Diagnostic(line, col,
                                            f"{st.kind.value} {st.source} -> {st.target} "
                                            "does not connect a place and a transition"))
            if st.weight is not None:
                for n in sorted(st.weight.names() - param_names):
                    diags.append(Diagnostic(line, col, f"unbound parameter {n!r} in arc weight"))
    commands = {name for lv in Level for name, d in decls[lv].items()
                if isinstance(d, TransitionDecl)}
    for td in model.timing:
        line, col = td.pos or (0, 0)
        for n in sorted(td.delay.names() - timing_names):
            diags.append(Diagnostic(line, col, f"unbound timing parameter {n!r}"))
        for c in td.sources + td.destinations:
            if c not in commands:
                diags.append(Diagnostic(line, col, f"unknown command {c!r} in timing constraint"))
    return diags


def parse_model(text: str) -> ModelDefinition:
    """Parse model text; raises :class:`ModelError` carrying all diagnostics."""
    model = _Parser(text).model()
    diags = check_model(model)
    if diags:
        raise ModelError(diags)
    return model


def load_model(path) -> ModelDefinition:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


# printer ------------------------------------------------------------------------

def _format_stmt(st: Stmt) -> str:
    if isinstance(st, PlaceDecl):
        return f"place {st.name} init {st.init.render()};"
    if isinstance(st, TransitionDecl):
        return f"transition {st.name};"
    w = "" if st.weight is None else f" weight {st.weight.render()}"
    return f"{st.kind.value} {st.source} -> {st.target}{w};"


def format_model(model: ModelDefinition) -> str:
    """Pretty-print ``model``; ``parse_model(format_model(m)) == m``."""
    if model.is_empty() and not model.name:
        return ""
    out = [f"device {model.name} {{"]
    if model.params:
        out.append("  params {")
        out += [f"    {k} = {v};" for k, v in model.params]
        out.append("  }")
    if model.timing_params:
        out.append("  timing_params {")
        out += [f"    {k} = {v};" for k, v in model.timing_params]
        out.append("  }")
    for header, stmts in ((f"per rank {model.rank_var}", model.per_rank),
                          (f"per bank {model.bank_var}", model.per_bank),
                          ("global", model.global_)):
        out.append(f"  {header} {{")
        out += [f"    {_format_stmt(st)}" for st in stmts]
        out.append("  }")
    for td in model.timing:
        out.append(f"  timing {td.scope.value} [{', '.join(td.sources)}] -> "
                   f"[{', '.join(td.destinations)}] : {td.delay.render()};")
    out.append("}")
    return "\n".join(out) + "\n"


# instantiation ------------------------------------------------------------------------

def bind_timing_params(model: ModelDefinition, overrides: Mapping[str, int] | None = None) -> dict[str, int]:
    binding = model.timing_defaults()
    for k, v in (overrides or {}).items():
        if k not in binding:
            raise BuildError(f"override for unknown timing parameter {k!r}")
        binding[k] = int(v)
    return binding


def build_net(model: ModelDefinition, banks: int, ranks: int,
              overrides: Mapping[str, int] | None = None) -> Net:
    """Instantiate ``model`` with ``banks`` banks per rank (per group when the
    model declares ``bank_groups``) and ``ranks`` ranks."""
    if banks < 1 or ranks < 1:
        raise BuildError(f"bank and rank counts must be >= 1, got B={banks}, R={ranks}")
    decls, diags = _declarations(model)
    if diags:
        raise BuildError("; ".join(d.message for d in diags))
    groups = model.bank_groups
    env = dict(model.params)
    env.update(B=banks, R=ranks, G=groups or 1)

    def evaluate(e: Expr, what: str) -> int:
        try:
            return e.evaluate(env)
        except UnboundParameter as exc:
            raise BuildError(f"{what}: {exc}") from None

    contexts: dict[Level, list[dict[Level, Coordinate]]] = {
        Level.GLOBAL: [{Level.GLOBAL: Coordinate.device()}],
        Level.RANK: [],
        Level.BANK: [],
    }
    for r in range(ranks):
        rc = Coordinate.for_rank(r)
        contexts[Level.RANK].append({Level.RANK: rc, Level.GLOBAL: Coordinate.device()})
        for g in (range(groups) if groups else [None]):
            for b in range(banks):
                contexts[Level.BANK].append({Level.BANK: Coordinate.for_bank(r, b, g),
                                             Level.RANK: rc, Level.GLOBAL: Coordinate.device()})

    places: list[Place] = []
    transitions: list[Transition] = []
    for level in Level:
        for st in model.block(level):
            if isinstance(st, PlaceDecl):
                init = evaluate(st.init, f"init of {st.name}")
                if init < 0:
                    raise BuildError(f"negative initial marking for {st.name}")
                places += [Place(st.name, ctx[level], init) for ctx in contexts[level]]
            elif isinstance(st, TransitionDecl):
                transitions += [Transition(st.name, ctx[level]) for ctx in contexts[level]]

    arcs: list[Arc] = []
    for level in Level:
        for st in model.block(level):
            if not isinstance(st, ArcDecl):
                continue
            try:
                (ls, ds), (lt, dt) = (resolve(model, decls, level, st.source),
                                      resolve(model, decls, level, st.target))
            except KeyError as exc:
                raise BuildError(exc.args[0]) from None
            weight = 1 if st.weight is None else evaluate(st.weight, "arc weight")
            if weight < 1 and st.kind is not ArcKind.RESET:
                raise BuildError(f"arc weight {weight} < 1 for {_format_stmt(st)}")
            for ctx in contexts[level]:
                src = _node(ds, ctx[ls])
                dst = _node(dt, ctx[lt])
                arcs.append(Arc(st.kind, src, dst, weight))

    binding = bind_timing_params(model, overrides)
    net = Net(banks, ranks, groups, tuple(places), tuple(transitions),
              tuple(dict.fromkeys(arcs)), (), binding)
    timed = expand_timing_constraints(model, net)
    net = net.replace(timed_arcs=sorted(timed, key=str))
    for ta in net.timed_arcs:
        try:
            d = net.delay(ta)
        except UnboundParameter as exc:
            raise BuildError(f"timing constraint {ta}: {exc}") from None
        if d < 1:
            raise BuildError(f"timing constraint {ta} has delay {d} < 1")
    return net


def _node(decl, coord):
    if isinstance(decl, PlaceDecl):
        return Place(decl.name, coord)
    return Transition(decl.name, coord)


def expand_timing_constraints(model: ModelDefinition, net: Net) -> frozenset[TimedArc]:
    """Cartesian-product expansion of every timing declaration over ``net``."""
    by_cmd = net.transitions_by_command()
    out: set[TimedArc] = set()
    for td in model.timing:
        for c in td.sources + td.destinations:
            if c not in by_cmd:
                raise BuildError(f"unknown command {c!r} in timing constraint")
        for s_cmd, d_cmd in product(td.sources, td.destinations):
            for s, d in product(by_cmd[s_cmd], by_cmd[d_cmd]):
                if scope_admits(td.scope, s.coord, d.coord):
                    out.add(TimedArc(s, d, td.delay))
    return frozenset(out)


# hypothesis check: weights linear in B ---------------------------------------------

def _level_of(coord: Coordinate) -> str:
    return coord.kind.value


def arc_weight_families(net: Net) -> dict[tuple, set[int]]:
    """Group arcs by (kind, endpoint labels and levels), coordinates dropped."""
    fam: dict[tuple, set[int]] = {}
    for a in net.arcs:
        key = (a.kind.value,
               type(a.source).__name__, _label(a.source), _level_of(a.source.coord),
               type(a.target).__name__, _label(a.target), _level_of(a.target.coord))
        fam.setdefault(key, set()).add(a.weight)
    return fam


def _label(n) -> str:
    return n.name if isinstance(n, Place) else n.command


def weight_fits(model: ModelDefinition, banks=(1, 2, 3)) -> dict[tuple, tuple[int, int] | None]:
    """Fit each arc family's weight to ``alpha*B + beta``; None when no exact
    natural-coefficient fit exists."""
    per_b = [arc_weight_families(build_net(model, b, 1)) for b in banks]
    fits: dict[tuple, tuple[int, int] | None] = {}
    for key in sorted(set().union(*per_b)):
        ws = [fam.get(key) for fam in per_b]
        if any(w is None or len(w) != 1 for w in ws):
            fits[key] = None
            continue
        w1, w2, w3 = (next(iter(w)) for w in ws)
        alpha = w2 - w1
        beta = w1 - alpha
        if w3 - w2 != alpha or alpha < 0 or beta < 0:
            fits[key] = None
        else:
            fits[key] = (alpha, beta)
    return fits


def check_weight_linearity(model: ModelDefinition) -> bool:
    return all(f is not None for f in weight_fits(model).values())
