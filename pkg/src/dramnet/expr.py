"""Symbolic arithmetic over named parameters.

Expressions are stored in a canonical polynomial form so that two
expressions compare equal iff their normal forms are identical. The
normal form is exact for the commutative-ring identities of ``+``, ``-``
and ``*`` and for associativity, commutativity and idempotence of
``max``; it does not distribute ``+`` over ``max``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

Atom = Union[str, "MaxAtom"]
Monomial = tuple  # sorted tuple of atoms, with repetition for powers


class ExprError(ValueError):
    pass


class UnboundParameter(ExprError):
    def __init__(self, names):
        self.names = sorted(names)
        super().__init__("unbound parameter(s): " + ", ".join(self.names))


def _atom_key(atom: Atom) -> str:
    return atom if isinstance(atom, str) else atom.render()


def _mono_key(mono: Monomial):
    return (-len(mono), tuple(_atom_key(a) for a in mono))


@dataclass(frozen=True)
class MaxAtom:
    """``max`` of two or more distinct, non-constant-only expressions."""

    args: tuple  # tuple[Expr, ...], sorted by rendering

    def render(self) -> str:
        return "max(" + ", ".join(a.render() for a in self.args) + ")"


@dataclass(frozen=True)
class Expr:
    """Immutable polynomial with integer coefficients over atoms.

    ``terms`` maps each monomial to a non-zero coefficient and is kept as a
    sorted tuple so that equality and hashing are structural.
    """

    terms: tuple = ()

    # construction -------------------------------------------------------

    @classmethod
    def const(cls, value: int) -> Expr:
        return cls._from_dict({(): int(value)})

    @classmethod
    def var(cls, name: str) -> Expr:
        return cls._from_dict({(name,): 1})

    @classmethod
    def _from_dict(cls, d: dict) -> Expr:
        items = [(m, c) for m, c in d.items() if c != 0]
        items.sort(key=lambda mc: _mono_key(mc[0]))
        return cls(tuple(items))

    @classmethod
    def maximum(cls, *args: Expr) -> Expr:
        flat: list[Expr] = []
        for a in args:
            inner = a._as_single_max()
            flat.extend(inner.args if inner is not None else [a])
        consts = [a.constant_value() for a in flat if a.is_constant()]
        symbolic = {a for a in flat if not a.is_constant()}
        if consts:
            c = cls.const(max(consts))
            if not symbolic:
                return c
            symbolic.add(c)
        if len(symbolic) == 1:
            return next(iter(symbolic))
        ordered = tuple(sorted(symbolic, key=lambda e: e.render()))
        return cls._from_dict({(MaxAtom(ordered),): 1})

    def _as_single_max(self) -> MaxAtom | None:
        if len(self.terms) == 1:
            mono, coef = self.terms[0]
            if coef == 1 and len(mono) == 1 and isinstance(mono[0], MaxAtom):
                return mono[0]
        return None

    # arithmetic -----------------------------------------------------------

    def _dict(self) -> dict:
        return dict(self.terms)

    def __add__(self, other) -> Expr:
        other = _lift(other)
        d = self._dict()
        for m, c in other.terms:
            d[m] = d.get(m, 0) + c
        return Expr._from_dict(d)

    __radd__ = __add__

    def __neg__(self) -> Expr:
        return Expr._from_dict({m: -c for m, c in self.terms})

    def __sub__(self, other) -> Expr:
        return self + (-_lift(other))

    def __rsub__(self, other) -> Expr:
        return _lift(other) - self

    def __mul__(self, other) -> Expr:
        other = _lift(other)
        d: dict = {}
        for m1, c1 in self.terms:
            for m2, c2 in other.terms:
                m = tuple(sorted(m1 + m2, key=_atom_key))
                d[m] = d.get(m, 0) + c1 * c2
        return Expr._from_dict(d)

    __rmul__ = __mul__

    # queries ----------------------------------------------------------------

    def is_constant(self) -> bool:
        return all(m == () for m, _ in self.terms)

    def constant_value(self) -> int:
        if not self.is_constant():
            raise ExprError(f"expression {self.render()!r} is not constant")
        return self.terms[0][1] if self.terms else 0

    def names(self) -> frozenset[str]:
        out: set[str] = set()
        for mono, _ in self.terms:
            for atom in mono:
                if isinstance(atom, str):
                    out.add(atom)
                else:
                    for a in atom.args:
                        out |= a.names()
        return frozenset(out)

    def evaluate(self, binding: Mapping[str, int]) -> int:
        missing = self.names() - set(binding)
        if missing:
            raise UnboundParameter(missing)
        total = 0
        for mono, coef in self.terms:
            v = coef
            for atom in mono:
                if isinstance(atom, str):
                    v *= binding[atom]
                else:
                    v *= max(a.evaluate(binding) for a in atom.args)
            total += v
        return total

    def render(self) -> str:
        if not self.terms:
            return "0"
        parts: list[str] = []
        for i, (mono, coef) in enumerate(self.terms):
            mag = abs(coef)
            body = "*".join(_atom_key(a) for a in mono)
            if not body:
                text = str(mag)
            elif mag == 1:
                text = body
            else:
                text = f"{mag}*{body}"
            if i == 0:
                parts.append(("-" if coef < 0 else "") + text)
            else:
                parts.append((" - " if coef < 0 else " + ") + text)
        return "".join(parts)

    def __str__(self) -> str:
        return self.render()

    def __repr__(self) -> str:
        return f"Expr({self.render()!r})"


def _lift(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, int):
        return Expr.const(x)
    raise TypeError(f"cannot use {type(x).__name__} in an expression")


# parsing -----------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


def tokenize_expr(text: str) -> list[tuple[str, str]]:
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # pragma: no cover - regex always matches a char
            break
        num, ident, sym = m.groups()
        if num is not None:
            toks.append(("NAT", num))
        elif ident is not None:
            toks.append(("IDENT", ident))
        elif sym is not None and not sym.isspace():
            toks.append(("SYM", sym))
        pos = m.end()
    return toks


class ExprParser:
    """Precedence-climbing parser over a token cursor.

    ``peek``/``advance`` are supplied by the owner so the model parser can
    embed expressions in its own token stream.
    """

    def __init__(self, peek, advance, fail):
        self.peek = peek
        self.advance = advance
        self.fail = fail

    def parse(self) -> Expr:
        return self._sum()

    def _sum(self) -> Expr:
        left = self._product()
        while True:
            kind, val = self.peek()
            if kind == "SYM" and val in "+-":
                self.advance()
                right = self._product()
                left = left + right if val == "+" else left - right
            else:
                return left

    def _product(self) -> Expr:
        left = self._unary()
        while self.peek() == ("SYM", "*"):
            self.advance()
            left = left * self._unary()
        return left

    def _unary(self) -> Expr:
        if self.peek() == ("SYM", "-"):
            self.advance()
            return -self._unary()
        return self._atom()

    def _atom(self) -> Expr:
        kind, val = self.peek()
        if kind == "NAT":
            self.advance()
            return Expr.const(int(val))
        if kind == "IDENT" and val == "max":
            self.advance()
            self._expect("(")
            args = [self._sum()]
            while self.peek() == ("SYM", ","):
                self.advance()
                args.append(self._sum())
            self._expect(")")
            if len(args) < 2:
                self.fail({"','"})
            return Expr.maximum(*args)
        if kind == "IDENT":
            self.advance()
            return Expr.var(val)
        if (kind, val) == ("SYM", "("):
            self.advance()
            e = self._sum()
            self._expect(")")
            return e
        self.fail({"NAT", "IDENT", "'max'", "'('"})
        raise AssertionError("fail() must raise")  # pragma: no cover

    def _expect(self, sym: str) -> None:
        if self.peek() != ("SYM", sym):
            self.fail({f"'{sym}'"})
        self.advance()


def parse_expr(text: str) -> Expr:
    """Parse a standalone expression such as ``"max(tRRD, 4) + tCK"``."""
    toks = tokenize_expr(text) + [("EOF", "")]
    pos = 0

    def peek():
        return toks[pos]

    def advance():
        nonlocal pos
        pos += 1

    def fail(expected):
        raise ExprError(
            f"bad expression {text!r} at token {toks[pos][1]!r}; "
            f"expected one of {sorted(expected)}"
        )

    e = ExprParser(peek, advance, fail).parse()
    if toks[pos][0] != "EOF":
        fail({"end of expression"})
    return e
