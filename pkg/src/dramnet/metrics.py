"""Trace-set Jaccard index, timing-constraint recall and equivalence checks."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Mapping

from .core import Net, check_bank_symmetry
from .dsl import SCOPE_ORDER, ModelDefinition, Scope, build_net, check_weight_linearity, scope_admits
from .expr import Expr
from .traces import (
    BudgetExceeded,
    Trace,
    enumerate_traces,
    exact_length_witness,
    format_trace,
    shortest_witness,
)


class ConfigMismatch(ValueError):
    pass


class EmptyGroundTruth(ValueError):
    pass


def _same_config(a: Net, b: Net):
    if a.config != b.config or a.bank_groups != b.bank_groups:
        raise ConfigMismatch(f"nets instantiated at different configurations: "
                             f"{a.config}/{a.bank_groups} vs {b.config}/{b.bank_groups}")


# Jaccard --------------------------------------------------------------------------

def jaccard_of_sets(a: frozenset, b: frozenset) -> Fraction:
    union = len(a | b)
    if union == 0:
        return Fraction(1)
    return Fraction(len(a & b), union)


def jaccard(gen: Net, gt: Net, k: int, budget: int | None = None, workers: int = 1) -> Fraction:
    _same_config(gen, gt)
    return jaccard_of_sets(enumerate_traces(gen, k, budget, workers),
                           enumerate_traces(gt, k, budget, workers))


# timing constraints ----------------------------------------------------------------

@dataclass(frozen=True)
class TimingConstraint:
    source: str
    destination: str
    scope: Scope
    expr: Expr

    def __str__(self) -> str:
        return f"{self.scope.value} {self.source} -> {self.destination} : {self.expr.render()}"

    def to_dict(self) -> dict:
        return {"source": self.source, "destination": self.destination,
                "scope": self.scope.value, "expr": self.expr.render()}


@dataclass(frozen=True)
class TimingConstraintSet:
    constraints: frozenset[TimingConstraint] = frozenset()
    # families whose scope the net's configuration cannot pin down (B = 1)
    ambiguous: frozenset[TimingConstraint] = frozenset()

    def __iter__(self):
        return iter(sorted(self.constraints, key=str))

    def __len__(self):
        return len(self.constraints)

    def __contains__(self, c):
        return c in self.constraints


def _expansion(by_cmd, src: str, dst: str, scope: Scope) -> frozenset:
    return frozenset((s.coord, d.coord) for s, d in product(by_cmd.get(src, ()), by_cmd.get(dst, ()))
                     if scope_admits(scope, s.coord, d.coord))


def extract_timing_constraints(net: Net) -> TimingConstraintSet:
    """Collapse per-coordinate timed arcs into (src, dst, scope, expr) families,
    inferring the tightest scope whose expansion covers the realized pairs."""
    by_cmd = net.transitions_by_command()
    realized: dict[tuple, set] = defaultdict(set)
    for ta in net.timed_arcs:
        realized[(ta.source.command, ta.target.command, ta.delay)].add((ta.source.coord, ta.target.coord))
    out, ambiguous = set(), set()
    for (src, dst, expr), pairs in realized.items():
        expansions = {sc: _expansion(by_cmd, src, dst, sc) for sc in SCOPE_ORDER}
        chosen = next(sc for sc in SCOPE_ORDER if pairs <= expansions[sc])
        tc = TimingConstraint(src, dst, chosen, expr)
        out.add(tc)
        if chosen in (Scope.INTRA_BANK, Scope.INTRA_BANK_GROUP):
            looser = SCOPE_ORDER[SCOPE_ORDER.index(chosen) + 1:SCOPE_ORDER.index(Scope.INTRA_RANK) + 1]
            if any(expansions[sc] == expansions[chosen] for sc in looser):
                ambiguous.add(tc)
    return TimingConstraintSet(frozenset(out), frozenset(ambiguous))


def tc_recall(gen: Net, gt: Net) -> Fraction:
    """Fraction of ground-truth constraint families present in ``gen``;
    extras in ``gen`` never lower the score."""
    tc_gt = extract_timing_constraints(gt).constraints
    if not tc_gt:
        raise EmptyGroundTruth("ground truth has no timing constraints; recall is undefined")
    tc_gen = extract_timing_constraints(gen).constraints
    return Fraction(len(tc_gen & tc_gt), len(tc_gt))


# equivalence --------------------------------------------------------------------

@dataclass(frozen=True)
class EquivalenceVerdict:
    equivalent: bool
    k: int
    witness: Trace | None = None
    side: int | None = None  # 1 or 2: the net that admits the witness

    def __bool__(self):
        return self.equivalent


def check_trace_equivalence(n1: Net, n2: Net, k: int, budget: int | None = None) -> EquivalenceVerdict:
    """k-bounded trace equivalence: Tr_j(n1) == Tr_j(n2) for every j <= k."""
    _same_config(n1, n2)
    hit = shortest_witness(n1, n2, k, budget)
    if hit is None:
        return EquivalenceVerdict(True, k)
    return EquivalenceVerdict(False, k, hit[0], hit[1])


@dataclass
class ConjectureVerdict:
    verdict: str  # "conjectured-equivalent" | "inequivalent"
    k: int
    witness: Trace | None = None
    side: int | None = None
    config: tuple[int, int] | None = None
    hypotheses: dict[str, bool] = field(default_factory=dict)

    @property
    def equivalent(self) -> bool:
        return self.verdict == "conjectured-equivalent"

    @property
    def hypotheses_met(self) -> bool:
        return all(self.hypotheses.values())

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "k": self.k,
            "config": list(self.config) if self.config else None,
            "witness": format_trace(self.witness) if self.witness is not None else None,
            "witness_in": self.side,
            "hypotheses": dict(sorted(self.hypotheses.items())),
            "hypotheses_met": self.hypotheses_met,
        }


MINIMAL_CONFIGS = ((1, 1), (2, 1))


def hypothesis_checks(name: str, model: ModelDefinition,
                      overrides: Mapping[str, int] | None = None) -> dict[str, bool]:
    out = {}
    out[f"{name}.bank_symmetry"] = all(
        check_bank_symmetry(build_net(model, b, r, overrides)) for b, r in MINIMAL_CONFIGS)
    out[f"{name}.weight_linearity"] = check_weight_linearity(model)
    return out


def minimal_config_check(m1: ModelDefinition, m2: ModelDefinition, k: int = 4,
                         overrides: Mapping[str, int] | None = None,
                         budget: int | None = None) -> ConjectureVerdict:
    """Compare Tr_k at one- and two-bank single-rank instantiations."""
    hyp = hypothesis_checks("m1", m1, overrides)
    hyp.update(hypothesis_checks("m2", m2, overrides))
    for b, r in MINIMAL_CONFIGS:
        n1 = build_net(m1, b, r, overrides)
        n2 = build_net(m2, b, r, overrides)
        hit = exact_length_witness(n1, n2, k, budget)
        if hit is not None:
            return ConjectureVerdict("inequivalent", k, hit[0], hit[1], (b, r), hyp)
    return ConjectureVerdict("conjectured-equivalent", k, hypotheses=hyp)


# combined report --------------------------------------------------------------

def _fraction_dict(f: Fraction | None):
    if f is None:
        return None
    return {"numerator": f.numerator, "denominator": f.denominator, "decimal": float(f)}


@dataclass
class ComparisonReport:
    jaccard: Fraction | None
    k: int
    config: tuple[int, int]
    tc_recall: Fraction | None
    missing_constraints: list[TimingConstraint] = field(default_factory=list)
    extra_constraints: list[TimingConstraint] = field(default_factory=list)
    witness_traces: list[tuple[Trace, str]] = field(default_factory=list)
    witness_total: int = 0
    notes: list[str] = field(default_factory=list)
    partial: bool = False

    def to_dict(self) -> dict:
        return {
            "jaccard": _fraction_dict(self.jaccard),
            "tc_recall": _fraction_dict(self.tc_recall),
            "k": self.k,
            "config": {"banks": self.config[0], "ranks": self.config[1]},
            "missing_constraints": [c.to_dict() for c in self.missing_constraints],
            "extra_constraints": [c.to_dict() for c in self.extra_constraints],
            "witness_traces": [{"trace": format_trace(t), "only_in": side}
                               for t, side in self.witness_traces],
            "witness_total": self.witness_total,
            "notes": list(self.notes),
            "partial": self.partial,
        }


def compare(gen: Net, gt: Net, k: int = 4, max_witnesses: int = 10,
            budget: int | None = None, workers: int = 1) -> ComparisonReport:
    """Jaccard on Tr_k plus timing-constraint recall, with evidence."""
    _same_config(gen, gt)
    report = ComparisonReport(None, k, gen.config, None)
    tc_gen = extract_timing_constraints(gen)
    tc_gt = extract_timing_constraints(gt)
    report.missing_constraints = sorted(tc_gt.constraints - tc_gen.constraints, key=str)
    report.extra_constraints = sorted(tc_gen.constraints - tc_gt.constraints, key=str)
    if tc_gt.constraints:
        report.tc_recall = Fraction(len(tc_gen.constraints & tc_gt.constraints), len(tc_gt))
    else:
        report.notes.append("ground truth has no timing constraints; recall undefined")
    if tc_gt.ambiguous or tc_gen.ambiguous:
        report.notes.append("scope inference ambiguous at this bank count; compare at B >= 2")
    try:
        a = enumerate_traces(gen, k, budget, workers)
        b = enumerate_traces(gt, k, budget, workers)
    except BudgetExceeded as exc:
        report.partial = True
        report.notes.append(str(exc))
        return report
    report.jaccard = jaccard_of_sets(a, b)
    diff = sorted([(t, "gen") for t in a - b] + [(t, "gt") for t in b - a],
                  key=lambda ts: format_trace(ts[0]))
    report.witness_total = len(diff)
    report.witness_traces = diff[:max_witnesses]
    return report
