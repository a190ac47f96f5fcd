"""Seeded mutation campaigns over model templates.

Every edit is applied to the per-bank / per-rank templates of a
:class:`~dramnet.dsl.ModelDefinition`, never to an instantiated net, so a
mutant stays bank-symmetric by construction. A campaign compares each
mutant against its ground truth at the one- and two-bank single-rank
configurations and, optionally, at a larger configuration.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .core import ArcKind, check_bank_symmetry
from .dsl import (
    ArcDecl,
    Level,
    ModelDefinition,
    NetError,
    Scope,
    TimingConstraintDecl,
    _format_stmt,
    build_net,
    check_model,
)
from .expr import Expr
from .metrics import MINIMAL_CONFIGS, EquivalenceVerdict
from .traces import BudgetExceeded, format_trace, shortest_witness


class MutationKind(enum.Enum):
    REMOVE_INHIBITOR_ARC = "RemoveInhibitorArc"
    PERTURB_ARC_WEIGHT = "PerturbArcWeight"
    MODIFY_COORDINATE_PREDICATE = "ModifyCoordinatePredicate"
    REMOVE_REGULAR_ARC = "RemoveRegularArc"
    REMOVE_RESET_ARC = "RemoveResetArc"
    DROP_TIMED_ARC_FAMILY = "DropTimedArcFamily"
    COMPOSITE = "Composite"


PRIMITIVE_KINDS = tuple(k for k in MutationKind if k is not MutationKind.COMPOSITE)


class MutationError(Exception):
    pass


# edits ----------------------------------------------------------------------------

def _block_list(model: ModelDefinition, level: Level) -> list:
    return list(model.block(level))


def _timing_text(td: TimingConstraintDecl) -> str:
    return (f"timing {td.scope.value} [{', '.join(td.sources)}] -> "
            f"[{', '.join(td.destinations)}] : {td.delay.render()};")


@dataclass(frozen=True)
class RemoveStmt:
    kind: MutationKind
    level: Level
    index: int
    stmt: ArcDecl

    def apply(self, model):
        block = _block_list(model, self.level)
        if block[self.index] != self.stmt:
            raise MutationError("statement not found at locator")
        del block[self.index]
        return model.with_block(self.level, block)

    def revert(self, model):
        block = _block_list(model, self.level)
        block.insert(self.index, self.stmt)
        return model.with_block(self.level, block)

    def to_dict(self):
        return {"op": "remove", "block": self.level.value, "index": self.index,
                "stmt": _format_stmt(self.stmt)}


@dataclass(frozen=True)
class ReplaceStmt:
    kind: MutationKind
    level: Level
    index: int
    before: ArcDecl
    after: ArcDecl
    delta: int

    def apply(self, model):
        block = _block_list(model, self.level)
        if block[self.index] != self.before:
            raise MutationError("statement not found at locator")
        block[self.index] = self.after
        return model.with_block(self.level, block)

    def revert(self, model):
        block = _block_list(model, self.level)
        block[self.index] = self.before
        return model.with_block(self.level, block)

    def to_dict(self):
        return {"op": "reweight", "block": self.level.value, "index": self.index,
                "stmt": _format_stmt(self.before), "delta": self.delta}


@dataclass(frozen=True)
class MoveStmt:
    """Re-home a template statement between the per-bank and per-rank blocks."""

    kind: MutationKind
    src: Level
    index: int
    dst: Level
    stmt: object

    def apply(self, model):
        block = _block_list(model, self.src)
        if block[self.index] != self.stmt:
            raise MutationError("statement not found at locator")
        del block[self.index]
        model = model.with_block(self.src, block)
        return model.with_block(self.dst, _block_list(model, self.dst) + [self.stmt])

    def revert(self, model):
        target = _block_list(model, self.dst)
        if not target or target[-1] != self.stmt:
            raise MutationError("moved statement not found")
        model = model.with_block(self.dst, target[:-1])
        block = _block_list(model, self.src)
        block.insert(self.index, self.stmt)
        return model.with_block(self.src, block)

    def to_dict(self):
        return {"op": "move", "from": self.src.value, "to": self.dst.value,
                "index": self.index, "stmt": _format_stmt(self.stmt)}


@dataclass(frozen=True)
class ReplaceTiming:
    kind: MutationKind
    index: int
    before: TimingConstraintDecl
    after: TimingConstraintDecl

    def apply(self, model):
        timing = list(model.timing)
        if timing[self.index] != self.before:
            raise MutationError("timing declaration not found at locator")
        timing[self.index] = self.after
        return _with_timing(model, timing)

    def revert(self, model):
        timing = list(model.timing)
        timing[self.index] = self.before
        return _with_timing(model, timing)

    def to_dict(self):
        return {"op": "rescope", "index": self.index, "stmt": _timing_text(self.before),
                "scope": self.after.scope.value}


@dataclass(frozen=True)
class RemoveTiming:
    kind: MutationKind
    index: int
    decl: TimingConstraintDecl

    def apply(self, model):
        timing = list(model.timing)
        if timing[self.index] != self.decl:
            raise MutationError("timing declaration not found at locator")
        del timing[self.index]
        return _with_timing(model, timing)

    def revert(self, model):
        timing = list(model.timing)
        timing.insert(self.index, self.decl)
        return _with_timing(model, timing)

    def to_dict(self):
        return {"op": "drop_timing", "index": self.index, "stmt": _timing_text(self.decl)}


def _with_timing(model, timing):
    return replace(model, timing=tuple(timing))


Edit = RemoveStmt | ReplaceStmt | MoveStmt | ReplaceTiming | RemoveTiming


@dataclass(frozen=True)
class Mutation:
    kind: MutationKind
    edits: tuple = ()
    applied_symmetrically: bool = True
    note: str = ""

    def apply(self, model: ModelDefinition) -> ModelDefinition:
        for e in self.edits:
            model = e.apply(model)
        return model

    def revert(self, model: ModelDefinition) -> ModelDefinition:
        for e in reversed(self.edits):
            model = e.revert(model)
        return model

    @property
    def target(self) -> list[str]:
        return [e.to_dict()["stmt"] for e in self.edits]

    def describe(self) -> str:
        if not self.edits:
            return "identity"
        return "; ".join(f"{e.kind.value}: {_edit_text(e)}" for e in self.edits)

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "edits": [e.to_dict() for e in self.edits],
             "applied_symmetrically": self.applied_symmetrically}
        if self.note:
            d["note"] = self.note
        return d


def _edit_text(e) -> str:
    d = e.to_dict()
    extra = {k: v for k, v in d.items() if k not in ("op", "stmt", "index")}
    tail = " ".join(f"{k}={v}" for k, v in extra.items())
    return f"{d['op']} `{d['stmt']}`" + (f" ({tail})" if tail else "")


IDENTITY = Mutation(MutationKind.COMPOSITE, ())


# candidate enumeration -----------------------------------------------------------

def _valid(model: ModelDefinition) -> bool:
    if check_model(model):
        return False
    try:
        for b, r in MINIMAL_CONFIGS:
            build_net(model, b, r)
    except NetError:
        return False
    return True


_REMOVE_KIND = {
    ArcKind.INHIBITOR: MutationKind.REMOVE_INHIBITOR_ARC,
    ArcKind.REGULAR: MutationKind.REMOVE_REGULAR_ARC,
    ArcKind.RESET: MutationKind.REMOVE_RESET_ARC,
}


def _raw_candidates(model: ModelDefinition, kind: MutationKind):
    if kind in (MutationKind.REMOVE_INHIBITOR_ARC, MutationKind.REMOVE_REGULAR_ARC,
                MutationKind.REMOVE_RESET_ARC):
        for level in Level:
            for i, st in enumerate(model.block(level)):
                if isinstance(st, ArcDecl) and _REMOVE_KIND[st.kind] is kind:
                    yield RemoveStmt(kind, level, i, st)
    elif kind is MutationKind.PERTURB_ARC_WEIGHT:
        for level in Level:
            for i, st in enumerate(model.block(level)):
                if not isinstance(st, ArcDecl) or st.kind is ArcKind.RESET:
                    continue
                w = st.weight if st.weight is not None else Expr.const(1)
                for delta in (1, -1):
                    new = w + delta
                    if new.is_constant() and new.constant_value() < 1:
                        continue
                    after = ArcDecl(st.kind, st.source, st.target, new)
                    yield ReplaceStmt(kind, level, i, st, after, delta)
    elif kind is MutationKind.MODIFY_COORDINATE_PREDICATE:
        for i, td in enumerate(model.timing):
            for sc in Scope:
                if sc is not td.scope:
                    after = TimingConstraintDecl(sc, td.sources, td.destinations, td.delay, td.pos)
                    yield ReplaceTiming(kind, i, td, after)
        for src, dst in ((Level.BANK, Level.RANK), (Level.RANK, Level.BANK)):
            for i, st in enumerate(model.block(src)):
                yield MoveStmt(kind, src, i, dst, st)
    elif kind is MutationKind.DROP_TIMED_ARC_FAMILY:
        for i, td in enumerate(model.timing):
            yield RemoveTiming(kind, i, td)


class _CandidateCache:
    def __init__(self):
        self._cache: dict = {}

    def get(self, model: ModelDefinition, kind: MutationKind) -> list:
        key = (model, kind)
        if key not in self._cache:
            self._cache[key] = [e for e in _raw_candidates(model, kind) if _valid(e.apply(model))]
        return self._cache[key]


def generate_mutants(model: ModelDefinition, count: int, seed: int) -> list[Mutation]:
    """Deterministic list of ``count`` template-level mutations.

    Operators are drawn uniformly from the six primitive kinds plus
    composites of 2-3 primitives. An operator with no valid target in the
    model is substituted by another one and the substitution is noted.
    """
    if count < 1:
        raise ValueError("mutant count must be >= 1")
    rng = random.Random(f"dramnet-mutants:{seed}")
    cache = _CandidateCache()
    available = [k for k in PRIMITIVE_KINDS if cache.get(model, k)]
    if not available:
        raise MutationError("model offers no mutation targets")
    out: list[Mutation] = []
    seen: set = set()
    for _ in range(count):
        for _attempt in range(25):
            kind = rng.choice(list(MutationKind))
            note = ""
            if kind is not MutationKind.COMPOSITE and kind not in available:
                note = f"{kind.value} has no target in this model; substituted"
                kind = rng.choice(available)
            if kind is MutationKind.COMPOSITE:
                mut = _composite(model, rng, cache)
            else:
                mut = Mutation(kind, (rng.choice(cache.get(model, kind)),), note=note)
            if mut.edits not in seen:
                break
        seen.add(mut.edits)
        out.append(mut)
    return out


def _composite(model, rng, cache) -> Mutation:
    # Intermediate models are validated lazily: kinds and targets are tried
    # in a seeded random order and the first valid edit wins.
    edits = []
    m = model
    for _ in range(rng.choice((2, 3))):
        chosen = None
        for kind in rng.sample(PRIMITIVE_KINDS, len(PRIMITIVE_KINDS)):
            raw = list(_raw_candidates(m, kind))
            for e in rng.sample(raw, len(raw)):
                if _valid(e.apply(m)):
                    chosen = e
                    break
            if chosen is not None:
                break
        if chosen is None:
            break
        edits.append(chosen)
        m = chosen.apply(m)
    return Mutation(MutationKind.COMPOSITE, tuple(edits))


# campaign -------------------------------------------------------------------------

DETECTED = "detected"
EQUIVALENT = "equivalent"
UNDETECTED = "undetected_nonequivalent"
ERROR = "budget_exceeded"


def deep_check(model: ModelDefinition, mutation: Mutation, banks: int, ranks: int, k: int,
               budget: int | None = None) -> EquivalenceVerdict:
    """Bounded trace equivalence of ground truth and mutant at (banks, ranks)."""
    gt = build_net(model, banks, ranks)
    mut = build_net(mutation.apply(model), banks, ranks)
    hit = shortest_witness(gt, mut, k, budget)
    if hit is None:
        return EquivalenceVerdict(True, k)
    return EquivalenceVerdict(False, k, hit[0], hit[1])


@dataclass
class MutantRecord:
    index: int
    fixture: str
    mutation: Mutation
    status: str = ""
    witness: str | None = None
    witness_length: int | None = None
    detection_config: tuple[int, int] | None = None
    only_in: str | None = None
    bank_symmetric: bool = True
    deep: dict | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "fixture": self.fixture,
            "mutation": self.mutation.to_dict(),
            "description": self.mutation.describe(),
            "status": self.status,
            "witness": self.witness,
            "witness_length": self.witness_length,
            "detection_config": list(self.detection_config) if self.detection_config else None,
            "only_in": self.only_in,
            "bank_symmetric": self.bank_symmetric,
            "deep_check": self.deep,
            "error": self.error,
        }


def _check_mutant(job) -> MutantRecord:
    (index, fixture, model, mutation, k, deep_cfg, deep_k, want_deep, budget) = job
    rec = MutantRecord(index, fixture, mutation)
    mutant = mutation.apply(model)
    try:
        best = None
        for b, r in MINIMAL_CONFIGS:
            gt = build_net(model, b, r)
            mn = build_net(mutant, b, r)
            rec.bank_symmetric = rec.bank_symmetric and check_bank_symmetry(mn)
            hit = shortest_witness(gt, mn, k, budget)
            if hit is not None and (best is None or len(hit[0]) < len(best[0])):
                best = (hit[0], hit[1], (b, r))
        if best is not None:
            rec.status = DETECTED
            rec.witness = format_trace(best[0])
            rec.witness_length = len(best[0])
            rec.only_in = "ground_truth" if best[1] == 1 else "mutant"
            rec.detection_config = best[2]
        else:
            rec.status = EQUIVALENT
        if want_deep or rec.status == EQUIVALENT and deep_cfg is not None:
            v = deep_check(model, mutation, deep_cfg[0], deep_cfg[1], deep_k, budget)
            rec.deep = {
                "config": list(deep_cfg),
                "k": deep_k,
                "equivalent": v.equivalent,
                "witness": format_trace(v.witness) if v.witness is not None else None,
            }
            if rec.status == EQUIVALENT and not v.equivalent:
                rec.status = UNDETECTED
    except BudgetExceeded as exc:
        rec.status = ERROR
        rec.error = str(exc)
    return rec


@dataclass
class MutationCampaignReport:
    k: int
    seed: int | None
    records: list[MutantRecord] = field(default_factory=list)
    deep_config: tuple[int, int] | None = None
    deep_k: int | None = None
    deep_fraction: float = 0.0

    def _count(self, status):
        return sum(1 for r in self.records if r.status == status)

    @property
    def total_mutants(self) -> int:
        return len(self.records)

    @property
    def detected(self) -> int:
        return self._count(DETECTED)

    @property
    def equivalent_mutants(self) -> int:
        return self._count(EQUIVALENT)

    @property
    def undetected_nonequivalent(self) -> int:
        return self._count(UNDETECTED)

    @property
    def errors(self) -> int:
        return self._count(ERROR)

    @property
    def deep_checked(self) -> int:
        return sum(1 for r in self.records if r.deep is not None)

    @property
    def deep_disagreements(self) -> list[int]:
        """Mutants detected at a minimal configuration yet equivalent at the
        deep configuration."""
        return [r.index for r in self.records
                if r.status == DETECTED and r.deep is not None and r.deep["equivalent"]]

    @property
    def conjecture_supported(self) -> bool:
        return self.undetected_nonequivalent == 0

    def histogram(self) -> dict[str, dict[str, int]]:
        out: dict[str, dict[str, int]] = {}
        for r in self.records:
            row = out.setdefault(r.mutation.kind.value, {})
            row[r.status] = row.get(r.status, 0) + 1
        return {k: dict(sorted(v.items())) for k, v in sorted(out.items())}

    def summary_line(self) -> str:
        tot = self.total_mutants
        rate = self.detected / tot if tot else 0.0
        return (f"{tot} mutants: {self.detected} detected ({rate:.1%}), "
                f"{self.equivalent_mutants} equivalent, "
                f"{self.undetected_nonequivalent} undetected non-equivalent, "
                f"{self.errors} budget errors; deep-checked {self.deep_checked}")

    def to_dict(self) -> dict:
        lengths: dict[str, int] = {}
        for r in self.records:
            if r.witness_length is not None:
                key = str(r.witness_length)
                lengths[key] = lengths.get(key, 0) + 1
        return {
            "k": self.k,
            "seed": self.seed,
            "configs": [list(c) for c in MINIMAL_CONFIGS],
            "total_mutants": self.total_mutants,
            "detected": self.detected,
            "equivalent_mutants": self.equivalent_mutants,
            "undetected_nonequivalent": self.undetected_nonequivalent,
            "budget_errors": self.errors,
            "conjecture_supported": self.conjecture_supported,
            "max_witness_length": max((r.witness_length or 0 for r in self.records), default=0),
            "witness_length_histogram": dict(sorted(lengths.items())),
            "operator_histogram": self.histogram(),
            "deep_check": {
                "config": list(self.deep_config) if self.deep_config else None,
                "k": self.deep_k,
                "sample_fraction": self.deep_fraction,
                "checked": self.deep_checked,
                "disagreements": self.deep_disagreements,
            },
            "mutants": [r.to_dict() for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "fixture", "kind", "status", "witness_length", "detection_config",
                    "only_in", "deep_equivalent", "witness", "description"])
        for r in self.records:
            w.writerow([
                r.index, r.fixture, r.mutation.kind.value, r.status,
                "" if r.witness_length is None else r.witness_length,
                "" if r.detection_config is None else "x".join(map(str, r.detection_config)),
                r.only_in or "",
                "" if r.deep is None else str(r.deep["equivalent"]).lower(),
                r.witness or "",
                r.mutation.describe(),
            ])
        return buf.getvalue()


def run_campaign(model: ModelDefinition, mutations: Sequence[Mutation], k: int = 4, *,
                 fixture: str = "model", deep: bool = False,
                 deep_config: tuple[int, int] = (4, 2), deep_k: int = 5,
                 deep_fraction: float = 0.1, seed: int = 0,
                 budget: int | None = None, workers: int = 1) -> MutationCampaignReport:
    return run_pooled_campaign({fixture: (model, list(mutations))}, k, deep=deep,
                               deep_config=deep_config, deep_k=deep_k,
                               deep_fraction=deep_fraction, seed=seed,
                               budget=budget, workers=workers)


def run_pooled_campaign(work: Mapping[str, tuple[ModelDefinition, list[Mutation]]], k: int = 4, *,
                        deep: bool = False, deep_config: tuple[int, int] = (4, 2),
                        deep_k: int = 5, deep_fraction: float = 0.1, seed: int = 0,
                        budget: int | None = None, workers: int = 1) -> MutationCampaignReport:
    """Check every mutant; with ``deep`` set, every mutant that looks
    equivalent at the minimal configurations plus a seeded sample of
    ``ceil(deep_fraction * n)`` mutants is re-checked at ``deep_config``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    flat = [(fixture, model, mutation) for fixture, (model, mutations) in work.items()
            for mutation in mutations]
    sampled: set[int] = set()
    if deep:
        size = min(len(flat), math.ceil(deep_fraction * len(flat)))
        sampled = set(random.Random(f"dramnet-deep-sample:{seed}").sample(range(len(flat)), size))
    jobs = [(i, fixture, model, mutation, k, deep_config if deep else None, deep_k,
             i in sampled, budget)
            for i, (fixture, model, mutation) in enumerate(flat)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_check_mutant, jobs, chunksize=8))
    else:
        records = [_check_mutant(j) for j in jobs]
    records.sort(key=lambda r: r.index)
    return MutationCampaignReport(k, seed, records,
                                  deep_config if deep else None,
                                  deep_k if deep else None,
                                  deep_fraction if deep else 0.0)


def split_count(count: int, names: Sequence[str]) -> dict[str, int]:
    base, extra = divmod(count, len(names))
    return {n: base + (1 if i < extra else 0) for i, n in enumerate(names)}


def campaign_over(models: Mapping[str, ModelDefinition], count: int, seed: int,
                  k: int = 4, **kwargs) -> MutationCampaignReport:
    """Generate ``count`` mutants pooled across ``models`` and run them."""
    if count < 1:
        raise ValueError("mutant count must be >= 1")
    names = list(models)
    per = split_count(count, names)
    work = {n: (models[n], generate_mutants(models[n], per[n], seed)) for n in names if per[n]}
    return run_pooled_campaign(work, k, seed=seed, **kwargs)
