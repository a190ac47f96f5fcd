"""Command-line front end.

Exit codes: 0 success, 1 validation failure (or inequivalence / an
undetected non-equivalent mutant), 2 input or parse error, 3 expansion
budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from . import fixtures
from .core import NetError, check_bank_symmetry, validate_structure
from .dsl import ModelDefinition, ModelError, build_net, check_weight_linearity, load_model
from .metrics import (
    EmptyGroundTruth,
    compare,
    extract_timing_constraints,
    minimal_config_check,
)
from .mutate import campaign_over
from .traces import (
    BUDGET_ENV,
    BudgetExceeded,
    enumerate_timed_traces,
    enumerate_traces,
    find_deadlocks,
    format_trace,
    serialize_timed_traces,
    serialize_traces,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    models: list[str] = field(default_factory=list)
    banks: int = 2
    ranks: int = 1
    k: int = 4
    overrides: dict[str, int] = field(default_factory=dict)
    budget: int | None = None
    workers: int = 1
    fmt: str = "human"
    seed: int = 0


def _parse_set(item: str) -> tuple[str, int]:
    name, sep, value = item.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {item!r}")
    try:
        return name.strip(), int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"value of {name} must be an integer") from None


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _load(source: str) -> ModelDefinition:
    """A model file path, or the name of a bundled fixture."""
    if os.path.exists(source):
        try:
            return load_model(source)
        except ModelError as exc:
            raise InputError("\n".join(f"{source}:{d}" for d in exc.diagnostics)) from None
        except (OSError, UnicodeDecodeError) as exc:
            raise InputError(f"{source}: {exc}") from None
    if source in fixtures.NAMES:
        return fixtures.load(source)
    raise InputError(f"{source}: no such file or bundled fixture "
                     f"(fixtures: {', '.join(fixtures.NAMES)})")


def _build(model: ModelDefinition, cfg: RunConfig, source: str):
    try:
        return build_net(model, cfg.banks, cfg.ranks, cfg.overrides)
    except NetError as exc:
        raise InputError(f"{source}: {exc}") from None


def _config(args) -> RunConfig:
    return RunConfig(
        banks=getattr(args, "banks", 2),
        ranks=getattr(args, "ranks", 1),
        k=getattr(args, "k", 4),
        overrides=dict(getattr(args, "set", None) or []),
        budget=args.budget,
        workers=args.workers,
        fmt=args.format,
        seed=getattr(args, "seed", 0),
    )


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _frac(f) -> str:
    return "undefined" if f is None else f"{f.numerator}/{f.denominator} ({float(f):.4f})"


# subcommands --------------------------------------------------------------------

def cmd_validate(args) -> int:
    cfg = _config(args)
    results = []
    for source in args.models:
        model = _load(source)
        net = _build(model, cfg, source)
        problems = validate_structure(net).problems()
        for trace, _ in find_deadlocks(net, args.depth, cfg.budget):
            problems.append(f"deadlock after [{format_trace(trace)}]")
        if not check_bank_symmetry(net):
            problems.append("net is not invariant under bank permutations")
        if not check_weight_linearity(model):
            problems.append("arc weights are not linear in the bank count")
        results.append({"model": source, "config": [cfg.banks, cfg.ranks],
                        "ok": not problems, "problems": problems})
    if cfg.fmt == "json":
        _emit(args, _dump(results))
    elif cfg.fmt == "csv":
        rows = [["model", "ok", "problem"]]
        for r in results:
            rows += [[r["model"], str(r["ok"]).lower(), p] for p in r["problems"] or [""]]
        _emit(args, _csv(rows))
    else:
        out = []
        for r in results:
            out.append(f"{r['model']}: {'ok' if r['ok'] else 'FAILED'}")
            out += [f"  {p}" for p in r["problems"]]
        _emit(args, "\n".join(out) + "\n")
    return EXIT_OK if all(r["ok"] for r in results) else EXIT_INVALID


def cmd_enumerate(args) -> int:
    cfg = _config(args)
    net = _build(_load(args.model), cfg, args.model)
    if args.timed:
        text = serialize_timed_traces(enumerate_timed_traces(net, cfg.k, cfg.budget, cfg.workers))
    else:
        text = serialize_traces(enumerate_traces(net, cfg.k, cfg.budget, cfg.workers))
    _emit(args, text)
    return EXIT_OK


def _human_report(d: dict) -> str:
    def frac(x):
        return _frac(None if x is None else Fraction(x["numerator"], x["denominator"]))

    out = [f"config: B={d['config']['banks']} R={d['config']['ranks']}  k={d['k']}",
           f"jaccard: {frac(d['jaccard'])}",
           f"tc_recall: {frac(d['tc_recall'])}"]
    for key, title in (("missing_constraints", "missing"), ("extra_constraints", "extra")):
        for c in d[key]:
            out.append(f"{title}: {c['scope']} {c['source']} -> {c['destination']} : {c['expr']}")
    if d["witness_total"]:
        out.append(f"differing traces: {d['witness_total']} (showing {len(d['witness_traces'])})")
        out += [f"  only in {w['only_in']}: {w['trace']}" for w in d["witness_traces"]]
    out += [f"note: {n}" for n in d["notes"]]
    if d["partial"]:
        out.append("PARTIAL: trace comparison aborted")
    return "\n".join(out) + "\n"


def cmd_compare(args) -> int:
    cfg = _config(args)
    gen = _build(_load(args.gen), cfg, args.gen)
    gt = _build(_load(args.gt), cfg, args.gt)
    report = compare(gen, gt, cfg.k, args.max_witnesses, cfg.budget, cfg.workers)
    d = report.to_dict()
    if cfg.fmt == "json":
        _emit(args, _dump(d))
    elif cfg.fmt == "csv":
        rows = [["kind", "only_in", "value"],
                ["jaccard", "", _frac(report.jaccard)],
                ["tc_recall", "", _frac(report.tc_recall)]]
        rows += [["witness", w["only_in"], w["trace"]] for w in d["witness_traces"]]
        rows += [["missing", "gt", str(c)] for c in report.missing_constraints]
        rows += [["extra", "gen", str(c)] for c in report.extra_constraints]
        _emit(args, _csv(rows))
    else:
        _emit(args, _human_report(d))
    return EXIT_BUDGET if report.partial else EXIT_OK


def cmd_timing_recall(args) -> int:
    cfg = _config(args)
    gen = _build(_load(args.gen), cfg, args.gen)
    gt = _build(_load(args.gt), cfg, args.gt)
    tc_gt = extract_timing_constraints(gt)
    if not tc_gt.constraints:
        raise InputError(str(EmptyGroundTruth("ground truth has no timing constraints")))
    tc_gen = extract_timing_constraints(gen)
    hit = tc_gen.constraints & tc_gt.constraints
    recall = Fraction(len(hit), len(tc_gt))
    missing = sorted(tc_gt.constraints - tc_gen.constraints, key=str)
    extra = sorted(tc_gen.constraints - tc_gt.constraints, key=str)
    if cfg.fmt == "json":
        _emit(args, _dump({
            "tc_recall": {"numerator": recall.numerator, "denominator": recall.denominator,
                          "decimal": float(recall)},
            "missing_constraints": [c.to_dict() for c in missing],
            "extra_constraints": [c.to_dict() for c in extra],
            "ambiguous": sorted(str(c) for c in tc_gt.ambiguous | tc_gen.ambiguous),
        }))
    elif cfg.fmt == "csv":
        rows = [["status", "scope", "source", "destination", "expr"]]
        for status, cs in (("matched", sorted(hit, key=str)), ("missing", missing), ("extra", extra)):
            rows += [[status, c.scope.value, c.source, c.destination, c.expr.render()] for c in cs]
        _emit(args, _csv(rows))
    else:
        out = [f"tc_recall: {_frac(recall)}"]
        out += [f"missing: {c}" for c in missing]
        out += [f"extra: {c}" for c in extra]
        if tc_gt.ambiguous or tc_gen.ambiguous:
            out.append("note: scope inference ambiguous at this bank count; use B >= 2")
        _emit(args, "\n".join(out) + "\n")
    return EXIT_OK


def cmd_conjecture_check(args) -> int:
    cfg = _config(args)
    m1, m2 = _load(args.m1), _load(args.m2)
    try:
        verdict = minimal_config_check(m1, m2, cfg.k, cfg.overrides, cfg.budget)
    except NetError as exc:
        raise InputError(str(exc)) from None
    d = verdict.to_dict()
    if cfg.fmt in ("json", "csv"):
        _emit(args, _dump(d))
    else:
        out = [f"verdict: {d['verdict']} (k={d['k']})"]
        if d["witness"] is not None:
            cfg_s = "B={} R={}".format(*d["config"])
            out.append(f"witness at {cfg_s}, only in m{d['witness_in']}: {d['witness']}")
        for name, ok in d["hypotheses"].items():
            out.append(f"hypothesis {name}: {'holds' if ok else 'VIOLATED'}")
        _emit(args, "\n".join(out) + "\n")
    return EXIT_OK if verdict.equivalent else EXIT_INVALID


def cmd_mutate(args) -> int:
    cfg = _config(args)
    sources = args.models or list(fixtures.NAMES)
    models = {source: _load(source) for source in sources}
    report = campaign_over(models, args.count, cfg.seed, cfg.k,
                           deep=args.deep_check, deep_fraction=args.deep_fraction,
                           budget=cfg.budget, workers=cfg.workers)
    if cfg.fmt == "json":
        _emit(args, report.to_json())
    elif cfg.fmt == "csv":
        _emit(args, report.to_csv())
    else:
        out = [report.summary_line()]
        for kind, row in report.histogram().items():
            out.append(f"  {kind}: " + ", ".join(f"{k}={v}" for k, v in row.items()))
        for r in report.records:
            if r.status == "undetected_nonequivalent":
                out.append(f"COUNTEREXAMPLE #{r.index} ({r.fixture}): {r.mutation.describe()}; "
                           f"deep witness {r.deep['witness']}")
        _emit(args, "\n".join(out) + "\n")
    if args.format != "human":
        sys.stderr.write(report.summary_line() + "\n")
    return EXIT_OK if report.conjecture_supported else EXIT_INVALID


# parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--budget", type=_positive, default=None,
                        help=f"expansion budget (default: ${BUDGET_ENV} or 10^7)")
    common.add_argument("--workers", type=_positive, default=1)
    common.add_argument("--format", choices=("human", "json", "csv"), default="human")
    common.add_argument("-o", "--output", help="write the report here instead of stdout")

    cfg = argparse.ArgumentParser(add_help=False)
    cfg.add_argument("-B", "--banks", type=_positive, default=2)
    cfg.add_argument("-R", "--ranks", type=_positive, default=1)
    cfg.add_argument("--set", type=_parse_set, action="append", metavar="NAME=VALUE",
                     help="pin a timing parameter (repeatable)")

    kflag = argparse.ArgumentParser(add_help=False)
    kflag.add_argument("-k", type=_positive, default=4, help="trace length bound (default 4)")

    p = argparse.ArgumentParser(prog="dramnet", description="DRAM Petri-net model checker")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common, cfg], help="check models are well formed")
    s.add_argument("models", nargs="+")
    s.add_argument("--depth", type=int, default=4, help="deadlock search depth")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("enumerate", parents=[common, cfg, kflag], help="write Tr_k")
    s.add_argument("model")
    s.add_argument("--timed", action="store_true", help="annotate minimum firing times")
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("compare", parents=[common, cfg, kflag],
                       help="score a generated model against ground truth")
    s.add_argument("gen")
    s.add_argument("gt")
    s.add_argument("--max-witnesses", type=int, default=10)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("timing-recall", parents=[common, cfg],
                       help="timing-constraint recall of gen against gt")
    s.add_argument("gen")
    s.add_argument("gt")
    s.set_defaults(func=cmd_timing_recall)

    s = sub.add_parser("mutate", parents=[common, kflag], help="run a seeded mutation campaign")
    s.add_argument("models", nargs="*", help="models to mutate (default: all bundled fixtures)")
    s.add_argument("--count", type=_positive, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--deep-check", action="store_true",
                   help="re-check at B=4 R=2 k=5: all equivalent mutants and a sample of the rest")
    s.add_argument("--deep-fraction", type=float, default=0.1)
    s.set_defaults(func=cmd_mutate)

    s = sub.add_parser("conjecture-check", parents=[common, kflag],
                       help="compare Tr_k of two models at the minimal configurations")
    s.add_argument("m1")
    s.add_argument("m2")
    s.add_argument("--set", type=_parse_set, action="append", metavar="NAME=VALUE")
    s.set_defaults(func=cmd_conjecture_check)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except BudgetExceeded as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
