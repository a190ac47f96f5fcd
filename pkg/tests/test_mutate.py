import csv
import io
import json

import pytest
from hypothesis import given, settings, strategies as st

import oracle
from dramnet import fixtures
from dramnet.core import check_bank_symmetry
from dramnet.dsl import Level, build_net, format_model
from dramnet.mutate import (
    PRIMITIVE_KINDS,
    MoveStmt,
    Mutation,
    MutationError,
    MutationKind,
    campaign_over,
    deep_check,
    generate_mutants,
    run_campaign,
    split_count,
)
from dramnet.traces import parse_trace


def test_generation_is_deterministic():
    m = fixtures.load("mini-ddr")
    assert generate_mutants(m, 30, 5) == generate_mutants(m, 30, 5)
    assert generate_mutants(m, 30, 5) != generate_mutants(m, 30, 6)


def test_count_must_be_positive():
    with pytest.raises(ValueError):
        generate_mutants(fixtures.load("mini-ddr"), 0, 1)


def test_every_operator_is_drawn():
    kinds = {mu.kind for mu in generate_mutants(fixtures.load("mini-ddr"), 150, 2)}
    assert kinds == set(MutationKind)


def test_missing_operator_is_substituted_and_noted():
    # guard-token has no inhibitor arc to remove
    muts = generate_mutants(fixtures.load("guard-token"), 120, 4)
    assert all(mu.kind is not MutationKind.REMOVE_INHIBITOR_ARC for mu in muts)
    assert any("RemoveInhibitorArc" in mu.note for mu in muts)


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(fixtures.NAMES), st.integers(0, 10**6))
def test_revert_is_exact_and_mutants_stay_symmetric(name, seed):
    model = fixtures.load(name)
    text = format_model(model)
    for mu in generate_mutants(model, 12, seed):
        mutant = mu.apply(model)
        assert format_model(mu.revert(mutant)) == text
        assert mu.applied_symmetrically
        for cfg in [(1, 1), (2, 1), (3, 1), (2, 2)]:
            assert check_bank_symmetry(build_net(mutant, *cfg))


def test_apply_checks_locator():
    model = fixtures.load("mini-ddr")
    stale = MoveStmt(MutationKind.MODIFY_COORDINATE_PREDICATE, Level.BANK, 0, Level.RANK, "not there")
    with pytest.raises(MutationError):
        stale.apply(model)


def test_duplicate_rank_arc_is_an_equivalent_mutant():
    # a rank-level arc re-homed into the bank block instantiates to the same arcs
    model = fixtures.load("mini-ddr-pwr")
    i = next(i for i, s in enumerate(model.per_rank) if "PWR_ON" in repr(s) and "PDE" in repr(s))
    mu = Mutation(MutationKind.MODIFY_COORDINATE_PREDICATE,
                  (MoveStmt(MutationKind.MODIFY_COORDINATE_PREDICATE, Level.RANK, i, Level.BANK,
                            model.per_rank[i]),))
    assert build_net(mu.apply(model), 2, 1) == build_net(model, 2, 1)
    rep = run_campaign(model, [mu], deep=True)
    assert rep.records[0].status == "equivalent"
    assert rep.records[0].deep["equivalent"]


@pytest.fixture(scope="module")
def small_campaign():
    models = fixtures.load_all()
    return models, campaign_over(models, 60, 11, deep=True, deep_fraction=0.3)


def test_campaign_counts_are_consistent(small_campaign):
    _, rep = small_campaign
    d = rep.to_dict()
    assert d["total_mutants"] == 60
    assert d["detected"] + d["equivalent_mutants"] + d["undetected_nonequivalent"] + d["budget_errors"] == 60
    assert d["undetected_nonequivalent"] == 0
    assert str(d["detected"]) in rep.summary_line()
    assert sum(sum(row.values()) for row in d["operator_histogram"].values()) == 60
    assert [r["index"] for r in d["mutants"]] == list(range(60))


def test_every_equivalent_mutant_is_deep_checked(small_campaign):
    _, rep = small_campaign
    for r in rep.records:
        if r.status == "equivalent":
            assert r.deep is not None and r.deep["equivalent"]
    assert rep.deep_checked > rep.equivalent_mutants


def test_witnesses_are_minimal_and_one_sided(small_campaign):
    models, rep = small_campaign
    checked = 0
    for r in rep.records:
        if r.status != "detected" or checked >= 12:
            continue
        checked += 1
        model = models[r.fixture]
        gt = build_net(model, *r.detection_config)
        mut = build_net(r.mutation.apply(model), *r.detection_config)
        trace = parse_trace(r.witness)
        assert len(trace) == r.witness_length <= 4
        assert oracle.is_trace(gt, trace) != oracle.is_trace(mut, trace)
        assert oracle.is_trace(gt if r.only_in == "ground_truth" else mut, trace)
        assert oracle.first_difference(gt, mut, len(trace)) == len(trace)
    assert checked == 12


def test_timing_only_mutants_look_equivalent(small_campaign):
    _, rep = small_campaign
    for r in rep.records:
        if r.mutation.kind is MutationKind.DROP_TIMED_ARC_FAMILY:
            assert r.status == "equivalent"


def test_reports_are_deterministic_across_workers(small_campaign):
    models, rep = small_campaign
    again = campaign_over(models, 60, 11, deep=True, deep_fraction=0.3, workers=2)
    assert again.to_json() == rep.to_json()
    json.loads(rep.to_json())
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert len(rows) == 61 and rows[0][0] == "index"


def test_deep_check_finds_difference():
    model = fixtures.load("mini-ddr")
    mu = next(m for m in generate_mutants(model, 40, 1) if m.kind is MutationKind.REMOVE_RESET_ARC)
    v = deep_check(model, mu, 4, 2, 5)
    assert not v.equivalent and len(v.witness) <= 5


def test_split_count():
    assert split_count(7, ["a", "b", "c"]) == {"a": 3, "b": 2, "c": 2}
    assert len(PRIMITIVE_KINDS) == 6


def test_identity_mutation_is_equivalent_everywhere():
    model = fixtures.load("mini-ddr")
    rep = run_campaign(model, [Mutation(MutationKind.COMPOSITE, ())], deep=True)
    assert rep.records[0].status == "equivalent"
    assert deep_check(model, Mutation(MutationKind.COMPOSITE, ()), 3, 2, 4).equivalent


def test_removing_double_activation_guard_detected():
    model = fixtures.load("guard-inhibitor")
    mu = next(m for m in generate_mutants(model, 80, 1) if m.kind is MutationKind.REMOVE_INHIBITOR_ARC
              and "ACT;" in m.edits[0].to_dict()["stmt"])
    (r,) = run_campaign(model, [mu]).records
    assert r.status == "detected" and r.witness == "ACT@r0.b0,ACT@r0.b0"


def test_thousand_mutants_stay_bank_symmetric():
    model = fixtures.load("mini-ddr")
    muts = generate_mutants(model, 1000, 8)
    assert all(check_bank_symmetry(build_net(mu.apply(model), 2, 1)) for mu in muts)


def test_cross_bank_detection_agrees_with_deep_check(small_campaign):
    models, rep = small_campaign
    two_bank = [r for r in rep.records if r.detection_config == (2, 1)]
    assert two_bank
    for r in rep.records:
        if r.status == "detected" and r.deep is not None:
            assert not r.deep["equivalent"]
    for r in two_bank:
        model = models[r.fixture]
        assert deep_check(model, r.mutation, 1, 1, 4).equivalent
        assert not deep_check(model, r.mutation, 2, 1, 4).equivalent
