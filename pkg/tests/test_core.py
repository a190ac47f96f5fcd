import pytest

from dramnet.core import (
    Arc,
    ArcKind,
    Coordinate,
    Marking,
    Net,
    Place,
    TimedArc,
    Transition,
    check_bank_symmetry,
    validate_structure,
)
from dramnet.expr import Expr
from support import bank_cmd, net_of, rank_cmd


@pytest.mark.parametrize("text", ["r0", "r1.b3", "r0.g1.b0", "dev"])
def test_coordinate_roundtrip(text):
    assert str(Coordinate.parse(text)) == text


@pytest.mark.parametrize("text", ["", "b0", "r0.g1", "rx", "q1"])
def test_bad_coordinates(text):
    with pytest.raises(ValueError):
        Coordinate.parse(text)


def test_transition_label_roundtrip():
    t = Transition.parse("ACT@r0.g1.b1")
    assert t == bank_cmd("ACT", bank=1, group=1)
    assert str(t) == "ACT@r0.g1.b1"


def _tiny(order=1):
    p = Place("P", Coordinate.for_rank(0), 1)
    q = Place("Q", Coordinate.for_rank(0))
    t = rank_cmd("T")
    arcs = [Arc(ArcKind.REGULAR, p, t), Arc(ArcKind.REGULAR, t, q)]
    return Net(1, 1, None, (p, q)[::order], (t,), tuple(arcs[::order]), (), {})


def test_equality_ignores_construction_order():
    assert _tiny(1) == _tiny(-1)
    assert hash(_tiny(1)) == hash(_tiny(-1))


def test_equality_sees_initial_marking():
    n = _tiny()
    other = n.replace(places=[Place("P", Coordinate.for_rank(0), 2), n.places[1]])
    assert n != other


def test_marking_mapping():
    n = _tiny()
    m = n.initial_marking()
    p, q = n.place_order
    assert dict(m) == {p: 1, q: 0}
    assert Marking.from_mapping(n, {q: 3})[q] == 3
    with pytest.raises(KeyError):
        Marking.from_mapping(n, {Place("Z", Coordinate.for_rank(0)): 1})


def test_fixtures_validate_clean(models):
    for name in models:
        for cfg in [(1, 1), (2, 1), (2, 2)]:
            assert validate_structure(net_of(name, *cfg)).ok, name


def test_validation_reports_each_problem():
    r0 = Coordinate.for_rank(0)
    p, lonely = Place("P", r0, 1), Place("LONELY", r0)
    t, ghost, idle = rank_cmd("T"), rank_cmd("GHOST"), rank_cmd("IDLE")
    net = Net(1, 1, None, (p, lonely, p), (t, idle), (
        Arc(ArcKind.REGULAR, p, t),
        Arc(ArcKind.REGULAR, p, ghost),
        Arc(ArcKind.INHIBITOR, t, p),
        Arc(ArcKind.REGULAR, t, p, 0),
    ), (TimedArc(t, t, Expr.var("tX")), TimedArc(t, t, Expr.const(0))), {})
    rep = validate_structure(net)
    assert rep.orphaned_places == [lonely]
    assert rep.orphaned_transitions == [idle]
    assert Arc(ArcKind.REGULAR, p, ghost) in rep.dangling_arcs
    assert Arc(ArcKind.INHIBITOR, t, p) in rep.malformed_arcs
    assert Arc(ArcKind.REGULAR, t, p, 0) in rep.malformed_arcs
    assert rep.duplicate_labels == [p]
    assert rep.unbound_parameters == ["tX"]
    assert len(rep.bad_delays) == 1
    assert not rep.ok and len(rep.problems()) >= 7


def test_empty_net_flagged():
    assert validate_structure(Net(1, 1)).empty


def test_fixture_nets_are_bank_symmetric(models):
    for name in models:
        for cfg in [(1, 1), (2, 1), (3, 1), (2, 2)]:
            assert check_bank_symmetry(net_of(name, *cfg))


def test_asymmetric_net_detected():
    net = net_of("mini-ddr", 2, 1)
    extra = Arc(ArcKind.INHIBITOR, Place("ACTIVE", Coordinate.for_bank(0, 1)), bank_cmd("ACT", 0))
    assert not check_bank_symmetry(net.replace(arcs=net.arcs + (extra,)))


def test_compiled_indices_follow_labels():
    cn = net_of("mini-ddr", 2, 1).compiled
    assert list(cn.labels) == sorted(cn.labels)
    assert [str(p) for p in cn.places] == sorted(str(p) for p in cn.places)


def test_node_counts_by_configuration():
    one, two = net_of("mini-ddr", 1), net_of("mini-ddr", 2)
    assert (len(one.places), len(one.transitions)) == (2, 8)
    assert len(two.places) == 4
    per_bank = [t for t in two.transitions if t.coord.kind.value == "bank"]
    per_rank = [t for t in two.transitions if t.coord.kind.value == "rank"]
    assert (len(per_bank), len(per_rank)) == (12, 2)


def test_single_bank_nets_are_trivially_symmetric(models):
    assert all(check_bank_symmetry(net_of(n, 1, 2)) for n in models)


def test_one_sided_timing_edit_breaks_symmetry():
    net = net_of("mini-ddr", 2)
    kept = [ta for ta in net.timed_arcs
            if not (ta.source == bank_cmd("ACT", 1) and ta.target == bank_cmd("RD", 1))]
    assert len(kept) == len(net.timed_arcs) - 1
    assert not check_bank_symmetry(net.replace(timed_arcs=kept))
