import pytest
from hypothesis import given, strategies as st

from dramnet.expr import Expr, ExprError, UnboundParameter, parse_expr

a, b, c = Expr.var("a"), Expr.var("b"), Expr.var("c")


def test_commutative_and_associative_sums():
    assert a + b == b + a
    assert (a + b) + c == a + (b + c)
    assert a - a == Expr.const(0)
    assert 2 * a == a + a


def test_products_distribute_over_sums():
    assert (a + b) * c == a * c + b * c


def test_max_is_flattened_idempotent_and_commutative():
    assert Expr.maximum(a, b) == Expr.maximum(b, a)
    assert Expr.maximum(a, a) == a
    assert Expr.maximum(Expr.maximum(a, b), c) == Expr.maximum(a, Expr.maximum(b, c))


def test_max_of_constants_folds():
    assert Expr.maximum(Expr.const(3), Expr.const(7)) == Expr.const(7)


def test_addition_does_not_distribute_over_max():
    # kept apart on purpose: both sides are distinct normal forms
    assert Expr.maximum(a, b) + c != Expr.maximum(a + c, b + c)
    env = {"a": 1, "b": 5, "c": 2}
    assert (Expr.maximum(a, b) + c).evaluate(env) == Expr.maximum(a + c, b + c).evaluate(env)


def test_evaluate_and_unbound():
    e = parse_expr("max(tRRD, 4) + 2 * tCK")
    assert e.evaluate({"tRRD": 6, "tCK": 1}) == 8
    assert e.names() == {"tRRD", "tCK"}
    with pytest.raises(UnboundParameter) as info:
        e.evaluate({"tRRD": 1})
    assert info.value.names == ["tCK"]


def test_precedence_and_unary_minus():
    assert parse_expr("1 + 2 * 3").evaluate({}) == 7
    assert parse_expr("(1 + 2) * 3").evaluate({}) == 9
    assert parse_expr("-a + 5").evaluate({"a": 2}) == 3


@pytest.mark.parametrize("text", ["", "1 +", "max(", "a b", "(a", "max()"])
def test_parse_errors(text):
    with pytest.raises(ExprError):
        parse_expr(text)


names = st.sampled_from(["tRCD", "tRP", "B", "x"])


def exprs():
    leaf = st.one_of(st.integers(0, 20).map(Expr.const), names.map(Expr.var))
    return st.recursive(leaf, lambda kids: st.one_of(
        st.tuples(kids, kids).map(lambda p: p[0] + p[1]),
        st.tuples(kids, kids).map(lambda p: p[0] - p[1]),
        st.tuples(kids, kids).map(lambda p: p[0] * p[1]),
        st.lists(kids, min_size=1, max_size=3).map(lambda xs: Expr.maximum(*xs)),
    ), max_leaves=8)


@given(exprs())
def test_render_parse_roundtrip(e):
    assert parse_expr(e.render()) == e


def paired():
    """(Expr, plain-python evaluator) built side by side."""
    leaf = st.one_of(
        st.integers(0, 20).map(lambda v: (Expr.const(v), lambda env, v=v: v)),
        names.map(lambda n: (Expr.var(n), lambda env, n=n: env[n])),
    )

    def combine(kids):
        two = st.tuples(kids, kids)
        return st.one_of(
            two.map(lambda p: (p[0][0] + p[1][0], lambda env, p=p: p[0][1](env) + p[1][1](env))),
            two.map(lambda p: (p[0][0] - p[1][0], lambda env, p=p: p[0][1](env) - p[1][1](env))),
            two.map(lambda p: (p[0][0] * p[1][0], lambda env, p=p: p[0][1](env) * p[1][1](env))),
            st.lists(kids, min_size=1, max_size=3).map(
                lambda xs: (Expr.maximum(*(x[0] for x in xs)),
                            lambda env, xs=xs: max(x[1](env) for x in xs))),
        )

    return st.recursive(leaf, combine, max_leaves=8)


@given(paired(), st.fixed_dictionaries({n: st.integers(-5, 9) for n in ["tRCD", "tRP", "B", "x"]}))
def test_normal_form_preserves_value(pair, env):
    e, direct = pair
    assert e.evaluate(env) == direct(env)
