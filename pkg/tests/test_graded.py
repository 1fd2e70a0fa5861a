from math import comb

import pytest
from hypothesis import given

from algforge.errors import JetOverflow, NotDoublyGraded
from algforge.expr import Poly, Symbol, jacobian, weight_of
from algforge.graded import (
    GradedChart,
    adapted_chart,
    compose_lifted,
    compose_maps,
    core_decomposition,
    epsilon_lift,
    higher_tangent_chart,
    lift_function,
    lift_transition,
    reduce_chart,
    tangent_chart,
    top_core,
)

from helpers import polys

X1, X2 = Symbol("x1"), Symbol("x2")
x1, x2 = Poly.var(X1), Poly.var(X2)


def _w(name, w):
    return Symbol(name, 0, w)


def test_adapted_chart_examples():
    c = adapted_chart(1, 2)
    assert [str(s) for s in c.symbols] == ["x1", "x1.d1", "x1.d2"]
    assert [s.weight for s in c.symbols] == [0, 1, 2]
    assert [str(s) for s in adapted_chart(2, 1).symbols] == ["x1", "x2", "x1.d1", "x2.d1"]
    assert [s.weight for s in adapted_chart(1, 3).symbols] == [0, 1, 2, 3]


def test_lift_function_examples():
    assert lift_function(x1, 1, 2) == Poly.var(X1.jet(1))
    f = x1 * x2 + 3
    assert lift_function(f, 0, 2) == f
    assert lift_function(x1**2, 2, 2) == 2 * Poly.var(X1.jet(1)) ** 2 + 2 * x1 * Poly.var(X1.jet(2))
    with pytest.raises(JetOverflow):
        lift_function(x1, 3, 2)


def test_lift_transition_examples():
    ident = lift_transition([x1, x2], 3)
    assert ident == [[Poly.var(X1.jet(a)), Poly.var(X2.jet(a))] for a in range(4)]
    assert lift_transition([x1**2], 1)[1][0] == 2 * x1 * Poly.var(X1.jet(1))


@given(polys((X1, X2), max_exp=2), polys((X1, X2), max_exp=2))
def test_lift_transition_matches_chain_rule_to_second_order(p, q):
    """x'' = J x'' + H(x', x') with J the Jacobian and H the Hessian."""
    phi = [p, q]
    lifted = lift_transition(phi, 2)
    xs = [X1, X2]
    xd = [Poly.var(s.jet(1)) for s in xs]
    xdd = [Poly.var(s.jet(2)) for s in xs]
    J = jacobian(phi, xs)
    for a, f in enumerate(phi):
        first = sum((J[a][b] * xd[b] for b in range(2)), Poly())
        second = sum((J[a][b] * xdd[b] for b in range(2)), Poly())
        second = second + sum((f.diff(xs[b]).diff(xs[c]) * xd[b] * xd[c] for b in range(2) for c in range(2)), Poly())
        assert lifted[1][a] == first
        assert lifted[2][a] == second


@given(polys((X1, X2), max_terms=2), polys((X1, X2), max_terms=2), polys((X1, X2), max_terms=2), polys((X1, X2), max_terms=2))
def test_lift_transition_is_functorial(p, q, r, s):
    inner, outer = [p, q], [r, s]
    direct = lift_transition(compose_maps(outer, inner, [X1, X2]), 2)
    staged = compose_lifted(lift_transition(outer, 2), lift_transition(inner, 2), [X1, X2])
    assert direct == staged


@given(polys((X1, X2)))
def test_lift_has_weight_alpha(f):
    for alpha in range(3):
        g = lift_function(f, alpha, 2)
        assert g.is_zero() or weight_of(g) == alpha


@given(polys((X1, X2), max_terms=2), polys((X1, X2), max_terms=2))
def test_lift_function_general_leibniz(f, g):
    for alpha in range(4):
        rhs = sum((comb(alpha, b) * lift_function(f, b, 3) * lift_function(g, alpha - b, 3) for b in range(alpha + 1)), Poly())
        assert lift_function(f * g, alpha, 3) == rhs


def test_top_core_and_reduction():
    chart = GradedChart((Symbol("x"),), (_w("y", 1), _w("z", 2)))
    core = top_core(chart)
    assert core.fiber == (Symbol("z"),) and core.fiber[0].weight == 1
    order1 = GradedChart((Symbol("x"),), (_w("y", 1),))
    assert top_core(order1) == order1
    split = GradedChart((), (_w("e", 1), _w("f", 2), _w("g", 3)))
    assert top_core(split).fiber == (Symbol("g"),)
    assert reduce_chart(chart, 1).fiber == (Symbol("y"),)
    assert reduce_chart(chart, 2) == chart
    assert reduce_chart(chart, 0).fiber == ()


def test_core_decomposition():
    x, y = Symbol("x"), _w("y", 1)
    t2e = higher_tangent_chart([x], [y], 2)
    cores = core_decomposition(t2e)
    assert cores == {1: (y.jet(1),), 2: (y.jet(2),)}
    te2 = tangent_chart(GradedChart((x,), (y, _w("z", 2))))
    cores = core_decomposition(te2)
    assert {j: [s.name for s in v] for j, v in cores.items()} == {1: ["dy"], 2: ["dz"]}
    te = tangent_chart(GradedChart((x,), (y,)))
    assert {j: [s.name for s in v] for j, v in core_decomposition(te).items()} == {1: ["dy"]}
    with pytest.raises(NotDoublyGraded):
        core_decomposition(adapted_chart(1, 2))


def test_epsilon_lift_examples():
    s = [x1**2, x2]
    total = epsilon_lift(s, 2, 0)
    assert total.components[1] == (2 * x1 * Poly.var(X1.jet(1)), Poly.var(X2.jet(1)))
    vertical = epsilon_lift(s, 2, 2)
    assert vertical.components[0] == (Poly(), Poly())
    assert vertical.components[1] == (Poly(), Poly())
    assert vertical.components[2] == tuple(s)


@given(polys((X1, X2), max_terms=2), polys((X1, X2), max_terms=2), polys((X1, X2), max_terms=2))
def test_epsilon_lift_of_product(f, a, b):
    k = 2
    s = [a, b]
    lhs = epsilon_lift([f * p for p in s], k, 0)
    acc = [[Poly() for _ in s] for _ in range(k + 1)]
    for alpha in range(k + 1):
        fa = lift_function(f, alpha, k)
        part = epsilon_lift(s, k, alpha)
        for beta in range(k + 1):
            for i in range(2):
                acc[beta][i] = acc[beta][i] + comb(k, alpha) * fa * part.components[beta][i]
    assert [list(r) for r in lhs.components] == acc
