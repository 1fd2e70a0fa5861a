import random
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from algforge.algebroid import (
    Algebroid1,
    algebroid_of,
    algebroidal_relation_check,
    base_symbols,
    bracket,
    fiber_symbols,
    is_almost_lie,
    is_lie,
    is_skew,
    jacobiator,
    kappa_of,
    leibniz_check,
    lie_algebra_algebroid,
    lift_algebroid,
    lifted_bracket,
    morphism_check,
    tangent_algebroid,
    transpose,
)
from algforge.comorphism import Comorphism, VBMorphism, VBundle, identity
from algforge.errors import DimensionMismatch, NotCoreIdentity
from algforge.expr import Poly
from algforge.graded import epsilon_lift
from algforge.liegroup import aff1, so3

from helpers import brute_jacobiator, perturbed_so3, rand_algebroid, rand_poly

X1, X2 = base_symbols(2)
x1, x2 = Poly.var(X1), Poly.var(X2)


def test_tangent_bracket_is_vector_field_commutator():
    A = tangent_algebroid((X1, X2))
    # [x2 d1, x1 d2] = x2 d2 - x1 d1
    assert bracket(A, [x2, 0], [0, x1]) == [-x1, x2]
    assert bracket(A, [1, 0], [x1**2, 0]) == [2 * x1, Poly()]


def test_lie_algebra_bracket_matches_constants():
    A = lie_algebra_algebroid(so3().consts)
    assert bracket(A, [1, 0, 0], [0, 1, 0]) == [0, 0, 1]
    assert bracket(A, [0, 1, 0], [1, 0, 0]) == [0, 0, -1]


def test_section_dimension_checked():
    A = tangent_algebroid((X1,))
    with pytest.raises(DimensionMismatch):
        bracket(A, [1, 0], [1])


def test_structure_functions_must_live_on_base():
    y = fiber_symbols(1)
    with pytest.raises(DimensionMismatch):
        Algebroid1((X1,), y, [[Poly.var(y[0])]], [[1]], [[[0]]])


@settings(max_examples=15)
@given(st.integers(0, 10**6))
def test_comorphism_round_trip(seed):
    A = rand_algebroid(random.Random(seed), 2, 2)
    assert algebroid_of(kappa_of(A)) == A


def test_non_identity_core_rejected():
    A = tangent_algebroid((X1,))
    r = kappa_of(A)
    mat = [list(row) for row in r.matrix]
    mat[1][1] = Poly.const(2)
    with pytest.raises(NotCoreIdentity):
        algebroid_of(Comorphism(r.source, r.target, r.base_map, mat))


@settings(max_examples=15)
@given(st.integers(0, 10**6))
def test_transpose_is_involutive_and_flips_bracket(seed):
    rng = random.Random(seed)
    A = rand_algebroid(rng, 1, 2)
    assert transpose(transpose(A)) == A
    s = [rand_poly(rng, A.base) for _ in range(2)]
    t = [rand_poly(rng, A.base) for _ in range(2)]
    assert bracket(transpose(A), s, t) == [-p for p in bracket(A, t, s)]


@settings(max_examples=15)
@given(st.integers(0, 10**6))
def test_leibniz_rule_holds_for_every_algebroid(seed):
    rng = random.Random(seed)
    A = rand_algebroid(rng, 2, 2, degree=1)
    f, g = rand_poly(rng, A.base), rand_poly(rng, A.base)
    s = [rand_poly(rng, A.base, 1) for _ in range(2)]
    t = [rand_poly(rng, A.base, 1) for _ in range(2)]
    assert leibniz_check(A, f, g, s, t).ok


def test_axiom_ladder_examples():
    assert is_lie(lie_algebra_algebroid(so3().consts)).ok
    assert is_lie(lie_algebra_algebroid(aff1().consts)).ok
    assert is_lie(tangent_algebroid((X1, X2))).ok
    bad = perturbed_so3().consts
    v = is_lie(lie_algebra_algebroid(bad))
    assert is_skew(lie_algebra_algebroid(bad)).ok
    assert not v.ok and v.witness[0] == (0, 1, 2)
    assert [Fraction(x) for x in v.witness[1]] == brute_jacobiator(bad, 0, 1, 2)
    rescaled = [[[c * (2 if k == 2 else 1) for c in row] for row in blk] for k, blk in enumerate(so3().consts)]
    assert is_lie(lie_algebra_algebroid(rescaled)).ok
    # different anchors: not skew
    y = fiber_symbols(1)
    A = Algebroid1((X1,), y, [[1]], [[2]], [[[0]]])
    assert not is_skew(A).ok and not is_almost_lie(A).ok
    # skew but the anchor does not respect brackets
    y2 = fiber_symbols(2)
    q = [[[0, 1], [-1, 0]], [[0, 0], [0, 0]]]  # [e1, e2] = e1 while rho(e1) = d/dx1, rho(e2) = 0
    B = Algebroid1((X1,), y2, [[1, 0]], [[1, 0]], q)
    assert is_skew(B).ok
    v = is_almost_lie(B)
    assert not v.ok and v.witness[0] == "anchor"


def _constants(draw_vals, n):
    c = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
    it = iter(draw_vals)
    for k in range(n):
        for i in range(n):
            for j in range(i + 1, n):
                v = next(it)
                c[k][i][j], c[k][j][i] = v, -v
    return c


@settings(max_examples=30)
@given(st.lists(st.integers(-1, 1).map(Fraction), min_size=9, max_size=9))
def test_is_lie_agrees_with_brute_force_jacobiator(vals):
    c = _constants(vals, 3)
    brute_ok = all(not any(brute_jacobiator(c, i, j, k)) for i, j, k in product(range(3), repeat=3))
    assert is_lie(lie_algebra_algebroid(c)).ok == brute_ok


@settings(max_examples=20)
@given(st.integers(0, 10**6))
def test_rank_two_with_zero_anchor_is_always_lie(seed):
    """With zero anchor the Jacobiator is tensorial and alternating, so rank 2 forces it to vanish."""
    rng = random.Random(seed)
    y = fiber_symbols(2)
    q = [[[Poly(), Poly()], [Poly(), Poly()]] for _ in range(2)]
    for k in range(2):
        p = rand_poly(rng, (X1, X2), 2)
        q[k][0][1], q[k][1][0] = p, -p
    zero = [[0, 0], [0, 0]]
    A = Algebroid1((X1, X2), y, zero, zero, q)
    assert is_lie(A).ok
    s = [[rand_poly(rng, (X1, X2), 1) for _ in range(2)] for _ in range(3)]
    assert all(p.is_zero() for p in jacobiator(A, *s))


def _vb(A):
    return VBundle(A.base, A.fiber)


def _linear_morphism(A, A2, mat):
    return VBMorphism(_vb(A), _vb(A2), (), mat)


def test_lie_algebra_morphisms():
    A = lie_algebra_algebroid(so3().consts)
    cyc = [[0, 0, 1], [1, 0, 0], [0, 1, 0]]  # e1 -> e2 -> e3 -> e1 preserves the cross product
    assert morphism_check(_linear_morphism(A, A, cyc), A, A).ok
    double = [[2, 0, 0], [0, 2, 0], [0, 0, 2]]
    v = morphism_check(_linear_morphism(A, A, double), A, A)
    assert not v.ok
    # aff(1) -> R^1 killing e1 is a morphism; killing e2 is not
    B = lie_algebra_algebroid(aff1().consts)
    R = lie_algebra_algebroid([[[Fraction(0)]]])
    assert morphism_check(_linear_morphism(B, R, [[0, 1]]), B, R).ok
    assert not morphism_check(_linear_morphism(B, R, [[1, 0]]), B, R).ok


@settings(max_examples=10)
@given(st.integers(0, 10**6))
def test_identity_is_a_morphism_and_a_relation(seed):
    A = rand_algebroid(random.Random(seed), 1, 2, degree=1)
    eye = [[int(i == j) for j in range(2)] for i in range(2)]
    phi = VBMorphism(_vb(A), _vb(A), (Poly.var(A.base[0]),), eye)
    assert morphism_check(phi, A, A).ok
    assert algebroidal_relation_check(identity(_vb(A)), A, A).ok


def test_tangent_map_of_diffeo_is_morphism_of_tangent_algebroids():
    # phi(x1) = x1 + x1^3 is not a diffeomorphism globally, but T phi is an algebroid morphism anyway
    A = tangent_algebroid((X1,))
    phi = VBMorphism(_vb(A), _vb(A), (x1 + x1**3,), [[1 + 3 * x1**2]])
    assert morphism_check(phi, A, A).ok
    wrong = VBMorphism(_vb(A), _vb(A), (x1 + x1**3,), [[1]])
    assert not morphism_check(wrong, A, A).ok


@pytest.mark.parametrize("k", [1, 2])
def test_lifted_bracket_formula_matches_lifted_algebroid(k):
    A = tangent_algebroid((X1,))
    L = lift_algebroid(A, k)
    sections = [[x1], [x1**2], [Poly.const(1)]]
    for s1, s2 in product(sections, repeat=2):
        for a, b in product(range(k + 1), repeat=2):
            direct = bracket(L, epsilon_lift(s1, k, a).flat(), epsilon_lift(s2, k, b).flat())
            assert direct == lifted_bracket(A, k, s1, a, s2, b).flat()


def test_lifted_bracket_for_so3():
    A = lie_algebra_algebroid(so3().consts)
    L = lift_algebroid(A, 2)
    assert is_lie(L).ok
    for i, j in product(range(3), repeat=2):
        for a, b in product(range(3), repeat=2):
            s1, s2 = A.basis_section(i), A.basis_section(j)
            direct = bracket(L, epsilon_lift(s1, 2, a).flat(), epsilon_lift(s2, 2, b).flat())
            assert direct == lifted_bracket(A, 2, s1, a, s2, b).flat()


def test_lifted_algebroid_of_tangent_is_tangent():
    A = tangent_algebroid((X1,))
    L = lift_algebroid(A, 1)
    assert is_lie(L).ok
    assert [str(s) for s in L.base] == ["x1", "x1.d1"]
    assert L.QL == ((Poly.const(1), Poly()), (Poly(), Poly.const(1)))
