import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from algforge.algebroid import base_symbols, kappa_of, lie_algebra_algebroid, tangent_algebroid
from algforge.comorphism import (
    Comorphism,
    FiberVector,
    SubBundle,
    VBMorphism,
    VBundle,
    apply,
    compose,
    dualize,
    fine_restriction,
    identity,
    invert,
    reduce_order,
    section_map,
    tangent_lift,
    weight_check,
    zm_morphism_check,
)
from algforge.errors import BasePointMismatch, BundleMismatch, DimensionMismatch, NotInvertible
from algforge.expr import Poly, Symbol
from algforge.liegroup import so3

from helpers import fractions, rand_algebroid, rand_poly

X1, X2 = base_symbols(2)
x1, x2 = Poly.var(X1), Poly.var(X2)


def _plain(base, fiber, name=""):
    return VBundle(tuple(base), tuple(fiber), None, name)


def _line_bundle(prefix):
    b = (Symbol(prefix + "b1"), Symbol(prefix + "b2"))
    f = (Symbol(prefix + "f1", 0, 1), Symbol(prefix + "f2", 0, 1))
    return _plain(b, f, prefix)


def _rand_comorphism(rng, src, tgt, degree=2):
    base = [rand_poly(rng, tgt.base, degree) for _ in src.base]
    mat = [[rand_poly(rng, tgt.base, degree) for _ in src.fiber] for _ in tgt.fiber]
    return Comorphism(src, tgt, base, mat)


def flip(A, point):
    """Total-space map (x, x', dx, dx') -> (x, dx, x', dx') assembled from ``apply``."""
    r = kappa_of(A)
    x, xd, v, vd = point
    y = {A.base[0]: x, A.fiber[0]: v}
    src_pt = {A.base[0]: x, A.base[0].jet(1): v}
    out = apply(r, y, FiberVector(src_pt, (xd, vd)))
    return (x, v) + out.values


def test_tangent_algebroid_gives_the_canonical_flip():
    A = tangent_algebroid(base_symbols(1))
    pt = (Fraction(1), Fraction(2), Fraction(-3), Fraction(5, 2))
    assert flip(A, pt) == (1, -3, 2, Fraction(5, 2))
    assert flip(A, flip(A, pt)) == pt


def test_apply_rejects_wrong_base_point():
    A = tangent_algebroid(base_symbols(1))
    r = kappa_of(A)
    y = {A.base[0]: Fraction(1), A.fiber[0]: Fraction(2)}
    with pytest.raises(BasePointMismatch):
        apply(r, y, FiberVector({A.base[0]: 1, A.base[0].jet(1): 7}, (1, 1)))
    with pytest.raises(DimensionMismatch):
        apply(r, y, FiberVector({A.base[0]: 1, A.base[0].jet(1): 2}, (1,)))


def test_lie_algebra_comorphism_adds_the_bracket():
    g = so3()
    A = lie_algebra_algebroid(g.consts, "a")
    r = kappa_of(A)
    y = {s: Fraction(int(i == 0)) for i, s in enumerate(A.fiber)}  # target base point e1
    # over a point the source base is empty; the vector is (e2, 0)
    out = apply(r, y, FiberVector({}, (0, 1, 0, 0, 0, 0)))
    assert out.values == (0, 0, 1)  # [e1, e2] = e3


def test_section_map_on_tangent_lift_is_complete_lift():
    A = tangent_algebroid(base_symbols(2))
    r = kappa_of(A)
    v1, v2 = (Poly.var(s) for s in A.fiber)
    # s = x2 d/dx1 and its tangent lift (s, Ds) as a section over TM
    s = [x2, Poly(), Poly.var(X2.jet(1)), Poly()]
    assert section_map(r, s) == [x2, Poly(), v2, Poly()]


@settings(max_examples=15)
@given(st.integers(0, 10**6))
def test_section_map_is_module_map_over_pullback(seed):
    rng = random.Random(seed)
    A = rand_algebroid(rng, 1, 2, degree=1)
    r = kappa_of(A)
    src_syms = r.source.base
    f = rand_poly(rng, src_syms, 2)
    s = [rand_poly(rng, src_syms, 1) for _ in r.source.fiber]
    pulled = f.subs(dict(zip(src_syms, r.base_map)))
    assert section_map(r, [f * p for p in s]) == [pulled * p for p in section_map(r, s)]


@settings(max_examples=15)
@given(st.integers(0, 10**6))
def test_composition_is_associative_and_unital(seed):
    rng = random.Random(seed)
    E1, E2, E3, E4 = (_line_bundle(p) for p in "abcd")
    r1 = _rand_comorphism(rng, E1, E2)
    r2 = _rand_comorphism(rng, E2, E3)
    r3 = _rand_comorphism(rng, E3, E4)
    assert compose(r3, compose(r2, r1)) == compose(compose(r3, r2), r1)
    assert compose(identity(E2), r1) == r1
    assert compose(r1, identity(E1)) == r1


def test_compose_checks_bundles():
    E1, E2 = _line_bundle("a"), _line_bundle("b")
    r = identity(E1)
    with pytest.raises(BundleMismatch):
        compose(identity(E2), r)


@settings(max_examples=15)
@given(st.integers(0, 10**6), st.lists(fractions, min_size=6, max_size=6))
def test_dual_pairing_identity(seed, vals):
    rng = random.Random(seed)
    E1, E2 = _line_bundle("a"), _line_bundle("b")
    r = _rand_comorphism(rng, E1, E2)
    d = dualize(r)
    assert isinstance(d, VBMorphism)
    assert dualize(d) == r
    point = dict(zip(E2.base, vals[:2]))
    X, xi = vals[2:4], vals[4:6]
    M = [[p.evaluate(point) for p in row] for row in r.matrix]
    Mt = [[p.evaluate(point) for p in row] for row in d.matrix]
    rX = [sum(M[i][j] * X[j] for j in range(2)) for i in range(2)]
    rtxi = [sum(Mt[i][j] * xi[j] for j in range(2)) for i in range(2)]
    assert sum(a * b for a, b in zip(xi, rX)) == sum(a * b for a, b in zip(rtxi, X))


def test_invert_relabelling():
    E1, E2 = _line_bundle("a"), _line_bundle("b")
    b1, b2 = (Poly.var(s) for s in E2.base)
    r = Comorphism(E1, E2, (b2, b1), [[2, 1], [1, 1]])
    inv = invert(r)
    assert compose(inv, r) == identity(E1)
    assert compose(r, inv) == identity(E2)
    with pytest.raises(NotInvertible):
        invert(Comorphism(E1, E2, (b1 * b2, b1), [[1, 0], [0, 1]]))
    with pytest.raises(NotInvertible):
        invert(Comorphism(E1, E2, (b1, b2), [[b1, 0], [0, 1]]))


def test_comorphism_entries_must_live_on_target_base():
    E1, E2 = _line_bundle("a"), _line_bundle("b")
    with pytest.raises(DimensionMismatch):
        Comorphism(E1, E2, tuple(Poly.var(s) for s in E1.base), [[1, 0], [0, 1]])


@settings(max_examples=10)
@given(st.integers(0, 10**6))
def test_tangent_lift_is_functorial(seed):
    rng = random.Random(seed)
    E1, E2, E3 = (_line_bundle(p) for p in "abc")
    r1 = _rand_comorphism(rng, E1, E2, degree=1)
    r2 = _rand_comorphism(rng, E2, E3, degree=1)
    assert tangent_lift(compose(r2, r1)) == compose(tangent_lift(r2), tangent_lift(r1))
    assert tangent_lift(identity(E1), 2) == identity(tangent_lift(identity(E1), 2).source)


@settings(max_examples=10)
@given(st.integers(0, 10**6))
def test_algebroid_comorphisms_are_homogeneous(seed):
    A = rand_algebroid(random.Random(seed), 2, 2)
    assert weight_check(kappa_of(A)).ok


def test_weight_check_catches_inhomogeneous_equation():
    A = tangent_algebroid(base_symbols(1))
    r = kappa_of(A)
    bad = Comorphism(r.source, r.target, (r.base_map[0], r.base_map[1] + 1), r.matrix)
    v = weight_check(bad)
    assert not v.ok and v.witness[0] == "base"


def test_reduce_order_to_weight_zero_keeps_anchor_relation():
    A = tangent_algebroid(base_symbols(1))
    r = reduce_order(kappa_of(A), 0)
    assert [str(s) for s in r.source.base] == ["x1"]
    assert [str(s) for s in r.target.base] == ["x1"]
    assert r.source.rank == 1 and r.target.rank == 1
    assert r.matrix[0][0] == Poly.const(1)


def test_fine_restriction_full_and_failing():
    g = so3()
    A = lie_algebra_algebroid(g.consts, "a")
    r = kappa_of(A)
    full_s, full_t = SubBundle.full(r.source), SubBundle.full(r.target)
    res, v = fine_restriction(r, full_s, full_t)
    assert v.ok and res.matrix == r.matrix
    # over the line through e2, brackets with e1 leave the span of e1
    src = SubBundle.linear(r.source, [[1, 0, 0, 0, 0, 0], [0, 0, 0, 1, 0, 0]])
    tgt = SubBundle.linear(r.target, [[1, 0, 0]], [[0, 1, 0]])
    res, v = fine_restriction(r, src, tgt)
    assert res is None and not v.ok and v.witness[0] == "fiber"
    # the span of e1 over the line through e1 is fine
    tgt = SubBundle.linear(r.target, [[1, 0, 0]], [[1, 0, 0]])
    res, v = fine_restriction(r, src, tgt)
    assert v.ok and res.matrix == ((Poly.const(0), Poly.const(1)),)


def test_identity_pair_is_a_morphism_of_comorphisms():
    A = tangent_algebroid(base_symbols(1))
    r = kappa_of(A)
    idm = lambda vb: VBMorphism(vb, vb, tuple(Poly.var(s) for s in vb.base), identity(vb).matrix)  # noqa: E731
    assert zm_morphism_check(idm(r.source), idm(r.target), r, r).ok
    doubled = VBMorphism(r.target, r.target, tuple(Poly.var(s) for s in r.target.base), [[2, 0], [0, 2]])
    v = zm_morphism_check(idm(r.source), doubled, r, r)
    assert not v.ok and v.witness[0] == "fiber"
