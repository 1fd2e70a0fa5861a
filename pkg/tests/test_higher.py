import dataclasses
from fractions import Fraction

import pytest

from algforge.algebroid import Algebroid1, base_symbols, fiber_symbols, lie_algebra_algebroid, tangent_algebroid
from algforge.comorphism import weight_check
from algforge.errors import DimensionMismatch, NotAlmostLie
from algforge.expr import Poly
from algforge.graded import velocity
from algforge.higher import (
    HA2,
    al_check2,
    alg_lift,
    ha2_of,
    is_skew2,
    is_strong,
    kappa2_of,
    kappa_tangent,
    lie_check2,
    prolong2,
    reduce_to_order1,
    sub_ha_check,
    tangent_ha2,
    z_symbols,
)
from algforge.liegroup import aff1, so3

X1, X2 = base_symbols(2)
x1 = Poly.var(X1)


def so3_ha():
    return prolong2(lie_algebra_algebroid(so3().consts))


def broken_aff1():
    """prolong2(aff(1)) with one extra mixed coefficient: skew and AL, not Lie."""
    ha = prolong2(lie_algebra_algebroid(aff1().consts))
    mixed = [[[p for p in row] for row in blk] for blk in ha.mixed]
    mixed[0][1][0] = mixed[0][1][0] + 1
    return dataclasses.replace(ha, mixed=mixed)


def test_prolongation_of_lie_algebra_has_bracket_in_every_slot():
    ha = so3_ha()
    g = so3()
    for k in range(3):
        for i in range(3):
            for j in range(3):
                assert ha.bracket[k][i][j] == Poly.const(g.consts[k][i][j])
                # mixed and z_action both carry the structure constants
                assert ha.mixed[k][i][j] == Poly.const(g.consts[k][i][j])
    assert all(p.is_zero() for blk in ha.cubic for a in blk for b in a for p in b)
    assert ha.core_map == tuple(tuple(Poly.const(int(i == j)) for j in range(3)) for i in range(3))


def test_prolongation_of_tangent_algebroid_is_tangent_ha2():
    base = base_symbols(2)
    assert prolong2(tangent_algebroid(base)) == tangent_ha2(base)


def test_prolongation_rejects_non_almost_lie():
    y = fiber_symbols(1)
    A = Algebroid1((X1,), y, [[1]], [[2]], [[[0]]])
    with pytest.raises(NotAlmostLie):
        prolong2(A)


def test_round_trip_and_weights():
    for ha in (so3_ha(), tangent_ha2(base_symbols(2)), broken_aff1()):
        r = kappa2_of(ha)
        assert ha2_of(r) == ha
        assert weight_check(r).ok


def test_reduce_to_order1_recovers_algebroid():
    A = lie_algebra_algebroid(so3().consts)
    assert reduce_to_order1(prolong2(A)) == A
    T = tangent_algebroid(base_symbols(1))
    assert reduce_to_order1(prolong2(T)) == T


def test_validation_of_shapes_and_symmetries():
    x, y, z = base_symbols(1), fiber_symbols(2), z_symbols(1)
    with pytest.raises(DimensionMismatch):
        HA2.zeros(x, y, z, anchor=[[1]])
    quad = [[[0, 1], [0, 0]]]
    with pytest.raises(DimensionMismatch):
        HA2.zeros(x, y, z, anchor_quad=quad)
    with pytest.raises(DimensionMismatch):
        HA2.zeros(x, fiber_symbols(2, weight=2), z)


def test_axioms_of_prolongations():
    ha = so3_ha()
    assert is_skew2(ha).ok and al_check2(ha).ok
    v = lie_check2(ha)
    assert v.ok and v.details["identities"] == 81
    assert is_strong(ha).ok
    T = prolong2(tangent_algebroid(base_symbols(1)))
    assert lie_check2(T).ok and is_strong(T).ok


def test_broken_structure_is_al_but_not_lie():
    ha = broken_aff1()
    assert is_skew2(ha).ok
    assert al_check2(ha).ok
    v = lie_check2(ha)
    assert not v.ok
    assert v.witness["component"] == "dz1"
    assert v.witness["sections"] == (0, 1)


def test_skew_failure_is_reported_first():
    ha = so3_ha()
    br = [[[p for p in row] for row in blk] for blk in ha.bracket]
    br[0][1][2] = br[0][1][2] + 1
    v = lie_check2(dataclasses.replace(ha, bracket=br))
    assert not v.ok and v.witness[0] == "bracket"


def test_strongness():
    x, y, z = base_symbols(1), fiber_symbols(1), z_symbols(1)
    assert not is_strong(HA2.zeros(x, y, z)).ok
    v = is_strong(HA2.zeros(x, y, z, core_map=[[x1]]))
    assert v.ok and v.details.get("pointwise")
    assert not is_strong(HA2.zeros(x, y, z_symbols(2))).ok


def test_algebroid_lifts_on_tangent_second_order():
    ha = tangent_ha2((X1,))
    v, z = Poly.var(ha.fiber1[0]), Poly.var(ha.fiber2[0])
    # s = x1 d/dx1; eps^alpha T^2 s scaled by (2 - alpha)!/2!
    assert alg_lift(ha, [x1], 2) == [Poly(), Poly(), x1]
    assert alg_lift(ha, [x1], 1) == [Poly(), Fraction(1, 2) * x1, v]
    assert alg_lift(ha, [x1], 0) == [x1, v, z]


def test_canonical_flip_is_identity_data():
    r = kappa_tangent(base_symbols(1), 2)
    assert [str(s) for s in r.source.fiber] == ["dx1", "dx1.d1", "dx1.d2"]
    assert [str(s) for s in r.target.fiber] == [str(velocity(s)) for s in r.target.base]
    assert all(r.matrix[i][j] == Poly.const(int(i == j)) for i in range(3) for j in range(3))


def test_sub_structures_of_so3_prolongation():
    ha = so3_ha()
    e3 = [[0, 0, 1]]
    res, v = sub_ha_check(ha, e3, e3)
    assert v.ok and res is not None
    res, v = sub_ha_check(ha, [[1, 0, 0], [0, 1, 0]], [[1, 0, 0], [0, 1, 0]])
    assert not v.ok and res is None
    # weight-2 part too small for the weight-1 part
    res, v = sub_ha_check(ha, e3, [])
    assert not v.ok
