"""Second-order algebroids in normal form.

Coordinates on the graded bundle ``E^2`` are ``(x^a, y^i, z^mu)`` with
weights 0, 1, 2.  The structure is a comorphism from ``T^2 E^1`` (jets of
``(x, y)``) to ``T E^2`` given, with ``_`` marking target coordinates, by::

    x.d1^a = anchor[a][i] y_^i
    x.d2^a = 1/2 anchor_quad[a][i][j] y_^i y_^j + anchor_core[a][mu] z_^mu
    dx_^a  = anchor_right[a][i] y^i
    dy_^i  = y.d1^i + bracket[i][j][k] y_^j y^k
    dz_^mu = core_map[mu][i] y.d2^i + mixed[mu][i][j] y_^i y.d1^j
             + z_action[mu][nu][i] z_^nu y^i + 1/2 cubic[mu][i][j][k] y_^i y_^j y^k

``anchor_quad`` is symmetric in ``(i, j)`` and ``cubic`` in its first two
lower indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Sequence

from . import linalg
from .algebroid import (
    Algebroid1,
    algebroid_of,
    bracket as bracket1,
    is_almost_lie,
    vector_field_bracket,
)
from .comorphism import (
    Comorphism,
    SubBundle,
    VBMorphism,
    VBundle,
    fine_restriction,
    higher_tangent_bundle,
    reduce_order,
    section_map,
    tangent_bundle,
    tangent_lift_morphism,
    tangent_map,
    zm_morphism_check,
)
from .errors import DimensionMismatch, NotAlmostLie, NotCoreIdentity
from .expr import Poly, Symbol, total_derivative
from .graded import epsilon_lift, jets, velocity
from .verdict import Verdict

HALF = Fraction(1, 2)


def _freeze(a):
    if isinstance(a, (list, tuple)):
        return tuple(_freeze(x) for x in a)
    return Poly.coerce(a)


def _entries(a):
    if isinstance(a, tuple):
        for x in a:
            yield from _entries(x)
    else:
        yield a


def _shape_ok(a, want: Sequence[int]) -> bool:
    if not want:
        return isinstance(a, Poly)
    return isinstance(a, tuple) and len(a) == want[0] and all(_shape_ok(x, want[1:]) for x in a)


def _shape(a) -> tuple[int, ...]:
    dims = []
    while isinstance(a, tuple):
        dims.append(len(a))
        if not a:
            break
        a = a[0]
    return tuple(dims)


@dataclass(frozen=True)
class HA2:
    """Structure functions of a second-order algebroid; see the module docstring."""

    base: tuple[Symbol, ...]
    fiber1: tuple[Symbol, ...]
    fiber2: tuple[Symbol, ...]
    anchor: tuple
    anchor_quad: tuple
    anchor_core: tuple
    anchor_right: tuple
    bracket: tuple
    core_map: tuple
    mixed: tuple
    z_action: tuple
    cubic: tuple

    FAMILIES = (
        "anchor",
        "anchor_quad",
        "anchor_core",
        "anchor_right",
        "bracket",
        "core_map",
        "mixed",
        "z_action",
        "cubic",
    )

    def __post_init__(self) -> None:
        m, n, p = len(self.base), len(self.fiber1), len(self.fiber2)
        for s in self.base:
            if s.weight != 0:
                raise DimensionMismatch(f"base coordinate {s} must have weight 0")
        for s in self.fiber1:
            if s.weight != 1:
                raise DimensionMismatch(f"coordinate {s} must have weight 1")
        for s in self.fiber2:
            if s.weight != 2:
                raise DimensionMismatch(f"coordinate {s} must have weight 2")
        shapes = self.shapes(m, n, p)
        allowed = set(self.base)
        for name in self.FAMILIES:
            val = _freeze(getattr(self, name))
            object.__setattr__(self, name, val)
            want = shapes[name]
            if not _shape_ok(val, want):
                raise DimensionMismatch(f"{name} has shape {_shape(val)}, expected {want}")
            for e in _entries(val):
                if not e.symbols() <= allowed:
                    raise DimensionMismatch(f"{name} may only depend on base coordinates")
        for a in range(m):
            for i in range(n):
                for j in range(n):
                    if self.anchor_quad[a][i][j] != self.anchor_quad[a][j][i]:
                        raise DimensionMismatch("anchor_quad must be symmetric in its lower indices")
        for mu in range(p):
            for i in range(n):
                for j in range(n):
                    for k in range(n):
                        if self.cubic[mu][i][j][k] != self.cubic[mu][j][i][k]:
                            raise DimensionMismatch("cubic must be symmetric in its first two lower indices")

    @staticmethod
    def shapes(m: int, n: int, p: int) -> dict[str, tuple[int, ...]]:
        return {
            "anchor": (m, n),
            "anchor_quad": (m, n, n),
            "anchor_core": (m, p),
            "anchor_right": (m, n),
            "bracket": (n, n, n),
            "core_map": (p, n),
            "mixed": (p, n, n),
            "z_action": (p, p, n),
            "cubic": (p, n, n, n),
        }

    @classmethod
    def zeros(cls, base, fiber1, fiber2, **families) -> "HA2":
        m, n, p = len(base), len(fiber1), len(fiber2)
        data = {name: _empty(shape) for name, shape in cls.shapes(m, n, p).items()}
        data.update(families)
        return cls(tuple(base), tuple(fiber1), tuple(fiber2), **data)

    @property
    def m(self) -> int:
        return len(self.base)

    @property
    def n(self) -> int:
        return len(self.fiber1)

    @property
    def p(self) -> int:
        return len(self.fiber2)

    @property
    def coords(self) -> tuple[Symbol, ...]:
        return self.base + self.fiber1 + self.fiber2


def _empty(shape):
    """Nested lists of zero polynomials with the given shape."""
    if len(shape) == 1:
        return [Poly() for _ in range(shape[0])]
    return [_empty(shape[1:]) for _ in range(shape[0])]


def z_symbols(p: int, name: str = "z") -> tuple[Symbol, ...]:
    return tuple(Symbol(f"{name}{i + 1}", 0, 2) for i in range(p))


# -- the comorphism ---------------------------------------------------------------


def source_bundle(base: Sequence[Symbol], fiber: Sequence[Symbol], k: int = 2) -> VBundle:
    """``T^k E^1 -> T^k M`` with bi-weights ``(0, alpha)`` and ``(1, alpha)``."""
    bw = {s: (0, 0) for s in base}
    bw.update({s: (1, 0) for s in fiber})
    return higher_tangent_bundle(VBundle(tuple(base), tuple(fiber), bw), k, f"T^{k}(E1)")


def kappa2_of(ha: HA2) -> Comorphism:
    """The comorphism ``T^2 E^1 => T E^2`` of a normal-form structure."""
    m, n, p = ha.m, ha.n, ha.p
    x, y, z = ha.base, ha.fiber1, ha.fiber2
    src = source_bundle(x, y, 2)
    tgt = tangent_bundle(ha.coords, "T(E2)")
    base_map: list[Poly] = [Poly.var(s) for s in x]
    base_map += [sum((ha.anchor[a][i] * y[i] for i in range(n)), Poly()) for a in range(m)]
    for a in range(m):
        quad = sum((ha.anchor_quad[a][i][j] * y[i] * y[j] for i in range(n) for j in range(n)), Poly())
        lin = sum((ha.anchor_core[a][mu] * z[mu] for mu in range(p)), Poly())
        base_map.append(quad * HALF + lin)
    mat = [[Poly() for _ in range(3 * n)] for _ in range(m + n + p)]
    for a in range(m):
        for i in range(n):
            mat[a][i] = ha.anchor_right[a][i]
    for i in range(n):
        mat[m + i][n + i] = Poly.const(1)
        for k in range(n):
            mat[m + i][k] = sum((ha.bracket[i][j][k] * y[j] for j in range(n)), Poly())
    for mu in range(p):
        row = mat[m + n + mu]
        for i in range(n):
            row[2 * n + i] = ha.core_map[mu][i]
        for j in range(n):
            row[n + j] = sum((ha.mixed[mu][i][j] * y[i] for i in range(n)), Poly())
        for i in range(n):
            lin = sum((ha.z_action[mu][nu][i] * z[nu] for nu in range(p)), Poly())
            quad = sum((ha.cubic[mu][j][l][i] * y[j] * y[l] for j in range(n) for l in range(n)), Poly())
            row[i] = lin + quad * HALF
    return Comorphism(src, tgt, tuple(base_map), mat)


def ha2_of(r: Comorphism) -> HA2:
    """Read normal-form structure functions off a comorphism ``T^2 E^1 => T E^2``."""
    tb = r.target.base
    x = tuple(s for s in tb if s.weight == 0)
    y = tuple(s for s in tb if s.weight == 1)
    z = tuple(s for s in tb if s.weight == 2)
    m, n, p = len(x), len(y), len(z)
    if tb != x + y + z or r.target.fiber != tuple(velocity(s) for s in tb):
        raise DimensionMismatch("target must be the tangent bundle of (x, y, z)")
    expected_src = source_bundle(x, tuple(s for s in r.source.fiber[:n]), 2)
    if not r.source.matches(expected_src) or len(r.source.fiber) != 3 * n:
        raise DimensionMismatch("source must be the second tangent lift of E^1")
    ys = r.source.fiber[:n]
    fam = {name: _empty(shape) for name, shape in HA2.shapes(m, n, p).items()}
    for a in range(m):
        e1 = r.base_map[m + a]
        e2 = r.base_map[2 * m + a]
        for i in range(n):
            fam["anchor"][a][i] = e1.diff(y[i])
            for j in range(n):
                fam["anchor_quad"][a][i][j] = e2.diff(y[i]).diff(y[j])
        for mu in range(p):
            fam["anchor_core"][a][mu] = e2.diff(z[mu])
        for i in range(n):
            fam["anchor_right"][a][i] = r.matrix[a][i]
    for i in range(n):
        row = r.matrix[m + i]
        for j in range(n):
            if row[n + j] != Poly.const(int(i == j)):
                raise NotCoreIdentity(f"weight-one core block differs from the identity at ({i}, {j})")
        for k in range(n):
            for j in range(n):
                fam["bracket"][i][j][k] = row[k].diff(y[j])
    for mu in range(p):
        row = r.matrix[m + n + mu]
        for i in range(n):
            fam["core_map"][mu][i] = row[2 * n + i]
        for j in range(n):
            for i in range(n):
                fam["mixed"][mu][i][j] = row[n + j].diff(y[i])
        for i in range(n):
            for nu in range(p):
                fam["z_action"][mu][nu][i] = row[i].diff(z[nu])
            for j in range(n):
                for l in range(n):
                    fam["cubic"][mu][j][l][i] = row[i].diff(y[j]).diff(y[l])
    if tuple(ys) != y:
        raise DimensionMismatch("source fiber coordinates must match the weight-1 target coordinates")
    ha = HA2(x, y, z, **fam)
    rebuilt = kappa2_of(ha)
    if rebuilt.base_map != tuple(r.base_map) or rebuilt.matrix != tuple(r.matrix):
        raise DimensionMismatch("comorphism is not in second-order normal form")
    return ha


def rename_bundle_symbols(r: Comorphism, mapping: dict[Symbol, Symbol]) -> Comorphism:
    """Rename coordinates on both bundles (useful for comparing charts)."""

    def ren(vb: VBundle) -> VBundle:
        f = lambda s: mapping.get(s, s)  # noqa: E731
        bw = None if vb.biweights is None else {f(s): w for s, w in vb.biweights.items()}
        return VBundle(tuple(f(s) for s in vb.base), tuple(f(s) for s in vb.fiber), bw, vb.name)

    sub = {s: Poly.var(t) for s, t in mapping.items()}
    return Comorphism(
        ren(r.source),
        ren(r.target),
        tuple(p.subs(sub) for p in r.base_map),
        [[p.subs(sub) for p in row] for row in r.matrix],
    )


def kappa_tangent(base: Sequence[Symbol], k: int) -> Comorphism:
    """The canonical flip ``T^k TM -> T T^k M`` as a comorphism.

    Source: ``T^k`` of the tangent bundle (fiber ``dx^(alpha)``); target: the
    tangent bundle of ``T^k M``.  Base map and fiber map are identities.
    """
    base = tuple(base)
    tm = VBundle(base, tuple(velocity(s) for s in base), {**{s: (0, 0) for s in base}, **{velocity(s): (1, 0) for s in base}})
    src = higher_tangent_bundle(tm, k, f"T^{k}(TM)")
    tgt = tangent_bundle(tuple(jets(base, k)), f"T(T^{k}M)")
    N = len(src.fiber)
    eye = [[Poly.const(int(i == j)) for j in range(N)] for i in range(N)]
    return Comorphism(src, tgt, tuple(Poly.var(s) for s in src.base), eye)


def tangent_ha2(base: Sequence[Symbol], fiber_name: str = "v") -> HA2:
    """Normal form of ``T^2 M`` viewed as a second-order algebroid."""
    m = len(base)
    y = tuple(Symbol(f"{fiber_name}{i + 1}", 0, 1) for i in range(m))
    z = z_symbols(m)
    eye = [[Poly.const(int(a == i)) for i in range(m)] for a in range(m)]
    return HA2.zeros(base, y, z, anchor=eye, anchor_core=eye, anchor_right=eye, core_map=eye)


def reduce_to_order1(ha: HA2) -> Algebroid1:
    """The order-one algebroid obtained by dropping all weight-2 equations."""
    return algebroid_of(reduce_order(kappa2_of(ha), 1))


# -- prolongation ------------------------------------------------------------------


def prolong2(A: Algebroid1, z_name: str = "z") -> HA2:
    """Second-order prolongation of an almost-Lie algebroid.

    The defining equations of the order-one comorphism are differentiated
    once along curves (the tangent lift restricted to second jets), the
    base velocity is eliminated with the anchor equation, and the target is
    restricted to admissible one-jets.  Coefficients of the resulting
    equations give the normal form, with ``z^mu`` standing for the
    derivative of ``y^mu``.
    """
    al = is_almost_lie(A)
    if not al:
        raise NotAlmostLie(f"prolongation needs an almost-Lie algebroid ({al.describe()})")
    m, n = A.m, A.n
    x, ys = A.base, A.fiber
    names = {s.name for s in x + ys}
    z = z_symbols(n, z_name)
    if names & {s.name for s in z}:
        raise DimensionMismatch(f"pick another name for the weight-2 coordinates than {z_name!r}")
    under = tuple(Symbol("u_" + s.name, 0, 1) for s in ys)

    left = [sum((A.QL[b][i] * under[i] for i in range(n)), Poly()) for b in range(m)]
    elim = {s.jet(1): e for s, e in zip(x, left)}

    def d(p: Poly) -> Poly:
        return total_derivative(p, 2).subs(elim)

    xdd = [d(e) for e in left]
    u = [sum((A.QR[b][i] * ys[i] for i in range(n)), Poly()) for b in range(m)]
    v = [ys[k].jet(1) + sum((A.Qbr[k][i][j] * under[i] * ys[j] for i in range(n) for j in range(n)), Poly()) for k in range(n)]
    w = [d(p) for p in v]
    # the target point must stay on the admissible jets: differentiating the
    # constraint x.d1 = QL(x) u along (u, v) has to reproduce d(u)
    for b in range(m):
        tangency = sum((left[b].diff(x[c]) * u[c] for c in range(m)), Poly()) + sum(
            (left[b].diff(under[i]) * v[i] for i in range(n)), Poly()
        )
        defect = d(u[b]) - tangency
        if not defect.is_zero():
            raise NotAlmostLie(f"prolongation is inconsistent in component {x[b]}: {defect}")
    ren = {s: Poly.var(t) for s, t in zip(under, ys)}
    ren.update({s.jet(1): Poly.var(t) for s, t in zip(under, z)})

    cols = list(ys) + [s.jet(1) for s in ys] + [s.jet(2) for s in ys]

    def row_of(expr: Poly) -> list[Poly]:
        return [expr.diff(c).subs(ren) for c in cols]

    src = source_bundle(x, ys, 2)
    tgt = tangent_bundle(x + ys + z, "T(E2)")
    base_map = [Poly.var(s) for s in x] + [e.subs(ren) for e in left] + [e.subs(ren) for e in xdd]
    mat = [row_of(e) for e in u] + [row_of(e) for e in v] + [row_of(e) for e in w]
    return ha2_of(Comorphism(src, tgt, tuple(base_map), mat))


# -- lifts and axioms ------------------------------------------------------------------


def alg_lift(ha: HA2, s: Sequence[Poly], alpha: int, kappa: Comorphism | None = None) -> list[Poly]:
    """Algebroid lift ``s^{[2-alpha]}``: a vector field on ``E^2``."""
    kappa = kappa or kappa2_of(ha)
    return section_map(kappa, epsilon_lift(s, 2, alpha).flat())


def is_skew2(ha: HA2) -> Verdict:
    for a in range(ha.m):
        for i in range(ha.n):
            if ha.anchor[a][i] != ha.anchor_right[a][i]:
                return Verdict.failed(("anchor", a, i), "left and right anchors differ")
    for i in range(ha.n):
        for j in range(ha.n):
            for k in range(ha.n):
                if ha.bracket[i][j][k] != -ha.bracket[i][k][j]:
                    return Verdict.failed(("bracket", i, j, k), "weight-one bracket is not antisymmetric")
    return Verdict.passed()


def anchor_morphisms(ha: HA2) -> tuple[VBMorphism, VBMorphism]:
    """``(T^2 rho^1, T rho^2)`` for the almost-Lie test."""
    x, y = ha.base, ha.fiber1
    tm = VBundle(x, tuple(velocity(s) for s in x))
    rho1 = VBMorphism(VBundle(x, y), tm, tuple(Poly.var(s) for s in x), ha.anchor)
    t2rho1 = tangent_lift_morphism(rho1, 2)
    r = kappa2_of(ha)
    t2rho1 = VBMorphism(r.source, t2rho1.target, t2rho1.base_map, t2rho1.matrix)
    trho2 = tangent_map(list(r.base_map), list(ha.coords), list(jets(x, 2)))
    return t2rho1, trho2


def al_check2(ha: HA2) -> Verdict:
    """Almost-Lie: the anchors form a morphism onto the canonical flip of ``T^2 M``."""
    phi1, phi2 = anchor_morphisms(ha)
    kt = kappa_tangent(ha.base, 2)
    phi1 = VBMorphism(phi1.source, kt.source, phi1.base_map, phi1.matrix)
    phi2 = VBMorphism(phi2.source, kt.target, phi2.base_map, phi2.matrix)
    return zm_morphism_check(phi1, phi2, kappa2_of(ha), kt)


def lie_check2(ha: HA2, sections: Sequence[Sequence[Poly]] | None = None) -> Verdict:
    """Skew, almost-Lie, and lifts of sections bracket like the sections do.

    For every pair of sections and all lift degrees, the commutator of
    algebroid lifts (scaled by ``2!/(2-alpha)!``) is compared with the lift
    of the bracket on ``E^1``; lifts of total degree above 2 must commute.
    """
    sk = is_skew2(ha)
    if not sk:
        return sk
    al = al_check2(ha)
    if not al:
        return Verdict.failed(al.witness, "not almost-Lie: " + al.note)
    A1 = reduce_to_order1(ha)
    if sections is None:
        sections = [A1.basis_section(i) for i in range(ha.n)]
    kappa = kappa2_of(ha)
    coords = ha.coords
    scale = [Fraction(factorial(2), factorial(2 - a)) for a in range(3)]
    lifts = {
        (idx, a): [p * scale[a] for p in alg_lift(ha, s, a, kappa)] for idx, s in enumerate(sections) for a in range(3)
    }
    count = 0
    for i, si in enumerate(sections):
        for j, sj in enumerate(sections):
            br = bracket1(A1, si, sj)
            for a in range(3):
                for b in range(3):
                    lhs = vector_field_bracket(lifts[(i, a)], lifts[(j, b)], coords)
                    if a + b <= 2:
                        rhs = [p * scale[a + b] for p in alg_lift(ha, br, a + b, kappa)]
                    else:
                        rhs = [Poly() for _ in coords]
                    count += 1
                    for c, (l, r) in enumerate(zip(lhs, rhs)):
                        if l != r:
                            return Verdict.failed(
                                {"sections": (i, j), "degrees": (a, b), "component": str(velocity(coords[c])), "defect": str(l - r)},
                                "lifted brackets disagree",
                            )
    return Verdict.passed(f"{count} lifted-bracket identities", identities=count)


def is_strong(ha: HA2) -> Verdict:
    """The weight-2 core map must be invertible (square with non-vanishing determinant)."""
    if ha.p != ha.n:
        return Verdict.failed(("shape", ha.p, ha.n), "core map is not square")
    det = linalg.poly_det(ha.core_map)
    if det.is_zero():
        return Verdict.failed(("det", "0"), "core map is singular")
    if det.is_constant():
        return Verdict.passed(f"det = {det}")
    return Verdict.passed(f"invertible away from det = {det} = 0 (checked pointwise only)", pointwise=True)


def sub_ha_check(
    ha: HA2, fiber1_basis: Sequence[Sequence], fiber2_basis: Sequence[Sequence]
) -> tuple[Comorphism | None, Verdict]:
    """Does the comorphism restrict to the graded subbundle spanned by the bases?

    The base stays whole; ``fiber1_basis`` spans a subspace of the ``y``
    coordinates and ``fiber2_basis`` of the ``z`` coordinates.
    """
    m, n, p = ha.m, ha.n, ha.p
    r = kappa2_of(ha)
    v1 = [[Fraction(c) for c in v] for v in fiber1_basis]
    v2 = [[Fraction(c) for c in v] for v in fiber2_basis]
    src_basis = []
    for blk in range(3):
        for v in v1:
            vec = [Fraction(0)] * (3 * n)
            vec[blk * n:(blk + 1) * n] = v
            src_basis.append(vec)
    dim = m + n + p

    def embed(v, offset):
        vec = [Fraction(0)] * dim
        vec[offset:offset + len(v)] = v
        return vec

    tgt_basis = [embed([Fraction(int(a == b)) for b in range(m)], 0) for a in range(m)]
    tgt_basis += [embed(v, m) for v in v1] + [embed(v, m + n) for v in v2]
    sub_src = SubBundle.linear(r.source, src_basis)
    sub_tgt = SubBundle.linear(r.target, tgt_basis, tgt_basis)
    return fine_restriction(r, sub_src, sub_tgt)
