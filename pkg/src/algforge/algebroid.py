"""Order-one algebroids in local coordinates.

An algebroid on ``E -> M`` with base coordinates ``x^a`` and fiber
coordinates ``y^i`` is given by a left anchor ``QL[a][i]``, a right anchor
``QR[a][i]`` and bracket structure functions ``Qbr[k][i][j]``, all
polynomials in the base coordinates.  On local sections::

    [s, t]^k = QL[a][i] s^i dt^k/dx^a - QR[a][j] t^j ds^k/dx^a + Qbr[k][i][j] s^i t^j
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Sequence

from .comorphism import (
    Comorphism,
    VBMorphism,
    VBundle,
    higher_tangent_bundle,
    section_map,
    tangent_bundle,
    tangent_lift_morphism,
    total_space_map,
    zm_morphism_check,
)
from .errors import BundleMismatch, DimensionMismatch, NotCoreIdentity
from .expr import Poly, Symbol, total_derivative
from .graded import SectionLift, epsilon_lift, jets, velocity
from .verdict import Verdict

Section = Sequence[Poly]


def _grid(rows: int, cols: int) -> list[list[Poly]]:
    return [[Poly() for _ in range(cols)] for _ in range(rows)]


@dataclass(frozen=True)
class Algebroid1:
    """Structure functions of an algebroid; see the module docstring."""

    base: tuple[Symbol, ...]
    fiber: tuple[Symbol, ...]
    QL: tuple[tuple[Poly, ...], ...]
    QR: tuple[tuple[Poly, ...], ...]
    Qbr: tuple[tuple[tuple[Poly, ...], ...], ...]

    def __post_init__(self) -> None:
        m, n = len(self.base), len(self.fiber)
        conv = lambda rows: tuple(tuple(Poly.coerce(p) for p in r) for r in rows)  # noqa: E731
        object.__setattr__(self, "QL", conv(self.QL))
        object.__setattr__(self, "QR", conv(self.QR))
        object.__setattr__(self, "Qbr", tuple(conv(block) for block in self.Qbr))
        if len(self.QL) != m or any(len(r) != n for r in self.QL):
            raise DimensionMismatch("left anchor must be m x n")
        if len(self.QR) != m or any(len(r) != n for r in self.QR):
            raise DimensionMismatch("right anchor must be m x n")
        if len(self.Qbr) != n or any(len(b) != n or any(len(r) != n for r in b) for b in self.Qbr):
            raise DimensionMismatch("bracket structure functions must be n x n x n")
        allowed = set(self.base)
        for p in self._all_entries():
            if not p.symbols() <= allowed:
                raise DimensionMismatch("structure functions may only depend on base coordinates")

    def _all_entries(self):
        for r in self.QL + self.QR:
            yield from r
        for b in self.Qbr:
            for r in b:
                yield from r

    @property
    def m(self) -> int:
        return len(self.base)

    @property
    def n(self) -> int:
        return len(self.fiber)

    def bundle(self) -> VBundle:
        bw = {s: (0, 0) for s in self.base}
        bw.update({s: (1, 0) for s in self.fiber})
        return VBundle(self.base, self.fiber, bw, "E")

    def basis_section(self, i: int) -> list[Poly]:
        return [Poly.const(int(j == i)) for j in range(self.n)]


# -- constructors -------------------------------------------------------------


def base_symbols(m: int, name: str = "x") -> tuple[Symbol, ...]:
    return tuple(Symbol(f"{name}{a + 1}", 0, 0) for a in range(m))


def fiber_symbols(n: int, name: str = "y", weight: int = 1) -> tuple[Symbol, ...]:
    return tuple(Symbol(f"{name}{i + 1}", 0, weight) for i in range(n))


def tangent_algebroid(base: Sequence[Symbol], fiber_name: str | None = "v") -> Algebroid1:
    """The tangent algebroid ``TM -> M``.

    Fiber coordinates are ``v1, v2, ...``; with ``fiber_name=None`` they are
    the velocity symbols ``dx1, ...`` used for tangent bundles elsewhere.
    """
    m = len(base)
    eye = [[Poly.const(int(a == i)) for i in range(m)] for a in range(m)]
    if fiber_name is None:
        fib = tuple(Symbol(velocity(s).name, 0, 1) for s in base)
    else:
        fib = fiber_symbols(m, fiber_name)
    zero = [_grid(m, m) for _ in range(m)]
    return Algebroid1(tuple(base), fib, eye, eye, zero)


def lie_algebra_algebroid(consts: Sequence[Sequence[Sequence[Fraction]]], name: str = "y") -> Algebroid1:
    """A Lie algebra (or any bilinear bracket) as an algebroid over a point.

    ``consts[k][i][j]`` is the ``k``-th component of ``[e_i, e_j]``.
    """
    n = len(consts)
    q = [[[Poly.const(consts[k][i][j]) for j in range(n)] for i in range(n)] for k in range(n)]
    return Algebroid1((), fiber_symbols(n, name), (), (), q)


# -- brackets and anchors ----------------------------------------------------------


def anchor(Q: Sequence[Sequence[Poly]], s: Section) -> list[Poly]:
    """Vector field ``Q(s)`` on the base, as components."""
    return [sum((q * v for q, v in zip(row, s)), Poly()) for row in Q]


def vector_field_apply(v: Sequence[Poly], f: Poly, coords: Sequence[Symbol]) -> Poly:
    return sum((c * f.diff(x) for c, x in zip(v, coords)), Poly())


def vector_field_bracket(v: Sequence[Poly], w: Sequence[Poly], coords: Sequence[Symbol]) -> list[Poly]:
    """Commutator of vector fields given by components in ``coords``."""
    return [vector_field_apply(v, wc, coords) - vector_field_apply(w, vc, coords) for vc, wc in zip(v, w)]


def bracket(A: Algebroid1, s: Section, t: Section) -> list[Poly]:
    """Bracket of local sections given by their components."""
    s = [Poly.coerce(p) for p in s]
    t = [Poly.coerce(p) for p in t]
    if len(s) != A.n or len(t) != A.n:
        raise DimensionMismatch("sections must have one component per fiber coordinate")
    left = anchor(A.QL, s)
    right = anchor(A.QR, t)
    out = []
    for k in range(A.n):
        val = vector_field_apply(left, t[k], A.base) - vector_field_apply(right, s[k], A.base)
        for i in range(A.n):
            if s[i].is_zero():
                continue
            for j in range(A.n):
                q = A.Qbr[k][i][j]
                if q and t[j]:
                    val = val + q * s[i] * t[j]
        out.append(val)
    return out


def leibniz_check(A: Algebroid1, f: Poly, g: Poly, s: Section, t: Section) -> Verdict:
    """``[f s, g t] = f rho_L(s)(g) t - g rho_R(t)(f) s + f g [s, t]``."""
    lhs = bracket(A, [f * p for p in s], [g * p for p in t])
    lg = vector_field_apply(anchor(A.QL, s), g, A.base)
    rf = vector_field_apply(anchor(A.QR, t), f, A.base)
    br = bracket(A, s, t)
    for k in range(A.n):
        rhs = f * lg * t[k] - g * rf * s[k] + f * g * br[k]
        if lhs[k] != rhs:
            return Verdict.failed((k, str(lhs[k] - rhs)), "Leibniz rule violated")
    return Verdict.passed()


def jacobiator(A: Algebroid1, a: Section, b: Section, c: Section) -> list[Poly]:
    x = bracket(A, a, bracket(A, b, c))
    y = bracket(A, b, bracket(A, c, a))
    z = bracket(A, c, bracket(A, a, b))
    return [p + q + r for p, q, r in zip(x, y, z)]


# -- the comorphism of an algebroid -------------------------------------------


def _order_one_bundles(A: Algebroid1) -> tuple[VBundle, VBundle]:
    coords = set(A.base) | set(A.fiber)
    for s in A.base:
        if s.jet(1) in A.base:
            raise DimensionMismatch("base coordinates must not contain their own time derivatives")
    for s in A.base + A.fiber:
        if velocity(s) in coords:
            raise DimensionMismatch(f"coordinate name {velocity(s)} is reserved for the velocity of {s}")
    src = higher_tangent_bundle(VBundle(A.base, A.fiber), 1, "T(E)")
    bw_src = {s: (0, 0) for s in A.base}
    bw_src.update({s.jet(1): (0, 1) for s in A.base})
    bw_src.update({s: (1, 0) for s in A.fiber})
    bw_src.update({s.jet(1): (1, 1) for s in A.fiber})
    src = VBundle(src.base, src.fiber, bw_src, "T(E)->T(M)")
    tgt = tangent_bundle(A.base + A.fiber, "TE->E")
    bw_tgt = {s: (0, 0) for s in A.base}
    bw_tgt.update({s: (0, 1) for s in A.fiber})
    bw_tgt.update({velocity(s): (1, 0) for s in A.base})
    bw_tgt.update({velocity(s): (1, 1) for s in A.fiber})
    return src, VBundle(tgt.base, tgt.fiber, bw_tgt, tgt.name)


def kappa_of(A: Algebroid1) -> Comorphism:
    """The comorphism ``T(E) => TE`` encoding the algebroid.

    Equations, with ``_`` marking target coordinates::

        x = x_,  x.d1^b = QL[b][i] y_^i,
        dx_^b = QR[b][i] y^i,  dy_^k = y.d1^k + Qbr[k][i][j] y_^i y^j
    """
    src, tgt = _order_one_bundles(A)
    m, n = A.m, A.n
    base_map = [Poly.var(s) for s in A.base] + [
        sum((A.QL[b][i] * A.fiber[i] for i in range(n)), Poly()) for b in range(m)
    ]
    mat = _grid(m + n, 2 * n)
    for b in range(m):
        for i in range(n):
            mat[b][i] = A.QR[b][i]
    for k in range(n):
        mat[m + k][n + k] = Poly.const(1)
        for j in range(n):
            mat[m + k][j] = sum((A.Qbr[k][i][j] * A.fiber[i] for i in range(n)), Poly())
    return Comorphism(src, tgt, tuple(base_map), mat)


def algebroid_of(r: Comorphism) -> Algebroid1:
    """Read structure functions back from a comorphism in the normal form."""
    tb = r.target.base
    # the target base must be (x, y), target fiber (dx, dy)
    if len(r.source.base) % 2 or len(r.source.fiber) % 2:
        raise DimensionMismatch("source must be the tangent lift of a vector bundle")
    m = len(r.source.base) // 2
    n = len(r.source.fiber) // 2
    base, fib = tuple(r.source.base[:m]), tuple(r.source.fiber[:n])
    if tuple(s.jet(1) for s in base) != tuple(r.source.base[m:]) or tuple(s.jet(1) for s in fib) != tuple(r.source.fiber[n:]):
        raise DimensionMismatch("source coordinates are not (x, x.d1; y, y.d1)")
    if tb != base + fib or r.target.fiber != tuple(velocity(s) for s in tb):
        raise DimensionMismatch("target must be the tangent bundle of E")
    for a in range(m):
        if r.base_map[a] != Poly.var(base[a]):
            raise DimensionMismatch("the relation must cover the identity of the base")
    QL = _grid(m, n)
    for b in range(m):
        p = r.base_map[m + b]
        if p.degree_in(fib) > 1 or not p.subs({s: 0 for s in fib}).is_zero():
            raise DimensionMismatch("left anchor equation is not linear in the fiber")
        for i in range(n):
            QL[b][i] = p.diff(fib[i])
    QR = _grid(m, n)
    for b in range(m):
        row = r.matrix[b]
        for i in range(n):
            if row[i].symbols() & set(fib):
                raise DimensionMismatch("right anchor depends on fiber coordinates")
            QR[b][i] = row[i]
            if not row[n + i].is_zero():
                raise DimensionMismatch("right anchor involves derivatives of the fiber")
    Qbr = [_grid(n, n) for _ in range(n)]
    for k in range(n):
        row = r.matrix[m + k]
        for j in range(n):
            if row[n + j] != Poly.const(int(j == k)):
                raise NotCoreIdentity(f"core block differs from the identity in row {k}, column {j}")
        for j in range(n):
            p = row[j]
            if p.degree_in(fib) > 1 or not p.subs({s: 0 for s in fib}).is_zero():
                raise DimensionMismatch("bracket equation is not linear in the fiber")
            for i in range(n):
                Qbr[k][i][j] = p.diff(fib[i])
    return Algebroid1(base, fib, QL, QR, Qbr)


def transpose(A: Algebroid1) -> Algebroid1:
    """The transposed algebroid: anchors swapped, ``[s, t]^T = -[t, s]``."""
    n = A.n
    q = [[[-A.Qbr[k][j][i] for j in range(n)] for i in range(n)] for k in range(n)]
    return Algebroid1(A.base, A.fiber, A.QR, A.QL, q)


# -- axioms ------------------------------------------------------------------


def is_skew(A: Algebroid1) -> Verdict:
    for a in range(A.m):
        for i in range(A.n):
            if A.QL[a][i] != A.QR[a][i]:
                return Verdict.failed(("anchor", a, i), "left and right anchors differ")
    for k in range(A.n):
        for i in range(A.n):
            for j in range(i, A.n):
                if A.Qbr[k][i][j] != -A.Qbr[k][j][i]:
                    return Verdict.failed(("bracket", k, i, j), "bracket is not antisymmetric")
    return Verdict.passed()


def anchor_defect(A: Algebroid1, i: int, j: int) -> list[Poly]:
    """``rho([e_i, e_j]) - [rho e_i, rho e_j]`` as a vector field."""
    ei, ej = A.basis_section(i), A.basis_section(j)
    lhs = anchor(A.QL, bracket(A, ei, ej))
    rhs = vector_field_bracket(anchor(A.QL, ei), anchor(A.QL, ej), A.base)
    return [a - b for a, b in zip(lhs, rhs)]


def is_almost_lie(A: Algebroid1) -> Verdict:
    """Skew and the anchor maps brackets to commutators of vector fields."""
    sk = is_skew(A)
    if not sk:
        return sk
    for i in range(A.n):
        for j in range(i + 1, A.n):
            d = anchor_defect(A, i, j)
            if any(not p.is_zero() for p in d):
                return Verdict.failed(("anchor", i, j, [str(p) for p in d]), "anchor is not a bracket homomorphism")
    return Verdict.passed()


def is_lie(A: Algebroid1) -> Verdict:
    """Almost-Lie and the Jacobiator vanishes on all basis triples."""
    al = is_almost_lie(A)
    if not al:
        return al
    n = A.n
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                jac = jacobiator(A, A.basis_section(i), A.basis_section(j), A.basis_section(k))
                if any(not p.is_zero() for p in jac):
                    return Verdict.failed(((i, j, k), [str(p) for p in jac]), "Jacobi identity fails")
    return Verdict.passed()


# -- morphisms and relations ---------------------------------------------------


def morphism_check(phi: VBMorphism, A: Algebroid1, A2: Algebroid1) -> Verdict:
    """``phi`` is an algebroid morphism iff ``(T phi, T phi)`` maps the
    comorphism of ``A`` to that of ``A2``."""
    if not phi.source.matches(VBundle(A.base, A.fiber)) or not phi.target.matches(VBundle(A2.base, A2.fiber)):
        raise BundleMismatch("bundle map must go from the bundle of A to the bundle of A2")
    k1, k2 = kappa_of(A), kappa_of(A2)
    t_lift = tangent_lift_morphism(VBMorphism(VBundle(A.base, A.fiber), VBundle(A2.base, A2.fiber), phi.base_map, phi.matrix), 1)
    t_lift = VBMorphism(k1.source, k2.source, t_lift.base_map, t_lift.matrix)
    t_map = total_space_map(phi)
    t_map = VBMorphism(k1.target, k2.target, t_map.base_map, t_map.matrix)
    return zm_morphism_check(t_lift, t_map, k1, k2)


def algebroidal_relation_check(r: Comorphism, A1: Algebroid1, A2: Algebroid1) -> Verdict:
    """Is the comorphism ``r: E1 => E2`` compatible with both algebroid structures?

    Both conditions are checked on basis sections: anchors of related
    sections are related by the base map, and the section map preserves
    brackets.
    """
    if not r.source.matches(VBundle(A1.base, A1.fiber)) or not r.target.matches(VBundle(A2.base, A2.fiber)):
        raise BundleMismatch("comorphism must relate the bundles of the two algebroids")
    sub = dict(zip(A1.base, r.base_map))
    jac = [[p.diff(s) for s in A2.base] for p in r.base_map]
    images = [section_map(r, A1.basis_section(i)) for i in range(A1.n)]
    for label, Q1, Q2 in (("left", A1.QL, A2.QL), ("right", A1.QR, A2.QR)):
        for i in range(A1.n):
            v2 = anchor(Q2, images[i])
            pushed = [sum((jr[c] * v2[c] for c in range(A2.m)), Poly()) for jr in jac]
            v1 = [p.subs(sub) for p in anchor(Q1, A1.basis_section(i))]
            for a in range(A1.m):
                if pushed[a] != v1[a]:
                    return Verdict.failed((label, i, str(A1.base[a]), str(pushed[a] - v1[a])), f"{label} anchors are not related")
    for i in range(A1.n):
        for j in range(A1.n):
            lhs = section_map(r, bracket(A1, A1.basis_section(i), A1.basis_section(j)))
            rhs = bracket(A2, images[i], images[j])
            for c in range(A2.n):
                if lhs[c] != rhs[c]:
                    return Verdict.failed(("bracket", i, j, c, str(lhs[c] - rhs[c])), "brackets are not related")
    return Verdict.passed()


# -- tangent lifts of algebroids --------------------------------------------------


def lift_algebroid(A: Algebroid1, k: int) -> Algebroid1:
    """The lifted algebroid on ``T^k E -> T^k M``.

    Obtained by applying the ``k``-th tangent functor to the defining
    equations: every equation is differentiated ``gamma`` times along a
    curve, and the coefficients of the jets of the fiber coordinates give
    the new structure functions.
    """
    m, n = A.m, A.n
    under = tuple(Symbol("u_" + s.name, 0, s.weight) for s in A.fiber)
    lbase = tuple(jets(A.base, k))
    lfib = tuple(jets(A.fiber, k))
    under_j = jets(under, k)
    N = (k + 1) * n

    def derivs(p: Poly) -> list[Poly]:
        out = [p]
        for _ in range(k):
            out.append(total_derivative(out[-1], k))
        return out

    QL, QR = _grid((k + 1) * m, N), _grid((k + 1) * m, N)
    for a in range(m):
        dl = derivs(sum((A.QL[a][i] * under[i] for i in range(n)), Poly()))
        dr = derivs(sum((A.QR[a][i] * A.fiber[i] for i in range(n)), Poly()))
        for g in range(k + 1):
            for col in range(N):
                QL[g * m + a][col] = dl[g].diff(under_j[col])
                QR[g * m + a][col] = dr[g].diff(lfib[col])
    Qbr = [_grid(N, N) for _ in range(N)]
    for c in range(n):
        dc = derivs(
            sum((A.Qbr[c][i][j] * under[i] * A.fiber[j] for i in range(n) for j in range(n)), Poly())
        )
        for g in range(k + 1):
            row = g * n + c
            for col_i in range(N):
                di = dc[g].diff(under_j[col_i])
                if di.is_zero():
                    continue
                for col_j in range(N):
                    Qbr[row][col_i][col_j] = di.diff(lfib[col_j])
    return Algebroid1(lbase, lfib, QL, QR, Qbr)


def lifted_bracket(A: Algebroid1, k: int, s1: Section, alpha: int, s2: Section, beta: int) -> SectionLift:
    """Bracket of the lifts ``s1^{(k-alpha)}`` and ``s2^{(k-beta)}`` on ``T^k E``.

    Uses the closed form: the result is a multiple of the lift of
    ``[s1, s2]`` of degree ``alpha + beta``, and zero once that exceeds ``k``.
    """
    if alpha + beta > k:
        n = len(s1)
        return SectionLift(tuple(tuple(Poly() for _ in range(n)) for _ in range(k + 1)), k)
    c = Fraction(factorial(k), factorial(k - alpha - beta)) * Fraction(factorial(k - alpha), factorial(k)) * Fraction(
        factorial(k - beta), factorial(k)
    )
    return epsilon_lift(bracket(A, s1, s2), k, alpha + beta).scaled(c)
