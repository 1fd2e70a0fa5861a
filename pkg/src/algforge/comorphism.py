"""Vector bundle comorphisms and ordinary vector bundle morphisms.

A comorphism ``r`` from ``E1 -> M1`` to ``E2 -> M2`` is stored as a base map
``M2 -> M1`` together with, at every ``y`` in ``M2``, a linear map from the
fiber of ``E1`` over ``r(y)`` to the fiber of ``E2`` over ``y``.  In local
coordinates both are polynomials in the base coordinates of ``M2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Mapping, Sequence

from . import linalg
from .errors import BasePointMismatch, BundleMismatch, DimensionMismatch, NotDoublyGraded, NotInvertible
from .expr import Poly, Symbol, total_derivative
from .graded import BiWeight, jets, velocity
from .verdict import Verdict

PolyMatrix = tuple[tuple[Poly, ...], ...]


@dataclass(frozen=True)
class VBundle:
    """Local coordinates of a vector bundle: base symbols and fiber symbols."""

    base: tuple[Symbol, ...]
    fiber: tuple[Symbol, ...]
    biweights: Mapping[Symbol, BiWeight] | None = field(default=None, compare=False, hash=False)
    name: str = field(default="", compare=False)

    @property
    def rank(self) -> int:
        return len(self.fiber)

    @property
    def dim_base(self) -> int:
        return len(self.base)

    def matches(self, other: "VBundle") -> bool:
        return self.base == other.base and self.fiber == other.fiber

    def dual(self) -> "VBundle":
        def toggle(s: Symbol) -> Symbol:
            n = s.name[2:] if s.name.startswith("p_") else "p_" + s.name
            return Symbol(n, s.jet_order, s.weight)

        bw = None
        if self.biweights is not None:
            bw = {s: self.biweights[s] for s in self.base}
            bw.update({toggle(s): self.biweights[s] for s in self.fiber})
        return VBundle(self.base, tuple(toggle(s) for s in self.fiber), bw, f"dual({self.name})")

    def biweight(self, s: Symbol) -> BiWeight:
        if self.biweights is None:
            raise NotDoublyGraded(f"bundle {self.name or '?'} carries no bi-weights")
        return self.biweights[s]


def tangent_bundle(syms: Sequence[Symbol], name: str = "") -> VBundle:
    """``TN -> N`` for a chart with (graded) weights; velocities are linear."""
    vel = tuple(velocity(s) for s in syms)
    bw: dict[Symbol, BiWeight] = {s: (0, s.weight) for s in syms}
    bw.update({v: (1, s.weight) for s, v in zip(syms, vel)})
    return VBundle(tuple(syms), vel, bw, name or "T")


def higher_tangent_bundle(vb: VBundle, k: int, name: str = "") -> VBundle:
    """``T^k E -> T^k M`` for a vector bundle ``E -> M``."""
    bw: dict[Symbol, BiWeight] = {}
    for s in vb.base + vb.fiber:
        lin, gr = vb.biweights[s] if vb.biweights is not None else ((1, 0) if s in vb.fiber else (0, 0))
        for a in range(k + 1):
            bw[s.jet(a)] = (lin, gr + a)
    return VBundle(tuple(jets(vb.base, k)), tuple(jets(vb.fiber, k)), bw, name or f"T^{k}({vb.name})")


@dataclass(frozen=True)
class FiberVector:
    """A point of a vector bundle: base point and fiber components."""

    base_point: Mapping[Symbol, Fraction]
    values: tuple[Fraction, ...]


def _as_matrix(rows) -> PolyMatrix:
    return tuple(tuple(Poly.coerce(p) for p in row) for row in rows)


@dataclass(frozen=True)
class Comorphism:
    """Comorphism ``source => target``; see the module docstring."""

    source: VBundle
    target: VBundle
    base_map: tuple[Poly, ...]
    matrix: PolyMatrix

    def __post_init__(self) -> None:
        object.__setattr__(self, "base_map", tuple(Poly.coerce(p) for p in self.base_map))
        object.__setattr__(self, "matrix", _as_matrix(self.matrix))
        if len(self.base_map) != self.source.dim_base:
            raise DimensionMismatch("base map must give every source base coordinate")
        if len(self.matrix) != self.target.rank:
            raise DimensionMismatch("matrix needs one row per target fiber coordinate")
        for row in self.matrix:
            if len(row) != self.source.rank:
                raise DimensionMismatch("matrix needs one column per source fiber coordinate")
        allowed = set(self.target.base)
        for p in self.base_map + tuple(p for row in self.matrix for p in row):
            extra = p.symbols() - allowed
            if extra:
                raise DimensionMismatch(f"entries may only use target base coordinates, found {sorted(map(str, extra))}")

    def equations(self) -> list[str]:
        """Human-readable defining equations; target-side symbols end in ``_``."""
        tgt = {s: Symbol(s.name + "_", s.jet_order, s.weight) for s in self.target.base}
        out = []
        for s, p in zip(self.source.base, self.base_map):
            out.append(f"{s} = {p.subs(tgt)}")
        for t, row in zip(self.target.fiber, self.matrix):
            rhs = Poly()
            for s, p in zip(self.source.fiber, row):
                rhs = rhs + p.subs(tgt) * s
            out.append(f"{t}_ = {rhs}")
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Comorphism):
            return NotImplemented
        return (
            self.source.matches(other.source)
            and self.target.matches(other.target)
            and self.base_map == other.base_map
            and self.matrix == other.matrix
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class VBMorphism:
    """Ordinary bundle map ``source -> target`` covering a base map."""

    source: VBundle
    target: VBundle
    base_map: tuple[Poly, ...]
    matrix: PolyMatrix

    def __post_init__(self) -> None:
        object.__setattr__(self, "base_map", tuple(Poly.coerce(p) for p in self.base_map))
        object.__setattr__(self, "matrix", _as_matrix(self.matrix))
        if len(self.base_map) != self.target.dim_base:
            raise DimensionMismatch("base map must give every target base coordinate")
        if len(self.matrix) != self.target.rank or any(len(r) != self.source.rank for r in self.matrix):
            raise DimensionMismatch("matrix shape must be rank(target) x rank(source)")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VBMorphism):
            return NotImplemented
        return (
            self.source.matches(other.source)
            and self.target.matches(other.target)
            and self.base_map == other.base_map
            and self.matrix == other.matrix
        )

    __hash__ = None  # type: ignore[assignment]


# -- evaluation -------------------------------------------------------------


def _eval_matrix(m: PolyMatrix, point: Mapping[Symbol, Fraction]) -> list[list[Fraction]]:
    return [[p.evaluate(point) for p in row] for row in m]


def apply(r: Comorphism, y: Mapping[Symbol, Fraction], x: FiberVector) -> FiberVector:
    """Image of a fiber vector over ``r(y)`` in the fiber of the target over ``y``."""
    expected = {s: p.evaluate(y) for s, p in zip(r.source.base, r.base_map)}
    given = {s: Fraction(x.base_point[s]) for s in r.source.base if s in x.base_point}
    if len(given) != len(expected) or any(expected[s] != given[s] for s in expected):
        raise BasePointMismatch(f"vector lies over {given}, comorphism expects {expected}")
    if len(x.values) != r.source.rank:
        raise DimensionMismatch("fiber vector has the wrong rank")
    mat = _eval_matrix(r.matrix, y)
    vals = tuple(sum((mat[i][j] * Fraction(x.values[j]) for j in range(r.source.rank)), Fraction(0)) for i in range(r.target.rank))
    return FiberVector({s: Fraction(y[s]) for s in r.target.base}, vals)


def section_map(r: Comorphism, s: Sequence[Poly]) -> list[Poly]:
    """Push a section of the source to a section of the target: ``y -> r_y(s(r(y)))``."""
    if len(s) != r.source.rank:
        raise DimensionMismatch("section has the wrong rank")
    sub = dict(zip(r.source.base, r.base_map))
    pulled = [Poly.coerce(p).subs(sub) for p in s]
    return [sum((m * v for m, v in zip(row, pulled)), Poly()) for row in r.matrix]


def compose(r2: Comorphism, r1: Comorphism) -> Comorphism:
    """``r2 o r1`` for ``r1: E1 => E2`` and ``r2: E2 => E3``."""
    if not r1.target.matches(r2.source):
        raise BundleMismatch("target of the first comorphism differs from the source of the second")
    sub = dict(zip(r2.source.base, r2.base_map))
    base = tuple(p.subs(sub) for p in r1.base_map)
    m1 = [[p.subs(sub) for p in row] for row in r1.matrix]
    mat = linalg.matmul(r2.matrix, m1) if r2.matrix and m1 else [[Poly() for _ in range(r1.source.rank)] for _ in range(r2.target.rank)]
    return Comorphism(r1.source, r2.target, base, mat)


def _transpose(m: PolyMatrix, rows: int, cols: int) -> list[list[Poly]]:
    return [[m[i][j] for i in range(rows)] for j in range(cols)]


def dualize(r: Comorphism | VBMorphism) -> VBMorphism | Comorphism:
    """Dual object: a comorphism becomes a bundle map of duals and back."""
    if isinstance(r, Comorphism):
        mt = _transpose(r.matrix, r.target.rank, r.source.rank)
        return VBMorphism(r.target.dual(), r.source.dual(), r.base_map, mt)
    mt = _transpose(r.matrix, r.target.rank, r.source.rank)
    return Comorphism(r.target.dual(), r.source.dual(), r.base_map, mt)


def invert(r: Comorphism) -> Comorphism:
    """Inverse of a comorphism whose base map is a relabelling of coordinates
    and whose fiber matrix is constant and invertible."""
    if r.source.dim_base != r.target.dim_base:
        raise NotInvertible("base dimensions differ")
    back: dict[Symbol, Symbol] = {}
    for s, p in zip(r.source.base, r.base_map):
        syms = p.symbols()
        if len(syms) != 1 or p != Poly.var(next(iter(syms))):
            raise NotInvertible("base map is not a coordinate relabelling")
        back[next(iter(syms))] = s
    if set(back) != set(r.target.base):
        raise NotInvertible("base map is not bijective")
    if not all(p.is_constant() for row in r.matrix for p in row):
        raise NotInvertible("fiber matrix is not constant")
    inv = linalg.inverse([[p.constant_term() for p in row] for row in r.matrix])
    return Comorphism(r.target, r.source, tuple(Poly.var(back[t]) for t in r.target.base), inv)


def identity(vb: VBundle) -> Comorphism:
    n = vb.rank
    return Comorphism(vb, vb, tuple(Poly.var(s) for s in vb.base), [[Poly.const(int(i == j)) for j in range(n)] for i in range(n)])


# -- tangent lifts ----------------------------------------------------------


def tangent_lift(r: Comorphism, k: int = 1) -> Comorphism:
    """``T^k r`` between ``T^k`` of source and target, by total differentiation."""
    src = higher_tangent_bundle(r.source, k)
    tgt = higher_tangent_bundle(r.target, k)
    base: list[Poly] = []
    derivs = [list(r.base_map)]
    for _ in range(k):
        derivs.append([total_derivative(p, k) for p in derivs[-1]])
    for a in range(k + 1):
        base.extend(derivs[a])
    mats = [r.matrix]
    for _ in range(k):
        mats.append(tuple(tuple(total_derivative(p, k) for p in row) for row in mats[-1]))
    n1, n2 = r.source.rank, r.target.rank
    mat = [[Poly() for _ in range((k + 1) * n1)] for _ in range((k + 1) * n2)]
    for g in range(k + 1):
        for b in range(g + 1):
            c = comb(g, b)
            for i in range(n2):
                for j in range(n1):
                    mat[g * n2 + i][b * n1 + j] = mats[g - b][i][j] * c
    return Comorphism(src, tgt, tuple(base), mat)


def tangent_lift_morphism(phi: VBMorphism, k: int = 1) -> VBMorphism:
    """``T^k phi`` as a bundle map ``T^k E -> T^k E'`` over ``T^k M -> T^k M'``."""
    src = higher_tangent_bundle(phi.source, k)
    tgt = higher_tangent_bundle(phi.target, k)
    derivs = [list(phi.base_map)]
    for _ in range(k):
        derivs.append([total_derivative(p, k) for p in derivs[-1]])
    base = [p for a in range(k + 1) for p in derivs[a]]
    mats = [phi.matrix]
    for _ in range(k):
        mats.append(tuple(tuple(total_derivative(p, k) for p in row) for row in mats[-1]))
    n1, n2 = phi.source.rank, phi.target.rank
    mat = [[Poly() for _ in range((k + 1) * n1)] for _ in range((k + 1) * n2)]
    for g in range(k + 1):
        for b in range(g + 1):
            c = comb(g, b)
            for i in range(n2):
                for j in range(n1):
                    mat[g * n2 + i][b * n1 + j] = mats[g - b][i][j] * c
    return VBMorphism(src, tgt, tuple(base), mat)


def tangent_map(polys: Sequence[Poly], source: Sequence[Symbol], target: Sequence[Symbol]) -> VBMorphism:
    """Tangent map of ``target = polys(source)`` as a bundle map ``TN -> TN'``."""
    jac = [[p.diff(s) for s in source] for p in polys]
    return VBMorphism(tangent_bundle(source), tangent_bundle(target), tuple(polys), jac)


def total_space_map(phi: VBMorphism) -> VBMorphism:
    """The map of total spaces ``E -> E'`` differentiated: ``T phi`` on ``TE``."""
    fib = list(phi.source.fiber)
    images = list(phi.base_map) + [sum((m * Poly.var(s) for m, s in zip(row, fib)), Poly()) for row in phi.matrix]
    return tangent_map(images, list(phi.source.base) + fib, list(phi.target.base) + list(phi.target.fiber))


# -- checks -----------------------------------------------------------------


def zm_morphism_check(phi1: VBMorphism, phi2: VBMorphism, r: Comorphism, r2: Comorphism) -> Verdict:
    """Is ``(phi1, phi2)`` a morphism from ``r: E1 => E2`` to ``r2: E1' => E2'``?

    Checked exactly: base maps commute and the fiber square commutes at every
    point of the base of ``E2``.
    """
    if not (phi1.source.matches(r.source) and phi2.source.matches(r.target)):
        raise BundleMismatch("bundle maps do not start at the bundles of the first comorphism")
    if not (phi1.target.matches(r2.source) and phi2.target.matches(r2.target)):
        raise BundleMismatch("bundle maps do not end at the bundles of the second comorphism")
    # base: phi1_base o r_base == r2_base o phi2_base, as maps from M2
    sub_r = dict(zip(r.source.base, r.base_map))
    sub_p2 = dict(zip(r2.target.base, phi2.base_map))
    for s, a, b in zip(r2.source.base, phi1.base_map, r2.base_map):
        lhs = a.subs(sub_r)
        rhs = b.subs(sub_p2)
        if lhs != rhs:
            return Verdict.failed(("base", str(s), str(lhs - rhs)), "base maps do not commute")
    # fiber: Phi2(y) M(y) == M2(phi2(y)) Phi1(r(y))
    left = linalg.matmul(phi2.matrix, r.matrix) if r.matrix else []
    m2 = [[p.subs(sub_p2) for p in row] for row in r2.matrix]
    p1 = [[p.subs(sub_r) for p in row] for row in phi1.matrix]
    right = linalg.matmul(m2, p1) if m2 and p1 else []
    for i in range(phi2.target.rank):
        for j in range(r.source.rank):
            a = Poly.coerce(left[i][j]) if left else Poly()
            b = Poly.coerce(right[i][j]) if right else Poly()
            if a != b:
                return Verdict.failed(
                    ("fiber", str(phi2.target.fiber[i]), str(r.source.fiber[j]), str(a - b)),
                    "fiber maps do not commute",
                )
    return Verdict.passed()


def weight_check(r: Comorphism | VBMorphism) -> Verdict:
    """Every defining equation is homogeneous for the bundles' bi-weights."""
    from .expr import is_homogeneous

    src, tgt = r.source, r.target
    if src.biweights is None or tgt.biweights is None:
        raise NotDoublyGraded("both bundles need bi-weights")
    if isinstance(r, Comorphism):
        base_pairs = zip(src.base, r.base_map)
        poly_weights = tgt.biweights
    else:
        base_pairs = zip(tgt.base, r.base_map)
        poly_weights = src.biweights
    for s, p in base_pairs:
        bw = tgt.biweight(s) if isinstance(r, VBMorphism) else src.biweight(s)
        if not is_homogeneous(p, bw, poly_weights):
            return Verdict.failed(("base", str(s), str(p)), "base equation not homogeneous")
    for t, row in zip(tgt.fiber, r.matrix):
        wt = tgt.biweight(t)
        for s, p in zip(src.fiber, row):
            ws = src.biweight(s)
            need = tuple(a - b for a, b in zip(wt, ws))
            if not is_homogeneous(p, need, poly_weights):
                return Verdict.failed(("fiber", str(t), str(s), str(p)), "fiber equation not homogeneous")
    return Verdict.passed()


def reduce_order(r: Comorphism, j: int) -> Comorphism:
    """Drop every equation in which a coordinate of graded weight above ``j`` occurs."""
    src, tgt = r.source, r.target
    if src.biweights is None or tgt.biweights is None:
        raise NotDoublyGraded("reduction needs bi-weights on both bundles")

    def keep(vb: VBundle, syms):
        return [s for s in syms if vb.biweight(s)[1] <= j]

    sb, sf = keep(src, src.base), keep(src, src.fiber)
    tb, tf = keep(tgt, tgt.base), keep(tgt, tgt.fiber)
    allowed = set(tb)
    base_map = []
    for s, p in zip(src.base, r.base_map):
        if s in sb:
            if not p.symbols() <= allowed:
                raise NotDoublyGraded(f"equation for {s} involves dropped coordinates")
            base_map.append(p)
    sf_idx = [src.fiber.index(s) for s in sf]
    rows = []
    for t, row in zip(tgt.fiber, r.matrix):
        if t not in tf:
            continue
        for c, p in enumerate(row):
            if c not in sf_idx and not p.is_zero():
                raise NotDoublyGraded(f"row {t} involves dropped coordinate {src.fiber[c]}")
            if not p.symbols() <= allowed:
                raise NotDoublyGraded(f"row {t} involves dropped base coordinates")
        rows.append([row[c] for c in sf_idx])
    bw_s = {s: src.biweight(s) for s in sb + sf}
    bw_t = {s: tgt.biweight(s) for s in tb + tf}
    return Comorphism(
        VBundle(tuple(sb), tuple(sf), bw_s, f"reduced({src.name})"),
        VBundle(tuple(tb), tuple(tf), bw_t, f"reduced({tgt.name})"),
        tuple(base_map),
        rows,
    )


# -- restriction to subbundles ---------------------------------------------


@dataclass(frozen=True)
class SubBundle:
    """Subbundle with constant fiber span over a base locus.

    The base locus is described twice: by ``equations`` (polynomials
    vanishing on it) and by a parametrization ``param`` from parameter
    symbols ``params`` (``None`` means the whole base).
    """

    bundle: VBundle
    fiber_basis: tuple[tuple[Fraction, ...], ...]
    equations: tuple[Poly, ...] = ()
    params: tuple[Symbol, ...] | None = None
    param: Mapping[Symbol, Poly] | None = field(default=None, compare=False, hash=False)

    def __post_init__(self) -> None:
        for v in self.fiber_basis:
            if len(v) != self.bundle.rank:
                raise DimensionMismatch("fiber basis vector has the wrong length")
        if self.fiber_basis and linalg.rank(self.fiber_basis) != len(self.fiber_basis):
            raise DimensionMismatch("fiber basis vectors must be independent")

    @classmethod
    def full(cls, bundle: VBundle) -> "SubBundle":
        basis = tuple(tuple(Fraction(int(i == j)) for j in range(bundle.rank)) for i in range(bundle.rank))
        return cls(bundle, basis)

    @classmethod
    def linear(
        cls,
        bundle: VBundle,
        fiber_basis: Sequence[Sequence],
        base_basis: Sequence[Sequence] | None = None,
        param_prefix: str = "t",
    ) -> "SubBundle":
        """Constant fiber span over a linear subspace of the base (or the whole base)."""
        fb = tuple(tuple(Fraction(x) for x in v) for v in fiber_basis)
        if base_basis is None:
            return cls(bundle, fb)
        bb = [[Fraction(x) for x in v] for v in base_basis]
        n = bundle.dim_base
        ann = linalg.annihilator(bb, n) if bb else [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        eqs = tuple(sum((Poly.var(s) * c for s, c in zip(bundle.base, row)), Poly()) for row in ann)
        params = tuple(Symbol(f"{param_prefix}{i + 1}") for i in range(len(bb)))
        param = {
            s: sum((Poly.var(t) * v[a] for t, v in zip(params, bb)), Poly()) for a, s in enumerate(bundle.base)
        }
        return cls(bundle, fb, eqs, params, param)


def fine_restriction(r: Comorphism, sub_source: SubBundle, sub_target: SubBundle) -> tuple[Comorphism | None, Verdict]:
    """Restrict ``r`` to subbundles, if it restricts finely.

    Returns the restricted comorphism (or ``None``) and a verdict whose
    witness names the first violated condition.
    """
    if not sub_source.bundle.matches(r.source) or not sub_target.bundle.matches(r.target):
        raise BundleMismatch("subbundles must live in the comorphism's bundles")
    param = dict(sub_target.param or {})
    # (a) base locus of the target is mapped into the base locus of the source
    sub_r = dict(zip(r.source.base, r.base_map))
    for g in sub_source.equations:
        val = g.subs(sub_r).subs(param)
        if not val.is_zero():
            return None, Verdict.failed(("base", str(g), str(val)), "base locus is not mapped into the source locus")
    # (b) fibers of the source subbundle land in the target subbundle
    mat = [[p.subs(param) for p in row] for row in r.matrix]
    b1 = [[Poly.const(x) for x in v] for v in sub_source.fiber_basis]
    b1_cols = [[b1[c][i] for c in range(len(b1))] for i in range(r.source.rank)]
    image = linalg.matmul(mat, b1_cols) if b1 else []
    ann = linalg.annihilator(sub_target.fiber_basis, r.target.rank)
    for row in ann:
        for c in range(len(b1)):
            val = sum((Poly.coerce(image[i][c]) * row[i] for i in range(r.target.rank)), Poly())
            if not val.is_zero():
                return None, Verdict.failed(
                    ("fiber", [str(x) for x in sub_source.fiber_basis[c]], str(val)),
                    "image of a source fiber vector leaves the target subbundle",
                )
    # build the restricted comorphism in span coordinates
    d1, d2 = len(sub_source.fiber_basis), len(sub_target.fiber_basis)
    left = linalg.left_inverse(sub_target.fiber_basis, r.target.rank)
    restricted = linalg.matmul([[Poly.const(x) for x in row] for row in left], image) if left and image else []
    src_f = tuple(Symbol(f"c{i + 1}", 0, 1) for i in range(d1))
    tgt_f = tuple(Symbol(f"e{i + 1}", 0, 1) for i in range(d2))
    tgt_base = sub_target.params if sub_target.params is not None else r.target.base
    src_bundle = VBundle(r.source.base, src_f, None, f"sub({r.source.name})")
    tgt_bundle = VBundle(tuple(tgt_base), tgt_f, None, f"sub({r.target.name})")
    base_map = tuple(p.subs(param) for p in r.base_map)
    rows = [[Poly.coerce(x) for x in row] for row in restricted] if restricted else [[Poly() for _ in range(d1)] for _ in range(d2)]
    return Comorphism(src_bundle, tgt_bundle, base_map, rows), Verdict.passed()
