"""Higher algebroids of Lie algebras: ``T^{k-1} g``, its subalgebroids and quotients.

Vectors of ``T^{k-1} g`` are tuples ``(Y_0, ..., Y_{k-1})`` of coefficients of
a truncated polynomial ``sum Y_j t^j``.  The comorphism from ``T^k g``
(tuples ``(X_0, ..., X_k)``) to the tangent bundle of ``T^{k-1} g`` is

    dY_l = (l + 1) X_{l+1} - sum_{i + j = l} [X_i, Y_j].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

from . import linalg
from .comorphism import Comorphism, SubBundle, VBundle, fine_restriction
from .errors import DimensionMismatch
from .expr import Poly, Symbol
from .verdict import Verdict

Vector = list[Fraction]


def _vec(v: Sequence) -> Vector:
    return [Fraction(x) for x in v]


def _add(a: Vector, b: Vector) -> Vector:
    return [x + y for x, y in zip(a, b)]


def _scale(c, a: Vector) -> Vector:
    return [Fraction(c) * x for x in a]


@dataclass(frozen=True)
class LieAlgebraModel:
    """Structure constants ``consts[k][i][j]``: component ``k`` of ``[e_i, e_j]``."""

    consts: tuple[tuple[tuple[Fraction, ...], ...], ...]
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        n = len(self.consts)
        c = tuple(tuple(tuple(Fraction(x) for x in row) for row in blk) for blk in self.consts)
        if any(len(blk) != n or any(len(row) != n for row in blk) for blk in c):
            raise DimensionMismatch("structure constants must be n x n x n")
        object.__setattr__(self, "consts", c)

    @property
    def dim(self) -> int:
        return len(self.consts)

    @classmethod
    def from_entries(cls, dim: int, entries: Sequence[Sequence], name: str = "") -> "LieAlgebraModel":
        """Build from ``[k, i, j, c]`` rows (1-based), completing antisymmetry."""
        c = [[[Fraction(0)] * dim for _ in range(dim)] for _ in range(dim)]
        for k, i, j, val in entries:
            k, i, j = int(k) - 1, int(i) - 1, int(j) - 1
            if not (0 <= k < dim and 0 <= i < dim and 0 <= j < dim):
                raise DimensionMismatch(f"index out of range in entry {(k + 1, i + 1, j + 1)}")
            v = Fraction(val)
            if i == j and v:
                raise DimensionMismatch("[e_i, e_i] must vanish")
            c[k][i][j] = v
            c[k][j][i] = -v
        return cls(tuple(tuple(tuple(r) for r in blk) for blk in c), name)

    def bracket(self, u: Sequence, v: Sequence) -> Vector:
        n = self.dim
        out = [Fraction(0)] * n
        for i in range(n):
            if not u[i]:
                continue
            for j in range(n):
                if not v[j]:
                    continue
                f = Fraction(u[i]) * Fraction(v[j])
                for k in range(n):
                    if self.consts[k][i][j]:
                        out[k] += self.consts[k][i][j] * f
        return out

    def basis(self, i: int) -> Vector:
        return [Fraction(int(j == i)) for j in range(self.dim)]

    def is_lie(self) -> Verdict:
        n = self.dim
        for i, j in product(range(n), repeat=2):
            a, b = self.bracket(self.basis(i), self.basis(j)), self.bracket(self.basis(j), self.basis(i))
            if _add(a, b) != [0] * n:
                return Verdict.failed((i, j), "bracket is not antisymmetric")
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(j + 1, n):
                    ei, ej, ek = self.basis(i), self.basis(j), self.basis(k)
                    jac = _add(
                        _add(self.bracket(ei, self.bracket(ej, ek)), self.bracket(ej, self.bracket(ek, ei))),
                        self.bracket(ek, self.bracket(ei, ej)),
                    )
                    if any(jac):
                        return Verdict.failed(((i, j, k), [str(x) for x in jac]), "Jacobi identity fails")
        return Verdict.passed()


def so3() -> LieAlgebraModel:
    return LieAlgebraModel.from_entries(3, [[3, 1, 2, 1], [1, 2, 3, 1], [2, 3, 1, 1]], "so(3)")


def aff1() -> LieAlgebraModel:
    """Affine algebra of the line: ``[e2, e1] = e1``."""
    return LieAlgebraModel.from_entries(2, [[1, 2, 1, 1]], "aff(1)")


def abelian(n: int) -> LieAlgebraModel:
    return LieAlgebraModel(tuple(tuple(tuple(Fraction(0) for _ in range(n)) for _ in range(n)) for _ in range(n)), f"R^{n}")


# -- the comorphism of T^{k-1} g ---------------------------------------------------------


def kappa_g(g: LieAlgebraModel, k: int, ybar: Sequence[Sequence], X: Sequence[Sequence]) -> list[Vector]:
    """Evaluate ``(dY_0, ..., dY_{k-1})`` at base point ``ybar`` on the vector ``X``."""
    if len(ybar) != k or len(X) != k + 1:
        raise DimensionMismatch("need k base components and k+1 source components")
    ybar = [_vec(v) for v in ybar]
    X = [_vec(v) for v in X]
    out = []
    for l in range(k):
        acc = _scale(l + 1, X[l + 1])
        for i in range(l + 1):
            acc = _add(acc, _scale(-1, g.bracket(X[i], ybar[l - i])))
        out.append(acc)
    return out


def kappa_g_bundles(g: LieAlgebraModel, k: int) -> tuple[VBundle, VBundle]:
    n = g.dim
    xs = tuple(Symbol(f"X{l}_{i + 1}", 0, 1 + l) for l in range(k + 1) for i in range(n))
    ys = tuple(Symbol(f"Y{l}_{i + 1}", 0, l + 1) for l in range(k) for i in range(n))
    dys = tuple(Symbol(f"dY{l}_{i + 1}", 0, l + 2) for l in range(k) for i in range(n))
    bw_s = {s: (1, l) for l in range(k + 1) for s in xs[l * n:(l + 1) * n]}
    bw_t = {s: (0, l + 1) for l in range(k) for s in ys[l * n:(l + 1) * n]}
    bw_t.update({s: (1, l + 1) for l in range(k) for s in dys[l * n:(l + 1) * n]})
    return VBundle((), xs, bw_s, f"T^{k}({g.name})"), VBundle(ys, dys, bw_t, f"T(T^{k - 1}{g.name})")


def kappa_g_comorphism(g: LieAlgebraModel, k: int) -> Comorphism:
    """The comorphism ``T^k g => T(T^{k-1} g)`` as polynomial data."""
    n = g.dim
    src, tgt = kappa_g_bundles(g, k)
    ys = tgt.base
    mat = [[Poly() for _ in range((k + 1) * n)] for _ in range(k * n)]
    for l in range(k):
        for c in range(n):
            row = mat[l * n + c]
            row[(l + 1) * n + c] = Poly.const(l + 1)
            for i in range(l + 1):
                j = l - i
                for a in range(n):
                    entry = Poly()
                    for b in range(n):
                        if g.consts[c][a][b]:
                            entry = entry - Poly.var(ys[j * n + b]) * g.consts[c][a][b]
                    row[i * n + a] = row[i * n + a] + entry
    return Comorphism(src, tgt, (), mat)


# -- subalgebroids ------------------------------------------------------------------------


@dataclass(frozen=True)
class GradedSubspace:
    """Subspaces ``V_0, ..., V_{k-1}`` of ``g``, each given by a basis."""

    bases: tuple[tuple[tuple[Fraction, ...], ...], ...]

    def __post_init__(self) -> None:
        conv = tuple(tuple(tuple(Fraction(x) for x in v) for v in basis) for basis in self.bases)
        for basis in conv:
            if basis and linalg.rank(basis) != len(basis):
                raise DimensionMismatch("basis columns must be independent")
        object.__setattr__(self, "bases", conv)

    @property
    def k(self) -> int:
        return len(self.bases)


def subalgebroid_test(g: LieAlgebraModel, V: GradedSubspace) -> Verdict:
    """Closed-form criterion: ``V_0`` lies in every ``V_j`` and ``[V_0, V_i]`` in ``V_j`` for ``j >= i``."""
    k = V.k
    v0 = V.bases[0]
    for j in range(1, k):
        for v in v0:
            if not linalg.in_span(v, V.bases[j]):
                return Verdict.failed(("inclusion", 0, j, [str(x) for x in v]), f"V_0 is not contained in V_{j}")
    for i in range(k):
        for a in v0:
            for b in V.bases[i]:
                w = g.bracket(a, b)
                for j in range(i, k):
                    if not linalg.in_span(w, V.bases[j]):
                        return Verdict.failed(
                            ("bracket", i, j, [str(x) for x in a], [str(x) for x in b]),
                            f"[V_0, V_{i}] is not contained in V_{j}",
                        )
    return Verdict.passed()


def subalgebroid_restriction(g: LieAlgebraModel, V: GradedSubspace) -> tuple[Comorphism | None, Verdict]:
    """Restrict the comorphism of ``T^{k-1} g`` to ``T^k V_0`` and ``T F`` with ``F = (V_j)``."""
    k, n = V.k, g.dim
    r = kappa_g_comorphism(g, k)

    def block(vecs, slot, blocks):
        out = []
        for v in vecs:
            e = [Fraction(0)] * (blocks * n)
            e[slot * n:(slot + 1) * n] = v
            out.append(e)
        return out

    src_basis = [e for l in range(k + 1) for e in block(V.bases[0], l, k + 1)]
    tgt_basis = [e for j in range(k) for e in block(V.bases[j], j, k)]
    sub_src = SubBundle.linear(r.source, src_basis)
    sub_tgt = SubBundle.linear(r.target, tgt_basis, tgt_basis)
    return fine_restriction(r, sub_src, sub_tgt)


# -- quotients --------------------------------------------------------------------------------


@dataclass(frozen=True)
class GradedLieAlgebraModel:
    """Graded Lie algebra ``g_0 + ... + g_{k-1}`` with a degree-wise map from ``T^{k-1} g_0``.

    ``consts`` is a dict ``(c, a, b) -> value`` over global basis indices;
    ``alpha[j]`` is the ``dims[j] x dim g_0`` matrix of the degree-``j``
    component of the map (``alpha[0]`` is the identity).
    """

    dims: tuple[int, ...]
    consts: dict = field(hash=False)
    alpha: tuple[tuple[tuple[Fraction, ...], ...], ...] = field(hash=False)

    @property
    def k(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    def offset(self, deg: int) -> int:
        return sum(self.dims[:deg])

    def degree_of(self, idx: int) -> int:
        acc = 0
        for d, size in enumerate(self.dims):
            if idx < acc + size:
                return d
            acc += size
        raise IndexError(idx)

    def bracket(self, u: Sequence, v: Sequence) -> Vector:
        out = [Fraction(0)] * self.total_dim
        for (c, a, b), val in self.consts.items():
            if u[a] and v[b]:
                out[c] += val * Fraction(u[a]) * Fraction(v[b])
        return out

    def alpha_apply(self, Xbar: Sequence[Sequence]) -> Vector:
        """Image of ``(X_0, ..., X_{k-1})`` in ``T^{k-1} g_0`` under the degree-wise map."""
        out: Vector = []
        for j in range(self.k):
            mat = self.alpha[j]
            out.extend(sum((mat[r][c] * Fraction(Xbar[j][c]) for c in range(len(Xbar[j]))), Fraction(0)) for r in range(self.dims[j]))
        return out


def quotient_model(g: LieAlgebraModel, ideals: Sequence[Sequence[Sequence]]) -> GradedLieAlgebraModel:
    """Degree-``j`` piece ``g / J_j`` for given ideals ``J_j`` (``J_0`` must be zero)."""
    k = len(ideals)
    n = g.dim
    if ideals and any(any(Fraction(x) for x in v) for v in ideals[0]):
        raise DimensionMismatch("the degree-0 ideal must be trivial")
    alphas = [linalg.annihilator([_vec(v) for v in J], n) if J else [[Fraction(int(r == c)) for c in range(n)] for r in range(n)] for J in ideals]
    # a right inverse R of alpha_j (alpha R = I) is the transpose of a left inverse of alpha_j^T
    lefts = [linalg.left_inverse([list(row) for row in a], n) if a else [] for a in alphas]
    sections = [[list(col) for col in zip(*L)] if L else [[] for _ in range(n)] for L in lefts]
    dims = tuple(len(a) for a in alphas)
    offs = [sum(dims[:j]) for j in range(k)]
    consts: dict = {}
    for i in range(k):
        for j in range(k):
            if i + j >= k:
                continue
            for a in range(dims[i]):
                pre_a = [sections[i][r][a] for r in range(n)]
                for b in range(dims[j]):
                    pre_b = [sections[j][r][b] for r in range(n)]
                    img = g.bracket(pre_a, pre_b)
                    proj = [sum((alphas[i + j][r][c] * img[c] for c in range(n)), Fraction(0)) for r in range(dims[i + j])]
                    for c, val in enumerate(proj):
                        if val:
                            consts[(offs[i + j] + c, offs[i] + a, offs[j] + b)] = val
    alpha = tuple(tuple(tuple(row) for row in a) for a in alphas)
    return GradedLieAlgebraModel(dims, consts, alpha)


def truncated(g: LieAlgebraModel, k: int) -> GradedLieAlgebraModel:
    """``T^{k-1} g`` itself, with the identity map."""
    return quotient_model(g, [[] for _ in range(k)])


def jacobi_graded_check(gla: GradedLieAlgebraModel, g: LieAlgebraModel | None = None) -> Verdict:
    """Antisymmetry, Jacobi, degree bookkeeping and (given ``g``) the morphism property of ``alpha``."""
    D = gla.total_dim
    basis = lambda i: [Fraction(int(j == i)) for j in range(D)]  # noqa: E731
    for (c, a, b) in gla.consts:
        if gla.degree_of(c) != gla.degree_of(a) + gla.degree_of(b):
            return Verdict.failed(("degree", a, b, c), "bracket does not respect degrees")
    for a in range(D):
        for b in range(D):
            if _add(gla.bracket(basis(a), basis(b)), gla.bracket(basis(b), basis(a))) != [0] * D:
                return Verdict.failed(("antisymmetry", a, b), "bracket is not antisymmetric")
    for a in range(D):
        for b in range(a + 1, D):
            for c in range(b + 1, D):
                ea, eb, ec = basis(a), basis(b), basis(c)
                jac = _add(
                    _add(gla.bracket(ea, gla.bracket(eb, ec)), gla.bracket(eb, gla.bracket(ec, ea))),
                    gla.bracket(ec, gla.bracket(ea, eb)),
                )
                if any(jac):
                    return Verdict.failed(((a, b, c), [str(x) for x in jac]), "Jacobi identity fails")
    if g is not None:
        n, k = g.dim, gla.k
        for i in range(k):
            for j in range(k):
                for a in range(n):
                    for b in range(n):
                        u = [[Fraction(0)] * n for _ in range(k)]
                        v = [[Fraction(0)] * n for _ in range(k)]
                        u[i] = g.basis(a)
                        v[j] = g.basis(b)
                        w = [[Fraction(0)] * n for _ in range(k)]
                        if i + j < k:
                            w[i + j] = g.bracket(g.basis(a), g.basis(b))
                        if gla.alpha_apply(w) != gla.bracket(gla.alpha_apply(u), gla.alpha_apply(v)):
                            return Verdict.failed(("alpha", i, j, a, b), "degree-wise map is not a bracket morphism")
    return Verdict.passed()


def quotient_kappa(gla: GradedLieAlgebraModel, y: Sequence, X: Sequence[Sequence]) -> Vector:
    """Comorphism of the quotient at ``y`` on ``X = (X_0, ..., X_k)``:
    ``alpha(X_1, 2 X_2, ..., k X_k) + [y, alpha(X_0, ..., X_{k-1})]``."""
    k = gla.k
    if len(X) != k + 1 or len(y) != gla.total_dim:
        raise DimensionMismatch("need a point of the quotient and k+1 components")
    shifted = [_scale(j + 1, X[j + 1]) for j in range(k)]
    return _add(gla.alpha_apply(shifted), gla.bracket(y, gla.alpha_apply(X[:k])))


def quotient_kappa_via_preimage(g: LieAlgebraModel, gla: GradedLieAlgebraModel, ytilde: Sequence[Sequence], X: Sequence[Sequence]) -> Vector:
    """Push the comorphism of ``T^{k-1} g`` at a preimage ``ytilde`` through ``alpha``."""
    return gla.alpha_apply(kappa_g(g, gla.k, ytilde, X))
