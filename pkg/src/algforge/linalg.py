"""Exact rational linear algebra on lists of Fractions, backed by sympy."""

from __future__ import annotations

from fractions import Fraction
from itertools import permutations
from typing import Sequence

import sympy

from .errors import NotInvertible
from .expr import Poly

Matrix = list[list[Fraction]]


def _to_sympy(rows: Sequence[Sequence[Fraction]], ncols: int | None = None) -> sympy.Matrix:
    if not rows:
        return sympy.zeros(0, ncols or 0)
    return sympy.Matrix([[sympy.Rational(Fraction(v).numerator, Fraction(v).denominator) for v in r] for r in rows])


def _from_sympy(m: sympy.Matrix) -> Matrix:
    return [[Fraction(int(m[i, j].p), int(m[i, j].q)) for j in range(m.cols)] for i in range(m.rows)]


def columns(vectors: Sequence[Sequence[Fraction]], dim: int) -> sympy.Matrix:
    """Matrix whose columns are the given vectors."""
    if not vectors:
        return sympy.zeros(dim, 0)
    return _to_sympy(vectors).T


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    return _to_sympy(rows).rank() if rows else 0


def in_span(v: Sequence[Fraction], basis: Sequence[Sequence[Fraction]]) -> bool:
    if not any(Fraction(x) for x in v):
        return True
    if not basis:
        return False
    return rank(list(basis) + [list(v)]) == rank(basis)


def annihilator(basis: Sequence[Sequence[Fraction]], dim: int) -> Matrix:
    """Rows spanning the linear forms vanishing on ``span(basis)``."""
    if not basis:
        return [[Fraction(int(i == j)) for j in range(dim)] for i in range(dim)]
    ns = _to_sympy(basis).nullspace()
    return [[Fraction(int(x.p), int(x.q)) for x in vec] for vec in ns]


def left_inverse(basis: Sequence[Sequence[Fraction]], dim: int) -> Matrix:
    """``L`` with ``L B = I`` for ``B`` the matrix with the given columns."""
    if not basis:
        return []
    b = columns(basis, dim)
    gram = b.T * b
    if gram.det() == 0:
        raise NotInvertible("basis vectors are dependent")
    return _from_sympy(gram.inv() * b.T)


def inverse(rows: Sequence[Sequence[Fraction]]) -> Matrix:
    m = _to_sympy(rows)
    if m.rows == 0:
        return []
    if m.det() == 0:
        raise NotInvertible("matrix is singular")
    return _from_sympy(m.inv())


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> list[list]:
    """Product of matrices whose entries are Fractions or Polys."""
    if not a:
        return []
    inner = len(b)
    ncols = len(b[0]) if b else 0
    out = []
    for row in a:
        if len(row) != inner:
            raise ValueError("shape mismatch in matmul")
        new = []
        for j in range(ncols):
            acc = Poly() if any(isinstance(row[t], Poly) or isinstance(b[t][j], Poly) for t in range(inner)) else Fraction(0)
            for t in range(inner):
                x, y = row[t], b[t][j]
                if isinstance(x, Poly) or isinstance(y, Poly):
                    if x and y:
                        acc = Poly.coerce(acc) + Poly.coerce(x) * y
                elif x and y:
                    acc = acc + x * y
            new.append(acc)
        out.append(new)
    return out


def poly_det(m: Sequence[Sequence[Poly]]) -> Poly:
    """Determinant by permutation expansion (intended for small sizes)."""
    n = len(m)
    total = Poly()
    for perm in permutations(range(n)):
        sign = 1
        for i in range(n):
            for j in range(i + 1, n):
                if perm[i] > perm[j]:
                    sign = -sign
        term = Poly.const(sign)
        for i in range(n):
            term = term * m[i][perm[i]]
            if term.is_zero():
                break
        total = total + term
    return total
