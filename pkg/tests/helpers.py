"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import random
from fractions import Fraction

from hypothesis import strategies as st

from algforge.algebroid import Algebroid1, base_symbols, fiber_symbols
from algforge.expr import Poly, Symbol
from algforge.liegroup import LieAlgebraModel

X, Y, Z = Symbol("x"), Symbol("y"), Symbol("z")
T = Symbol("t")


def rand_frac(rng: random.Random, lo: int = -4, hi: int = 4) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.randint(1, 3))


def rand_poly(rng: random.Random, syms, degree: int = 2, terms: int = 3) -> Poly:
    p = Poly.const(rand_frac(rng))
    for _ in range(terms):
        if not syms:
            break
        mono = Poly.const(rand_frac(rng))
        for _ in range(rng.randint(1, degree)):
            mono = mono * Poly.var(rng.choice(list(syms)))
        p = p + mono
    return p


def rand_algebroid(rng: random.Random, m: int, n: int, degree: int = 2) -> Algebroid1:
    x = base_symbols(m)
    y = fiber_symbols(n)
    QL = [[rand_poly(rng, x, degree) for _ in range(n)] for _ in range(m)]
    QR = [[rand_poly(rng, x, degree) for _ in range(n)] for _ in range(m)]
    Q = [[[rand_poly(rng, x, degree) for _ in range(n)] for _ in range(n)] for _ in range(n)]
    return Algebroid1(x, y, QL, QR, Q)


def rand_curve(rng: random.Random, degree: int = 3) -> Poly:
    return sum((Poly.const(rand_frac(rng)) * Poly.var(T) ** d for d in range(degree + 1)), Poly())


def perturbed_so3() -> LieAlgebraModel:
    """so(3) with [e1, e2] = e3 + e1: still antisymmetric, Jacobi fails on (e1, e2, e3).

    Rescaling a single constant (say [e1, e2] = 2 e3) would not do: every
    term of that Jacobiator contains some [e_k, e_k] and vanishes.
    """
    return LieAlgebraModel.from_entries(3, [(3, 1, 2, 1), (1, 1, 2, 1), (1, 2, 3, 1), (2, 3, 1, 1)], "so3'")


def brute_jacobiator(consts, i: int, j: int, k: int) -> list[Fraction]:
    """``[e_i,[e_j,e_k]] + cyclic`` straight from structure constants."""
    n = len(consts)

    def br(u, v):
        return [sum((consts[c][a][b] * u[a] * v[b] for a in range(n) for b in range(n)), Fraction(0)) for c in range(n)]

    e = lambda t: [Fraction(int(s == t)) for s in range(n)]  # noqa: E731
    a, b, c = e(i), e(j), e(k)
    parts = [br(a, br(b, c)), br(b, br(c, a)), br(c, br(a, b))]
    return [sum(p[r] for p in parts) for r in range(n)]


fractions = st.fractions(min_value=-5, max_value=5, max_denominator=4)


@st.composite
def polys(draw, syms=(X, Y, Z), max_terms: int = 4, max_exp: int = 2):
    p = Poly.const(draw(fractions))
    for _ in range(draw(st.integers(0, max_terms))):
        mono = Poly.const(draw(fractions))
        for s in syms:
            mono = mono * Poly.var(s) ** draw(st.integers(0, max_exp))
        p = p + mono
    return p
