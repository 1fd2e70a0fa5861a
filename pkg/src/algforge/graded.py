"""Graded charts, higher tangent lifts and section lifts.

Conventions used throughout the package:

* the ``j``-th time derivative of a coordinate ``s`` is ``s.jet(j)``;
* on a tangent bundle of a chart, the velocity of ``s`` is the symbol
  ``velocity(s)``, whose name is ``"d" + s.name``;
* a *bi-weight* is a pair ``(linear, graded)``: the first entry counts the
  vector-bundle (linear) degree, the second the graded degree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Mapping, Sequence

from .errors import DimensionMismatch, JetOverflow, NotDoublyGraded
from .expr import Poly, Symbol, total_derivative

BiWeight = tuple[int, int]


def velocity(s: Symbol) -> Symbol:
    """Fiber coordinate of a tangent bundle paired with the base coordinate ``s``."""
    return Symbol("d" + s.name, s.jet_order, s.weight + 1)


def jets(syms: Sequence[Symbol], k: int) -> list[Symbol]:
    """All jets up to order ``k``, order-major: ``x^(0)..., x^(1)..., ...``."""
    return [s.jet(a) for a in range(k + 1) for s in syms]


@dataclass(frozen=True)
class GradedChart:
    """Coordinates on a graded bundle: weight-0 base and positively weighted fiber."""

    base: tuple[Symbol, ...]
    fiber: tuple[Symbol, ...]

    def __post_init__(self) -> None:
        for s in self.base:
            if s.weight != 0:
                raise ValueError(f"base coordinate {s} must have weight 0")
        for s in self.fiber:
            if s.weight <= 0:
                raise ValueError(f"fiber coordinate {s} must have positive weight")

    @property
    def order(self) -> int:
        return max((s.weight for s in self.fiber), default=0)

    def by_weight(self, w: int) -> tuple[Symbol, ...]:
        return tuple(s for s in self.fiber if s.weight == w)

    @property
    def symbols(self) -> tuple[Symbol, ...]:
        return self.base + self.fiber


@dataclass(frozen=True)
class JetChart:
    """A list of coordinates with an order bound and optional bi-weights."""

    symbols: tuple[Symbol, ...]
    order: int
    biweights: Mapping[Symbol, BiWeight] | None = field(default=None, compare=False)

    def biweight(self, s: Symbol) -> BiWeight:
        if self.biweights is None:
            raise NotDoublyGraded("chart carries no bi-weights")
        return self.biweights[s]


def adapted_chart(m: int, k: int, name: str = "x") -> JetChart:
    """Coordinates ``x^{a,(alpha)}`` on ``T^k M`` for an ``m``-dimensional base."""
    base = [Symbol(f"{name}{a + 1}") for a in range(m)]
    return JetChart(tuple(jets(base, k)), k)


def lift_function(f: Poly, alpha: int, k: int) -> Poly:
    """The ``alpha``-lift ``D^alpha f`` of a function on the base to ``T^k M``."""
    if alpha > k:
        raise JetOverflow(f"lift order {alpha} exceeds {k}")
    out = f
    for _ in range(alpha):
        out = total_derivative(out, k)
    return out


def lift_transition(phi: Sequence[Poly], k: int) -> list[list[Poly]]:
    """Transition of adapted charts on ``T^k M`` induced by ``x' = phi(x)``.

    Entry ``[alpha][a]`` expresses ``x'^{a,(alpha)}`` in the old jets.
    """
    return [[lift_function(p, alpha, k) for p in phi] for alpha in range(k + 1)]


def compose_maps(outer: Sequence[Poly], inner: Sequence[Poly], inner_vars: Sequence[Symbol]) -> list[Poly]:
    """``outer(inner(x))`` where ``outer`` is written in ``inner_vars``."""
    sub = dict(zip(inner_vars, inner))
    return [p.subs(sub) for p in outer]


def compose_lifted(outer: list[list[Poly]], inner: list[list[Poly]], variables: Sequence[Symbol]) -> list[list[Poly]]:
    """Compose two lifted transitions; ``outer`` is written in the jets of ``variables``."""
    sub = {}
    for alpha, row in enumerate(inner):
        for s, p in zip(variables, row):
            sub[s.jet(alpha)] = p
    return [[p.subs(sub) for p in row] for row in outer]


def top_core(chart: GradedChart) -> GradedChart:
    """Keep the base and the top-weight fiber coordinates, regraded to weight 1."""
    k = chart.order
    top = tuple(Symbol(s.name, s.jet_order, 1) for s in chart.by_weight(k))
    return GradedChart(chart.base, top)


def reduce_chart(chart: GradedChart, j: int) -> GradedChart:
    """Coordinates of the order-``j`` reduction (drop every weight above ``j``)."""
    return GradedChart(chart.base, tuple(s for s in chart.fiber if s.weight <= j))


def higher_tangent_chart(base: Sequence[Symbol], fiber: Sequence[Symbol], k: int) -> JetChart:
    """``T^k E`` for a vector bundle ``E -> M``; fiber jets are linear."""
    bw: dict[Symbol, BiWeight] = {}
    for a in range(k + 1):
        for s in base:
            bw[s.jet(a)] = (0, a)
        for s in fiber:
            bw[s.jet(a)] = (1, a)
    return JetChart(tuple(jets(base, k)) + tuple(jets(fiber, k)), k, bw)


def tangent_chart(chart: GradedChart) -> JetChart:
    """``T E^k`` for a graded bundle; velocities are linear."""
    bw: dict[Symbol, BiWeight] = {}
    for s in chart.symbols:
        bw[s] = (0, s.weight)
    vel = [velocity(s) for s in chart.symbols]
    for s, v in zip(chart.symbols, vel):
        bw[v] = (1, s.weight)
    return JetChart(chart.symbols + tuple(vel), chart.order, bw)


def core_decomposition(chart: JetChart) -> dict[int, tuple[Symbol, ...]]:
    """Core coordinates (bi-weight ``(1, j)`` with ``j >= 1``) grouped by ``j``."""
    if chart.biweights is None:
        raise NotDoublyGraded("core decomposition needs bi-weights")
    out: dict[int, list[Symbol]] = {}
    for s in chart.symbols:
        lin, gr = chart.biweight(s)
        if lin == 1 and gr >= 1:
            out.setdefault(gr, []).append(s)
    return {j: tuple(v) for j, v in sorted(out.items())}


# -- section lifts ---------------------------------------------------------


@dataclass(frozen=True)
class SectionLift:
    """A section of ``T^k E -> T^k M``.

    ``components[beta][i]`` is the coefficient of ``y^{i,(beta)}`` written
    in the jets of the base coordinates.
    """

    components: tuple[tuple[Poly, ...], ...]
    k: int

    def flat(self) -> list[Poly]:
        return [p for row in self.components for p in row]

    def scaled(self, c) -> "SectionLift":
        return SectionLift(tuple(tuple(p * Fraction(c) for p in row) for row in self.components), self.k)

    def is_zero(self) -> bool:
        return all(p.is_zero() for row in self.components for p in row)


def tangent_lift_section(s: Sequence[Poly], k: int) -> SectionLift:
    """The section ``T^k s`` of ``T^k E``."""
    rows = [tuple(Poly.coerce(p) for p in s)]
    for _ in range(k):
        rows.append(tuple(total_derivative(p, k) for p in rows[-1]))
    return SectionLift(tuple(rows), k)


def epsilon_action(v: SectionLift, times: int = 1) -> SectionLift:
    """The homotopy action ``(v0, ..., vk) -> (0, v0, 2 v1, ..., k v_{k-1})``."""
    rows = list(v.components)
    n = len(rows[0]) if rows else 0
    for _ in range(times):
        rows = [tuple(Poly() for _ in range(n))] + [
            tuple(p * b for p in rows[b - 1]) for b in range(1, v.k + 1)
        ]
    return SectionLift(tuple(rows), v.k)


def epsilon_lift(s: Sequence[Poly], k: int, alpha: int) -> SectionLift:
    """The lift ``s^{(k-alpha)} = (k-alpha)!/k! * eps^alpha T^k s``."""
    if not 0 <= alpha <= k:
        raise DimensionMismatch(f"alpha={alpha} outside 0..{k}")
    lifted = epsilon_action(tangent_lift_section(s, k), alpha)
    return lifted.scaled(Fraction(factorial(k - alpha), factorial(k)))
