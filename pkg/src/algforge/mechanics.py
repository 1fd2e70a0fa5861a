"""Second-order variational calculus on algebroids and a small RK4 integrator.

Lagrangians are polynomials on ``E^2``.  For a prolongation the weight-2
coordinate ``z^i`` is the derivative of ``y^i`` along admissible curves, so
equations of motion are written in jets ``y.d1, y.d2, ...`` of the fiber
coordinates, with ``x.d1`` eliminated through the anchor.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from . import linalg
from .algebroid import Algebroid1, anchor, is_almost_lie
from .errors import DimensionMismatch, NonFiniteState, NotAdmissible, NotAlmostLie, SingularLeadingMatrix
from .expr import Poly, Symbol, total_derivative
from .graded import velocity
from .higher import HA2, alg_lift, kappa2_of, prolong2, z_symbols
from .liegroup import LieAlgebraModel
from .verdict import Verdict

T = Symbol("t")
Curve = Mapping[Symbol, Poly]


@dataclass(frozen=True)
class ELSystem:
    """Equations of motion in jet coordinates.

    ``residuals`` vanish on solutions; ``admissibility`` holds the kinematic
    equations; ``boundary_term`` is the term whose time
    derivative completes the integration by parts, written in the
    generator symbols ``generators`` and their jets.
    """

    unknowns: tuple[Symbol, ...]
    residuals: tuple[Poly, ...]
    admissibility: tuple[Poly, ...] = ()
    boundary_term: Poly = field(default_factory=Poly)
    generators: tuple[Symbol, ...] = ()

    def latex(self) -> str:
        lines = [f"{r.to_latex()} = 0" for r in self.residuals]
        lines += [f"{c.to_latex()} = 0" for c in self.admissibility]
        return "\\begin{aligned}\n" + " \\\\\n".join(lines) + "\n\\end{aligned}"

    def text(self) -> str:
        return "\n".join([f"{r} = 0" for r in self.residuals] + [f"{c} = 0" for c in self.admissibility])


# -- curves ----------------------------------------------------------------------------


def curve_derivative(p: Poly, order: int = 1) -> Poly:
    for _ in range(order):
        p = p.diff(T)
    return p


def on_curve(p: Poly, curve: Curve) -> Poly:
    """Evaluate a polynomial in jet symbols along a curve given by polynomials in ``t``."""
    by_name = {s.name: c for s, c in curve.items()}
    sub = {}
    for s in p.symbols():
        if s == T:
            continue
        if s.name not in by_name:
            raise DimensionMismatch(f"curve has no component for {s.name}")
        sub[s] = curve_derivative(Poly.coerce(by_name[s.name]), s.jet_order)
    return p.subs(sub)


def admissibility_residual(ha: HA2, curve: Curve) -> list[Poly]:
    """Residuals of ``x' = anchor(y)`` and ``x'' = 1/2 anchor_quad(y, y) + anchor_core(z)``."""
    base_map = kappa2_of(ha).base_map
    m = ha.m
    out = []
    for a, s in enumerate(ha.base):
        out.append(curve_derivative(on_curve(Poly.var(s), curve)) - on_curve(base_map[m + a], curve))
    for a, s in enumerate(ha.base):
        out.append(curve_derivative(on_curve(Poly.var(s), curve), 2) - on_curve(base_map[2 * m + a], curve))
    return out


def admissible_variation(ha: HA2, curve: Curve, generator: Curve) -> dict[Symbol, Poly]:
    """Variation of an admissible curve generated by a curve ``xi(t)`` in ``E^1`` over the same base.

    Returns the components (keyed by velocity symbols) of the vector field
    along the curve obtained by applying the comorphism to the second jet of
    ``xi``.
    """
    gen_by_name = {s.name: Poly.coerce(p) for s, p in generator.items()}
    for s in ha.base:
        if s.name in gen_by_name and gen_by_name[s.name] != Poly.coerce(curve[s]):
            raise DimensionMismatch(f"generator lies over a different base curve in {s}")
    xi = [gen_by_name.get(s.name, Poly()) for s in ha.fiber1]
    r = kappa2_of(ha)
    jets = [curve_derivative(p, j) for j in range(3) for p in xi]
    out = {}
    for t_sym, row in zip(r.target.fiber, r.matrix):
        out[t_sym] = sum((on_curve(e, curve) * v for e, v in zip(row, jets)), Poly())
    return out


# -- equations of motion ----------------------------------------------------------------------


def _lagrangian_in_jets(L: Poly, z: Sequence[Symbol], y: Sequence[Symbol]) -> Poly:
    return L.subs({zs: Poly.var(ys.jet(1)) for zs, ys in zip(z, y)})


def el_prolong2(A: Algebroid1, L: Poly, z: Sequence[Symbol] | None = None) -> ELSystem:
    """Euler-Lagrange equations on the prolongation of an almost-Lie algebroid.

    With ``P_k = d/dt dL/dy.d1^k - dL/dy^k`` the residual for the generator
    component ``k`` is::

        d/dt P_k - Qbr[i][j][k] y^j P_i + QL[a][k] dL/dx^a

    and the kinematic constraint is ``x.d1 = QL(y)``.
    """
    if not is_almost_lie(A):
        raise NotAlmostLie("the algebroid is not almost-Lie; its prolongation is undefined")
    m, n = A.m, A.n
    x, y = A.base, A.fiber
    z = tuple(z) if z is not None else z_symbols(n)
    Lj = _lagrangian_in_jets(L, z, y)
    adm = {s.jet(1): e for s, e in zip(x, anchor(A.QL, [Poly.var(v) for v in y]))}

    def d(p: Poly) -> Poly:
        return total_derivative(p).subs(adm)

    Lz = [Lj.diff(s.jet(1)) for s in y]
    P = [d(Lz[k]) - Lj.diff(y[k]) for k in range(n)]
    Lx = [Lj.diff(s) for s in x]
    res = []
    for k in range(n):
        r = d(P[k])
        for i in range(n):
            for j in range(n):
                q = A.Qbr[i][j][k]
                if q:
                    r = r - q * y[j] * P[i]
        for a in range(m):
            r = r + A.QL[a][k] * Lx[a]
        res.append(r)
    xi = tuple(Symbol(f"xi{i + 1}", 0, 1) for i in range(n))
    boundary = Poly()
    for i in range(n):
        eta = Poly.var(xi[i].jet(1))
        for j in range(n):
            for k in range(n):
                q = A.Qbr[i][j][k]
                if q:
                    eta = eta + q * y[j] * xi[k]
        boundary = boundary + Lz[i] * eta - P[i] * xi[i]
    constraints = tuple(Poly.var(s.jet(1)) - e for s, e in adm.items())
    return ELSystem(tuple(x) + tuple(y), tuple(res), constraints, boundary, xi)


def euler_poincare2(g: LieAlgebraModel, l: Poly, name: str = "a") -> ELSystem:
    """Second-order Euler-Poincare equations ``(d/dt - ad*_a)(d/dt dl/da' - dl/da) = 0``.

    ``l`` is written in ``a1, a2, ...`` and their first derivatives.
    """
    n = g.dim
    a = tuple(Symbol(f"{name}{i + 1}", 0, 1) for i in range(n))
    P = [total_derivative(l.diff(s.jet(1))) - l.diff(s) for s in a]
    res = []
    for k in range(n):
        r = total_derivative(P[k])
        # (ad*_a P)_k = P_i c^i_{jk} a^j
        for i in range(n):
            for j in range(n):
                c = g.consts[i][j][k]
                if c:
                    r = r - P[i] * a[j] * c
        res.append(r)
    return ELSystem(a, tuple(res))


def abelian_reconstruction(system: ELSystem, name: str = "g") -> ELSystem:
    """Append ``g' = a`` so that a curve in an abelian group is integrated alongside ``a``."""
    g = tuple(Symbol(f"{name}{i + 1}") for i in range(len(system.unknowns)))
    extra = tuple(Poly.var(gi.jet(1)) - Poly.var(ai) for gi, ai in zip(g, system.unknowns))
    return ELSystem(system.unknowns + g, system.residuals, system.admissibility + extra, system.boundary_term, system.generators)


def standard_el2(L: Poly, coords: Sequence[Symbol]) -> ELSystem:
    """``d^2/dt^2 dL/dx'' - d/dt dL/dx' + dL/dx = 0`` for ``L`` on ``T^2 M``."""
    res = []
    for s in coords:
        r = total_derivative(total_derivative(L.diff(s.jet(2)))) - total_derivative(L.diff(s.jet(1))) + L.diff(s)
        res.append(r)
    return ELSystem(tuple(coords), tuple(res))


@dataclass(frozen=True)
class Prealgebroid:
    """A second-order structure over a point given by its variation table.

    ``variation[c]`` lists ``(generator, order, coefficient)``: the variation
    of coordinate ``c`` is the sum of ``coefficient * d^order/dt^order`` of
    the generator components.
    """

    coords: tuple[Symbol, ...]
    generators: int
    variation: Mapping[Symbol, tuple[tuple[int, int, Fraction], ...]]
    admissibility: tuple[Poly, ...] = ()


def prealgebroid_el(model: Prealgebroid, l: Poly) -> ELSystem:
    """Integrate ``<dl, delta gamma>`` by parts for a constant-coefficient variation table."""
    res = [Poly() for _ in range(model.generators)]
    for c in model.coords:
        lc = l.diff(c)
        for gen, order, coeff in model.variation.get(c, ()):
            term = lc * coeff
            for _ in range(order):
                term = total_derivative(term)
            res[gen] = res[gen] + term * ((-1) ** order)
    return ELSystem(model.coords, tuple(res), model.admissibility)


def reduced_example_model() -> Prealgebroid:
    """Invariant reduction of ``T^2 R^2`` by ``(a, b, c) . (x, y) = (x + a, y + c)`` with ``x' -> x'(1 + b)``.

    Reduced coordinates: ``y1`` (weight 1, from ``y'``), ``x2`` and ``y2``
    (weight 2, from ``x''`` and ``y''``).  Generators ``(a, b)`` vary them by
    ``(b', a'', b'')``; invariance forces ``y1' = y2``.
    """
    y1, x2, y2 = Symbol("y1", 0, 1), Symbol("x2", 0, 2), Symbol("y2", 0, 2)
    var = {y1: ((1, 1, Fraction(1)),), x2: ((0, 2, Fraction(1)),), y2: ((1, 2, Fraction(1)),)}
    return Prealgebroid((y1, x2, y2), 2, var, (Poly.var(y1.jet(1)) - y2,))


def reduced_example_el(l: Poly) -> ELSystem:
    return prealgebroid_el(reduced_example_model(), l)


def unreduced_lagrangian(l: Poly) -> tuple[Poly, tuple[Symbol, Symbol]]:
    """Lift a reduced Lagrangian to ``T^2 R^2`` with coordinates ``(x, y)``."""
    x, y = Symbol("x"), Symbol("y")
    L = l.subs({Symbol("y1"): Poly.var(y.jet(1)), Symbol("x2"): Poly.var(x.jet(2)), Symbol("y2"): Poly.var(y.jet(2))})
    return L, (x, y)


def reduction_substitution(p: Poly) -> Poly:
    """Rewrite jets of the reduced coordinates as jets of ``(x, y)``."""
    x, y = Symbol("x"), Symbol("y")
    sub = {}
    for s in p.symbols():
        if s.name == "y1":
            sub[s] = Poly.var(y.jet(s.jet_order + 1))
        elif s.name == "x2":
            sub[s] = Poly.var(x.jet(s.jet_order + 2))
        elif s.name == "y2":
            sub[s] = Poly.var(y.jet(s.jet_order + 2))
    return p.subs(sub)


# -- integration by parts -----------------------------------------------------------------------


def ibp_check(A: Algebroid1, L: Poly, curve: Curve, generator: Curve) -> Fraction:
    """Largest coefficient of ``<dL, delta gamma> - <EL, xi> - d/dt B`` along the curve.

    ``curve`` gives ``x(t)`` and ``y(t)``; the weight-2 part is taken to be
    ``y'(t)``.  Zero means the integration-by-parts identity holds exactly.
    """
    ha = prolong2(A)
    full = {s: Poly.coerce(curve[s]) for s in ha.base + ha.fiber1}
    for y, z in zip(ha.fiber1, ha.fiber2):
        full[z] = curve_derivative(full[y])
    bad = [r for r in admissibility_residual(ha, full) if not r.is_zero()]
    if bad:
        raise NotAdmissible(f"curve is not admissible: residual {bad[0]}")
    delta = admissible_variation(ha, full, generator)
    lhs = Poly()
    for c in ha.coords:
        lhs = lhs + on_curve(L.diff(c), full) * delta[velocity(c)]
    system = el_prolong2(A, L, ha.fiber2)
    gen = {g: Poly.coerce(generator.get(s, Poly())) for g, s in zip(system.generators, ha.fiber1)}
    gen = {g: gen[g] for g in system.generators}
    rhs = Poly()
    for r, g in zip(system.residuals, system.generators):
        rhs = rhs + on_curve(r, full) * gen[g]
    both = {**full, **gen}
    rhs = rhs + curve_derivative(on_curve(system.boundary_term, both))
    return (lhs - rhs).max_abs_coeff()


def symmetry_quantity(A: Algebroid1, L: Poly, section: Sequence[Poly], f: Poly | None = None) -> tuple[Poly, Verdict]:
    """Conserved quantity ``f - B(gamma, s)`` for an infinitesimal symmetry ``s``.

    The verdict reports whether ``<dL, s^[2]>`` equals the lift of ``df``
    composed with the anchor, which is what makes the quantity conserved.
    """
    ha = prolong2(A)
    f = Poly() if f is None else f
    section = [Poly.coerce(c) for c in section]
    field_ = alg_lift(ha, section, 0)
    pairing = sum((L.diff(c) * v for c, v in zip(ha.coords, field_)), Poly())
    rho = dict(zip(kappa2_of(ha).source.base, kappa2_of(ha).base_map))
    df = total_derivative(f).subs(rho)
    ok = pairing == df
    verdict = Verdict.passed() if ok else Verdict.failed(str(pairing - df), "section is not a symmetry of L")
    system = el_prolong2(A, L, ha.fiber2)
    adm = {s.jet(1): e for s, e in zip(A.base, anchor(A.QL, [Poly.var(v) for v in A.fiber]))}
    sub = {}
    for g, s in zip(system.generators, section):
        sub[g] = Poly.coerce(s)
        sub[g.jet(1)] = total_derivative(Poly.coerce(s)).subs(adm)
    fj = f.subs({s.jet(1): e for s, e in adm.items()})
    return fj - system.boundary_term.subs(sub), verdict


# -- numerics ------------------------------------------------------------------------------------


@dataclass
class ODE:
    """Explicit first-order system assembled from jet equations."""

    state: list[Symbol]
    top: list[Symbol]
    derivative: Callable[[np.ndarray], np.ndarray]
    top_values: Callable[[np.ndarray], np.ndarray]
    equations: list[Poly]


def assemble_ode(system: ELSystem) -> ODE:
    """Solve the equations for the highest jets (they must enter affinely)."""
    eqs = list(system.residuals) + list(system.admissibility)
    order: dict[str, int] = {}
    base: dict[str, Symbol] = {}
    for u in system.unknowns:
        order[u.name] = 0
        base[u.name] = Symbol(u.name, 0, u.weight)
    for e in eqs:
        for s in e.symbols():
            if s.name in order:
                order[s.name] = max(order[s.name], s.jet_order)
    unknowns = [u for u in system.unknowns if order[u.name] > 0]
    if len(eqs) != len(unknowns):
        raise DimensionMismatch(f"{len(eqs)} equations for {len(unknowns)} unknown curves")
    state = [base[u.name].jet(j) for u in unknowns for j in range(order[u.name])]
    top = [base[u.name].jet(order[u.name]) for u in unknowns]
    lead = [[e.diff(t) for t in top] for e in eqs]
    for row, e in zip(lead, eqs):
        for p in row:
            if p.symbols() & set(top):
                raise SingularLeadingMatrix(f"equation is not affine in the highest jets: {e}")
    rest = [e.subs({t: 0 for t in top}) for e in eqs]
    rest_f = [p.compile(state) for p in rest]
    if all(p.is_constant() for row in lead for p in row):
        inv = linalg.inverse([[p.constant_term() for p in row] for row in lead])
        inv_f = np.array([[float(x) for x in row] for row in inv])

        def top_values(v: np.ndarray) -> np.ndarray:
            b = np.array([f(v) for f in rest_f])
            return -inv_f @ b

    else:
        lead_f = [[p.compile(state) for p in row] for row in lead]

        def top_values(v: np.ndarray) -> np.ndarray:
            mat = np.array([[f(v) for f in row] for row in lead_f])
            b = np.array([f(v) for f in rest_f])
            if not np.isfinite(mat).all() or abs(np.linalg.det(mat)) < 1e-14:
                raise SingularLeadingMatrix("leading matrix is singular along the trajectory")
            return -np.linalg.solve(mat, b)

    index = {s: i for i, s in enumerate(state)}
    shifts = []
    for s in state:
        nxt = s.jet(1)
        shifts.append(("state", index[nxt]) if nxt in index else ("top", top.index(nxt)))

    def derivative(v: np.ndarray) -> np.ndarray:
        tv = top_values(v)
        return np.array([v[i] if kind == "state" else tv[i] for kind, i in shifts])

    return ODE(state, top, derivative, top_values, eqs)


@dataclass
class NumTrajectory:
    """Uniform-grid trajectory; ``top`` holds the solved highest jets at each node."""

    times: np.ndarray
    h: float
    state_symbols: list[Symbol]
    states: np.ndarray
    top_symbols: list[Symbol]
    top: np.ndarray
    residuals: np.ndarray
    conserved: np.ndarray
    conserved_names: list[str]

    @property
    def names(self) -> list[str]:
        return [str(s) for s in self.state_symbols]

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.names.index(name)]

    def evaluate(self, p: Poly) -> np.ndarray:
        """Values of a polynomial in state and top-jet symbols at every node."""
        syms = self.state_symbols + self.top_symbols
        missing = p.symbols() - set(syms)
        if missing:
            raise DimensionMismatch(f"trajectory has no values for {sorted(map(str, missing))}")
        f = p.compile(syms)
        full = np.concatenate([self.states, self.top], axis=1)
        return np.array([f(row) for row in full])

    def to_csv(self, path) -> None:
        header = ["t"] + self.names
        header += [f"residual{i + 1}" for i in range(self.residuals.shape[1])] + self.conserved_names
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i, t in enumerate(self.times):
                row = [t, *self.states[i], *self.residuals[i], *self.conserved[i]]
                w.writerow([repr(float(x)) for x in row])


def _rk4_step(f, v: np.ndarray, h: float) -> np.ndarray:
    k1 = f(v)
    k2 = f(v + h / 2 * k1)
    k3 = f(v + h / 2 * k2)
    k4 = f(v + h * k3)
    return v + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_rk4(
    ode: ODE,
    initial: Mapping[Symbol, float] | Sequence[float],
    h: float,
    T_end: float,
    monitors: Mapping[str, Poly] | None = None,
) -> NumTrajectory:
    """Classical fourth-order Runge-Kutta with residual and invariant monitoring."""
    if h <= 0 or T_end < 0:
        raise DimensionMismatch("step and horizon must be positive")
    if isinstance(initial, Mapping):
        by_key = {(s.name, s.jet_order): float(v) for s, v in initial.items()}
        v = np.array([by_key.get((s.name, s.jet_order), 0.0) for s in ode.state])
    else:
        v = np.array([float(x) for x in initial])
    if v.shape != (len(ode.state),):
        raise DimensionMismatch("initial state has the wrong size")
    monitors = dict(monitors or {})
    full = ode.state + ode.top
    mon_f = [p.compile(full) for p in monitors.values()]
    eq_f = [p.compile(full) for p in ode.equations]
    steps = int(round(T_end / h))
    times, states, tops, res, cons = [], [], [], [], []

    def record(t: float, v: np.ndarray) -> None:
        tv = ode.top_values(v)
        vals = np.concatenate([v, tv])
        times.append(t)
        states.append(v.copy())
        tops.append(tv)
        res.append([f(vals) for f in eq_f])
        cons.append([f(vals) for f in mon_f])

    record(0.0, v)
    for i in range(steps):
        v = _rk4_step(ode.derivative, v, h)
        if not np.isfinite(v).all():
            raise NonFiniteState(f"state became non-finite at t = {(i + 1) * h}")
        record((i + 1) * h, v)
    n = len(times)
    return NumTrajectory(
        np.array(times),
        h,
        list(ode.state),
        np.array(states),
        list(ode.top),
        np.array(tops).reshape(n, len(ode.top)),
        np.array(res).reshape(n, len(eq_f)),
        np.array(cons).reshape(n, len(mon_f)),
        list(monitors.keys()),
    )


def conservation_check(quantity: Poly, traj: NumTrajectory) -> float:
    """Largest ``|Q(t) - Q(0)|`` over the grid."""
    vals = traj.evaluate(quantity)
    return float(np.max(np.abs(vals - vals[0])))


def conservation_drift(traj: NumTrajectory) -> list[float]:
    """Largest deviation of each monitored quantity from its initial value."""
    if traj.conserved.size == 0:
        return []
    return [float(np.max(np.abs(traj.conserved[:, j] - traj.conserved[0, j]))) for j in range(traj.conserved.shape[1])]


def max_residual(traj: NumTrajectory) -> float:
    return float(np.max(np.abs(traj.residuals))) if traj.residuals.size else 0.0


def step_halving_ratio(ode: ODE, initial, h: float, T_end: float, component: int = 0) -> float:
    """``e(h) / e(h/2)`` at ``T_end`` against a fine reference (close to 16 for RK4)."""
    ref = integrate_rk4(ode, initial, h / 32, T_end).states[-1, component]
    e1 = abs(integrate_rk4(ode, initial, h, T_end).states[-1, component] - ref)
    e2 = abs(integrate_rk4(ode, initial, h / 2, T_end).states[-1, component] - ref)
    if e2 == 0 or not math.isfinite(e1 / e2):
        return math.inf
    return e1 / e2
