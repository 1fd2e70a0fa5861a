"""``algforge`` command line.

Exit codes: 0 when the requested check passes (or the construction succeeds),
1 when it fails with a witness, 2 for usage and schema errors.
"""

from __future__ import annotations

import itertools
import json
import os
import random
import sys
import time
from fractions import Fraction
from typing import Any, Callable

import click

from . import __version__
from . import mechanics as mech
from .algebroid import (
    Algebroid1,
    is_almost_lie,
    is_lie,
    is_skew,
    jacobiator,
    leibniz_check,
    lie_algebra_algebroid,
)
from .errors import AlgforgeError, NotAlmostLie, SchemaError
from .expr import Poly, Symbol
from .higher import HA2, al_check2, alg_lift, is_skew2, is_strong, lie_check2, prolong2
from .liegroup import GradedSubspace, kappa_g, subalgebroid_restriction, subalgebroid_test
from .modelfile import (
    Model,
    dumps,
    ha2_to_dict,
    load_model,
    parse_in,
    resolve_algebroid,
    second_order_fiber,
    write_atomic,
)
from .verdict import Verdict


class Failure(Exception):
    """A check that ran to completion and failed; carries the report."""

    def __init__(self, report: dict):
        super().__init__(report.get("note", "failed"))
        self.report = report


def seed() -> int:
    raw = os.environ.get("ALGFORGE_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise click.UsageError(f"ALGFORGE_SEED must be an integer, got {raw!r}")


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, int, float, str)) or x is None:
        return x
    return str(x)


def report_of(name: str, verdict: Verdict, started: float, **extra: Any) -> dict:
    rep = {
        "check": name,
        "verdict": "pass" if verdict.ok else "fail",
        "witness": _jsonable(verdict.witness),
        "note": verdict.note,
        "details": _jsonable(verdict.details),
        "timing": round(time.perf_counter() - started, 6),
    }
    rep.update(_jsonable(extra))
    return rep


def render(rep: dict, as_json: bool) -> str:
    if as_json:
        return json.dumps(rep, sort_keys=True)
    lines = [f"{rep['check']}: {rep['verdict'].upper()}"]
    if rep.get("note"):
        lines.append(f"  note: {rep['note']}")
    if rep.get("witness") is not None:
        lines.append(f"  witness: {rep['witness']}")
    for key in sorted(rep):
        if key not in {"check", "verdict", "note", "witness", "timing", "details"}:
            lines.append(f"  {key}: {rep[key]}")
    for key, val in sorted((rep.get("details") or {}).items()):
        lines.append(f"  {key}: {val}")
    return "\n".join(lines)


def emit(rep: dict, as_json: bool) -> None:
    click.echo(render(rep, as_json))
    if rep["verdict"] != "pass":
        raise Failure(rep)


def run(fn: Callable[[], None]) -> None:
    """Map library exceptions onto the exit-code contract."""
    try:
        fn()
    except Failure:
        sys.exit(1)
    except SchemaError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except click.UsageError:
        raise
    except AlgforgeError as exc:
        click.echo(f"failed: {type(exc).__name__}: {exc}", err=True)
        sys.exit(1)


def _load(path: str) -> Model:
    return load_model(path)


def _vector(text: str, where: str) -> list[Fraction]:
    try:
        return [Fraction(p.strip()) for p in text.split(",")] if text.strip() else []
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"{where}: expected comma-separated rationals, got {text!r}")


def _vectors(text: str, where: str) -> list[list[Fraction]]:
    return [_vector(v, where) for v in text.split(";")] if text.strip() else []


# -- commands -------------------------------------------------------------------------


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(version=__version__, message="%(version)s")
def main() -> None:
    """Algebroids as comorphisms: checks, prolongations, lifts and variational equations."""


CHECKS = ("skew", "al", "lie", "strong", "leibniz", "jacobi")


def _leibniz(A: Algebroid1, rng: random.Random, trials: int = 4) -> Verdict:
    for _ in range(trials):
        def rand_poly() -> Poly:
            p = Poly.const(Fraction(rng.randint(-3, 3)))
            for s in A.base:
                p = p + Fraction(rng.randint(-3, 3)) * Poly.var(s) ** rng.randint(1, 2)
            return p

        f, g = rand_poly(), rand_poly()
        s = [rand_poly() for _ in range(A.n)]
        t = [rand_poly() for _ in range(A.n)]
        v = leibniz_check(A, f, g, s, t)
        if not v:
            return Verdict.failed({"f": str(f), "g": str(g), "s": [str(p) for p in s], "t": [str(p) for p in t], "defect": v.witness}, v.note)
    return Verdict.passed(f"{trials} random instances", seed=seed())


def _jacobi(A: Algebroid1) -> Verdict:
    for i, j, k in itertools.combinations_with_replacement(range(A.n), 3):
        jac = jacobiator(A, A.basis_section(i), A.basis_section(j), A.basis_section(k))
        if any(not p.is_zero() for p in jac):
            return Verdict.failed({"sections": (i + 1, j + 1, k + 1), "jacobiator": [str(p) for p in jac]}, "Jacobi identity fails on basis sections")
    return Verdict.passed("all basis triples")


@main.command()
@click.option("--which", type=click.Choice(CHECKS), required=True, help="Axiom to verify.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable report.")
@click.argument("model", type=click.Path(dir_okay=False))
def check(which: str, as_json: bool, model: str) -> None:
    """Verify an axiom of the algebroid (or second-order algebroid) in MODEL."""

    def go() -> None:
        started = time.perf_counter()
        m = _load(model)
        if m.ha2 is not None:
            fns = {"skew": is_skew2, "al": al_check2, "lie": lie_check2, "strong": is_strong}
            if which not in fns:
                raise click.UsageError(f"--which {which} applies to order-1 models only")
            verdict = fns[which](m.ha2)
            order = 2
        else:
            A = resolve_algebroid(m)
            order = 1
            if which == "strong":
                raise click.UsageError("--which strong applies to [ha2] models only")
            if which == "leibniz":
                verdict = _leibniz(A, random.Random(seed()))
            elif which == "jacobi":
                verdict = _jacobi(A)
            else:
                verdict = {"skew": is_skew, "al": is_almost_lie, "lie": is_lie}[which](A)
        emit(report_of(which, verdict, started, order=order), as_json)

    run(go)


@main.command()
@click.option("--out", type=click.Path(dir_okay=False), help="Write the TOML here instead of stdout.")
@click.argument("model", type=click.Path(dir_okay=False))
def prolong(out: str | None, model: str) -> None:
    """Build the second-order prolongation of the algebroid in MODEL."""

    def go() -> None:
        A = resolve_algebroid(_load(model))
        try:
            ha = prolong2(A)
        except NotAlmostLie as exc:
            emit({"check": "prolong", "verdict": "fail", "note": str(exc), "witness": None}, False)
            return
        text = dumps(ha2_to_dict(ha))
        if out:
            write_atomic(out, text)
        else:
            click.echo(text, nl=False)

    run(go)


def _ha2_of(m: Model) -> HA2:
    return m.ha2 if m.ha2 is not None else prolong2(resolve_algebroid(m))


@main.command()
@click.option("--section", required=True, help="Comma-separated components of a section (polynomials in the base).")
@click.option("--alpha", type=click.IntRange(0, 2), default=0, show_default=True)
@click.argument("model", type=click.Path(dir_okay=False))
def lift(section: str, alpha: int, model: str) -> None:
    """Print the algebroid lift of a section as a vector field on the second-order bundle."""

    def go() -> None:
        ha = _ha2_of(_load(model))
        parts = [p for p in section.split(",")]
        if len(parts) != ha.n:
            raise click.BadParameter(f"section needs {ha.n} components")
        s = [parse_in(p, ha.base, "--section") for p in parts]
        field_ = alg_lift(ha, s, alpha)
        for c, v in zip(ha.coords, field_):
            click.echo(f"d{c} = {v}")

    run(go)


def build_system(m: Model, form: str | None) -> tuple[mech.ELSystem, dict]:
    """Equations of motion for the model plus data needed for monitoring."""
    m.require("lagrangian")
    spec = m.lagrangian
    form = form or spec.form
    if form is None:
        raise SchemaError("choose --form or set [lagrangian].form")
    ctx: dict = {"form": form}
    if form == "prolong2":
        A = resolve_algebroid(m)
        z = second_order_fiber(m, A.n)
        # First derivatives of the fiber coordinates are accepted as aliases of z.
        L = parse_in(spec.text, A.base + A.fiber + z, "[lagrangian].L", jets=1)
        stray = [s for s in L.symbols() if s.jet_order and s.base() not in A.fiber]
        if stray:
            raise SchemaError(f"[lagrangian].L: unexpected jet symbol(s) {', '.join(sorted(map(str, stray)))}")
        L = L.subs({s.jet(1): Poly.var(w) for s, w in zip(A.fiber, z)})
        system = mech.el_prolong2(A, L, z)
        ctx.update(algebroid=A, L=L, z=z)
    elif form == "ep":
        m.require("liealgebra")
        A = resolve_algebroid(m)
        name = A.fiber[0].name[:-1]
        l = parse_in(spec.text, A.fiber, "[lagrangian].L", jets=1)
        system = mech.euler_poincare2(m.liealgebra, l, name)
        z = second_order_fiber(m, A.n)
        ctx.update(algebroid=A, L=l.subs({s.jet(1): Poly.var(w) for s, w in zip(A.fiber, z)}), z=z)
    elif form == "standard":
        m.require("chart")
        L = parse_in(spec.text, m.chart.base, "[lagrangian].L", jets=2)
        system = mech.standard_el2(L, m.chart.base)
    elif form == "reduced":
        model = mech.reduced_example_model()
        l = parse_in(spec.text, model.coords, "[lagrangian].L")
        system = mech.reduced_example_el(l)
    else:  # pragma: no cover - guarded by the schema
        raise SchemaError(f"unknown form {form}")
    return system, ctx


@main.command()
@click.option("--form", type=click.Choice(("prolong2", "ep", "standard", "reduced")), help="Which equations to derive.")
@click.option("--latex", is_flag=True, help="Emit a LaTeX aligned block.")
@click.argument("model", type=click.Path(dir_okay=False))
def el(form: str | None, latex: bool, model: str) -> None:
    """Print the second-order Euler-Lagrange equations of MODEL."""

    def go() -> None:
        system, _ = build_system(_load(model), form)
        click.echo(system.latex() if latex else system.text())

    run(go)


@main.command()
@click.option("--latex", is_flag=True)
@click.argument("model", type=click.Path(dir_okay=False))
def ep(latex: bool, model: str) -> None:
    """Print the second-order Euler-Poincare equations of MODEL."""

    def go() -> None:
        system, _ = build_system(_load(model), "ep")
        click.echo(system.latex() if latex else system.text())

    run(go)


def _monitors(m: Model, ctx: dict, system: mech.ELSystem, ode: mech.ODE) -> dict[str, Poly]:
    spec = m.lagrangian
    allowed = ode.state + ode.top
    mons = {name: parse_in(text, allowed, f"[lagrangian.conserved].{name}") for name, text in sorted(spec.conserved.items())}
    if spec.symmetry is not None:
        if "algebroid" not in ctx:
            raise SchemaError("symmetry monitoring needs form prolong2 or ep")
        A = ctx["algebroid"]
        if len(spec.symmetry) != A.n:
            raise SchemaError(f"[lagrangian].symmetry needs {A.n} components")
        s = [parse_in(t, A.base, "[lagrangian].symmetry") for t in spec.symmetry]
        f = parse_in(spec.potential, A.base, "[lagrangian].potential", jets=1) if spec.potential else None
        q, verdict = mech.symmetry_quantity(A, ctx["L"], s, f)
        if not verdict:
            raise SchemaError(f"[lagrangian].symmetry is not a symmetry: {verdict.witness}")
        mons["symmetry"] = q
    return mons


@main.command()
@click.option("--form", type=click.Choice(("prolong2", "ep", "standard", "reduced")))
@click.option("--h", "h", type=float, help="Step size (default from [curves].h, else 1e-3).")
@click.option("--T", "T", type=float, help="Horizon (default from [curves].T, else 1).")
@click.option("--out", type=click.Path(dir_okay=False), help="CSV output path.")
@click.option("--json", "as_json", is_flag=True)
@click.argument("model", type=click.Path(dir_okay=False))
def integrate(form: str | None, h: float | None, T: float | None, out: str | None, as_json: bool, model: str) -> None:
    """Integrate the equations of MODEL with RK4 from the [curves] initial data."""

    def go() -> None:
        started = time.perf_counter()
        m = _load(model)
        m.require("curves")
        system, ctx = build_system(m, form)
        ode = mech.assemble_ode(system)
        names = {str(s): s for s in ode.state}
        unknown = sorted(set(m.curves.initial) - set(names))
        if unknown:
            raise SchemaError(f"[curves.initial] has unknown entries: {', '.join(unknown)}")
        missing = [n for n in names if n not in m.curves.initial]
        if missing:
            raise SchemaError(f"[curves.initial] is missing: {', '.join(missing)}")
        step = h or m.curves.h or 1e-3
        horizon = T or m.curves.T or 1.0
        if step <= 0 or horizon <= 0:
            raise click.BadParameter("--h and --T must be positive")
        init = [m.curves.initial[n] for n in names]
        mons = _monitors(m, ctx, system, ode)
        traj = mech.integrate_rk4(ode, init, step, horizon, mons)
        if out:
            tmp = out + ".tmp"
            traj.to_csv(tmp)
            os.replace(tmp, out)
        drift = dict(zip(traj.conserved_names, mech.conservation_drift(traj)))
        final = {n: float(v) for n, v in zip(traj.names, traj.states[-1])}
        rep = report_of(
            "integrate",
            Verdict.passed(f"{len(traj.times) - 1} RK4 steps"),
            started,
            h=step,
            T=horizon,
            max_residual=mech.max_residual(traj),
            conservation=drift,
            final=final,
        )
        emit(rep, as_json)

    run(go)


@main.command("kappa-eval")
@click.option("--k", "k", type=click.IntRange(1), required=True, help="Order.")
@click.option("--ybar", required=True, help="Base point: k vectors separated by ';'.")
@click.option("--x", "x", required=True, help="Tangent vector: k+1 vectors separated by ';'.")
@click.argument("model", type=click.Path(dir_okay=False))
def kappa_eval(k: int, ybar: str, x: str, model: str) -> None:
    """Evaluate the order-k comorphism of the Lie algebra in MODEL."""

    def go() -> None:
        m = _load(model)
        m.require("liealgebra")
        out = kappa_g(m.liealgebra, k, _vectors(ybar, "--ybar"), _vectors(x, "--x"))
        for level, vec in enumerate(out):
            click.echo(f"dY{level} = ({', '.join(str(c) for c in vec)})")

    run(go)


@main.command()
@click.option("--space", required=True, help="Graded subspace: degrees separated by '|', basis vectors by ';', entries by ','.")
@click.option("--json", "as_json", is_flag=True)
@click.argument("model", type=click.Path(dir_okay=False))
def subalg(space: str, as_json: bool, model: str) -> None:
    """Test whether a graded subspace spans a higher subalgebroid of the Lie algebra in MODEL."""

    def go() -> None:
        started = time.perf_counter()
        m = _load(model)
        m.require("liealgebra")
        V = GradedSubspace(tuple(tuple(tuple(v) for v in _vectors(part, "--space")) for part in space.split("|")))
        verdict = subalgebroid_test(m.liealgebra, V)
        extra = {}
        if V.k == 2:
            _, restricted = subalgebroid_restriction(m.liealgebra, V)
            extra["restriction_agrees"] = restricted.ok == verdict.ok
        emit(report_of("subalg", verdict, started, **extra), as_json)

    run(go)


if __name__ == "__main__":  # pragma: no cover
    main()
