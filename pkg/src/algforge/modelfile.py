"""TOML model files: loading with schema validation, and writing algebroid data back out.

A model file has up to six top-level tables::

    [chart]       base = ["x1"], fiber = ["y1", {name = "y2", weight = 1}], fiber2 = ["z1"]
    [algebroid]   anchor_left = [["y-independent poly", ...], ...]   (m rows of n entries)
                  anchor_right = ...                                  (defaults to anchor_left)
                  [algebroid.bracket] "Q.k.i.j" = "poly"               (1-based, omitted = 0)
    [ha2]         one sub-table per structure-function family, keys are 1-based index paths
    [liealgebra]  dim = 3, c = [[3, 1, 2, "1"], ...]                  (antisymmetry completed)
    [lagrangian]  L = "poly", form = "prolong2|ep|standard|reduced", symmetry = [...], potential = "poly"
                  [lagrangian.conserved] name = "poly"
    [curves]      h = 1e-3, T = 1.0, [curves.initial] "a1.d1" = 0.5

Unknown tables and keys are rejected with :class:`SchemaError`.
"""

from __future__ import annotations

import itertools
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

from .algebroid import Algebroid1
from .errors import AlgforgeError, ParseError, SchemaError
from .expr import Poly, Symbol, parse
from .higher import HA2, z_symbols
from .liegroup import LieAlgebraModel

FORMS = ("prolong2", "ep", "standard", "reduced")

_ALLOWED = {
    "chart": {"base", "fiber", "fiber2"},
    "algebroid": {"anchor_left", "anchor_right", "bracket"},
    "ha2": set(HA2.FAMILIES),
    "liealgebra": {"dim", "c", "name"},
    "lagrangian": {"L", "form", "symmetry", "potential", "conserved"},
    "curves": {"h", "T", "initial"},
}

# Families whose values are symmetric in the first two lower indices (stored upper-triangular).
_SYMMETRIC = {"anchor_quad": (1, 2), "cubic": (1, 2)}


@dataclass
class Chart:
    base: tuple[Symbol, ...]
    fiber: tuple[Symbol, ...]
    fiber2: tuple[Symbol, ...] = ()

    @property
    def symbols(self) -> tuple[Symbol, ...]:
        return self.base + self.fiber + self.fiber2


@dataclass
class LagrangianSpec:
    text: str
    form: str | None = None
    symmetry: list[str] | None = None
    potential: str | None = None
    conserved: dict[str, str] = field(default_factory=dict)


@dataclass
class CurveSpec:
    initial: dict[str, float]
    h: float | None = None
    T: float | None = None


@dataclass
class Model:
    chart: Chart | None = None
    algebroid: Algebroid1 | None = None
    ha2: HA2 | None = None
    liealgebra: LieAlgebraModel | None = None
    lagrangian: LagrangianSpec | None = None
    curves: CurveSpec | None = None
    path: str = ""

    def require(self, *sections: str) -> None:
        missing = [s for s in sections if getattr(self, s) is None]
        if missing:
            raise SchemaError(f"model is missing section(s): {', '.join('[' + s + ']' for s in missing)}")


# -- helpers ----------------------------------------------------------------------


def _check_keys(table: Mapping[str, Any], allowed: Iterable[str], where: str) -> None:
    extra = sorted(set(table) - set(allowed))
    if extra:
        raise SchemaError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _as_table(value: Any, where: str) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise SchemaError(f"{where} must be a table")
    return value


def _poly(value: Any, allowed: Iterable[Symbol], where: str) -> Poly:
    allowed = tuple(allowed)
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise SchemaError(f"{where}: expected a polynomial string or number")
    if isinstance(value, float):
        value = str(Fraction(value).limit_denominator())
    try:
        p = parse(str(value), allowed)
    except ParseError as exc:
        raise SchemaError(f"{where}: {exc}") from exc
    stray = p.symbols() - set(allowed)
    if stray:
        raise SchemaError(f"{where}: unknown symbol(s) {', '.join(sorted(map(str, stray)))}")
    return p


def _symbol_list(value: Any, default_weight: int, where: str) -> tuple[Symbol, ...]:
    if not isinstance(value, list):
        raise SchemaError(f"{where} must be a list")
    out = []
    for item in value:
        if isinstance(item, str):
            name, w = item, default_weight
        elif isinstance(item, Mapping):
            _check_keys(item, {"name", "weight"}, where)
            if "name" not in item:
                raise SchemaError(f"{where}: entry without a name")
            name, w = item["name"], item.get("weight", default_weight)
        else:
            raise SchemaError(f"{where}: entries must be names or {{name, weight}} tables")
        if not isinstance(name, str) or not name.isidentifier() or not isinstance(w, int) or isinstance(w, bool):
            raise SchemaError(f"{where}: bad entry {item!r}")
        if w != default_weight:
            raise SchemaError(f"{where}: {name} must have weight {default_weight}")
        out.append(Symbol(name, 0, w))
    return tuple(out)


def _index_path(key: str, rank: int, shape: tuple[int, ...], where: str) -> tuple[int, ...]:
    parts = key.split(".")
    if len(parts) != rank or not all(p.isdigit() for p in parts):
        raise SchemaError(f"{where}: key {key!r} must be {rank} dot-separated 1-based indices")
    idx = tuple(int(p) - 1 for p in parts)
    if any(i < 0 or i >= n for i, n in zip(idx, shape)):
        raise SchemaError(f"{where}: index {key!r} out of range for shape {shape}")
    return idx


def _nested(shape: tuple[int, ...]):
    if len(shape) == 1:
        return [Poly() for _ in range(shape[0])]
    return [_nested(shape[1:]) for _ in range(shape[0])]


def _set(arr, idx, val) -> None:
    for i in idx[:-1]:
        arr = arr[i]
    arr[idx[-1]] = val


def _get(arr, idx):
    for i in idx:
        arr = arr[i]
    return arr


def _matrix(value: Any, rows: int, cols: int, allowed, where: str) -> list[list[Poly]]:
    if not isinstance(value, list) or len(value) != rows or any(not isinstance(r, list) or len(r) != cols for r in value):
        raise SchemaError(f"{where} must be a {rows} x {cols} array")
    return [[_poly(e, allowed, f"{where}[{a + 1}][{i + 1}]") for i, e in enumerate(r)] for a, r in enumerate(value)]


# -- loading -----------------------------------------------------------------------


def load_model(path: str | Path) -> Model:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise SchemaError(f"{path}: malformed TOML: {exc}") from exc
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from exc
    model = model_from_dict(doc)
    model.path = str(path)
    return model


def loads_model(text: str) -> Model:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SchemaError(f"malformed TOML: {exc}") from exc
    return model_from_dict(doc)


def model_from_dict(doc: Mapping[str, Any]) -> Model:
    _check_keys(doc, _ALLOWED, "the model file")
    for name, allowed in _ALLOWED.items():
        if name in doc:
            _check_keys(_as_table(doc[name], f"[{name}]"), allowed, f"[{name}]")
    model = Model()
    try:
        if "chart" in doc:
            model.chart = _load_chart(doc["chart"])
        if "liealgebra" in doc:
            model.liealgebra = _load_liealgebra(doc["liealgebra"])
        if "algebroid" in doc:
            model.algebroid = _load_algebroid(doc["algebroid"], model.chart)
        if "ha2" in doc:
            model.ha2 = _load_ha2(doc["ha2"], model.chart)
        if "lagrangian" in doc:
            model.lagrangian = _load_lagrangian(doc["lagrangian"])
        if "curves" in doc:
            model.curves = _load_curves(doc["curves"])
    except SchemaError:
        raise
    except AlgforgeError as exc:
        raise SchemaError(str(exc)) from exc
    return model


def _load_chart(t: Mapping[str, Any]) -> Chart:
    base = _symbol_list(t.get("base", []), 0, "[chart].base")
    fiber = _symbol_list(t.get("fiber", []), 1, "[chart].fiber")
    fiber2 = _symbol_list(t.get("fiber2", []), 2, "[chart].fiber2")
    names = [s.name for s in base + fiber + fiber2]
    if len(set(names)) != len(names):
        raise SchemaError("[chart]: coordinate names must be distinct")
    return Chart(base, fiber, fiber2)


def _load_liealgebra(t: Mapping[str, Any]) -> LieAlgebraModel:
    dim = t.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise SchemaError("[liealgebra].dim must be a positive integer")
    rows = t.get("c", [])
    if not isinstance(rows, list):
        raise SchemaError("[liealgebra].c must be a list of [k, i, j, value] rows")
    entries = []
    for r in rows:
        if not isinstance(r, list) or len(r) != 4 or not all(isinstance(x, int) and not isinstance(x, bool) for x in r[:3]):
            raise SchemaError(f"[liealgebra].c: bad row {r!r}")
        try:
            val = Fraction(str(r[3]))
        except (ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"[liealgebra].c: bad value {r[3]!r}") from exc
        entries.append((r[0], r[1], r[2], val))
    name = t.get("name", "")
    if not isinstance(name, str):
        raise SchemaError("[liealgebra].name must be a string")
    return LieAlgebraModel.from_entries(dim, entries, name)


def _load_algebroid(t: Mapping[str, Any], chart: Chart | None) -> Algebroid1:
    if chart is None:
        raise SchemaError("[algebroid] needs a [chart] section")
    m, n = len(chart.base), len(chart.fiber)
    left = _matrix(t.get("anchor_left", [[0] * n for _ in range(m)]), m, n, chart.base, "[algebroid].anchor_left")
    right = _matrix(t["anchor_right"], m, n, chart.base, "[algebroid].anchor_right") if "anchor_right" in t else left
    Q = _nested((n, n, n))
    for key, val in _as_table(t.get("bracket", {}), "[algebroid.bracket]").items():
        if not key.startswith("Q."):
            raise SchemaError(f"[algebroid.bracket]: key {key!r} must look like Q.k.i.j")
        idx = _index_path(key[2:], 3, (n, n, n), "[algebroid.bracket]")
        _set(Q, idx, _poly(val, chart.base, f"[algebroid.bracket].{key}"))
    return Algebroid1(chart.base, chart.fiber, left, right, Q)


def _load_ha2(t: Mapping[str, Any], chart: Chart | None) -> HA2:
    if chart is None or not chart.fiber2:
        raise SchemaError("[ha2] needs a [chart] section with fiber2")
    m, n, p = len(chart.base), len(chart.fiber), len(chart.fiber2)
    shapes = HA2.shapes(m, n, p)
    families = {}
    for fam, table in t.items():
        shape = shapes[fam]
        arr = _nested(shape)
        for key, val in _as_table(table, f"[ha2.{fam}]").items():
            idx = _index_path(key, len(shape), shape, f"[ha2.{fam}]")
            poly = _poly(val, chart.base, f"[ha2.{fam}].{key}")
            _set(arr, idx, poly)
            if fam in _SYMMETRIC:
                a, b = _SYMMETRIC[fam]
                if idx[a] > idx[b]:
                    raise SchemaError(f"[ha2.{fam}]: store only entries with index {a + 1} <= index {b + 1}")
                swapped = list(idx)
                swapped[a], swapped[b] = swapped[b], swapped[a]
                _set(arr, tuple(swapped), poly)
        families[fam] = arr
    return HA2.zeros(chart.base, chart.fiber, chart.fiber2, **families)


def _load_lagrangian(t: Mapping[str, Any]) -> LagrangianSpec:
    text = t.get("L")
    if not isinstance(text, str):
        raise SchemaError("[lagrangian].L must be a polynomial string")
    form = t.get("form")
    if form is not None and form not in FORMS:
        raise SchemaError(f"[lagrangian].form must be one of {', '.join(FORMS)}")
    sym = t.get("symmetry")
    if sym is not None and (not isinstance(sym, list) or not all(isinstance(s, (str, int)) for s in sym)):
        raise SchemaError("[lagrangian].symmetry must be a list of polynomial strings")
    pot = t.get("potential")
    if pot is not None and not isinstance(pot, str):
        raise SchemaError("[lagrangian].potential must be a polynomial string")
    cons = _as_table(t.get("conserved", {}), "[lagrangian.conserved]")
    if not all(isinstance(v, str) for v in cons.values()):
        raise SchemaError("[lagrangian.conserved] values must be polynomial strings")
    return LagrangianSpec(text, form, [str(s) for s in sym] if sym is not None else None, pot, dict(cons))


def _load_curves(t: Mapping[str, Any]) -> CurveSpec:
    init = _as_table(t.get("initial", {}), "[curves.initial]")
    vals = {}
    for k, v in init.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"[curves.initial].{k} must be a number")
        vals[k] = float(v)
    out = CurveSpec(vals)
    for key in ("h", "T"):
        if key in t:
            v = t[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
                raise SchemaError(f"[curves].{key} must be a positive number")
            setattr(out, key, float(v))
    return out


# -- writing -----------------------------------------------------------------------


def _chart_dict(base, fiber, fiber2=()) -> dict:
    d = {"base": [s.name for s in base], "fiber": [s.name for s in fiber]}
    if fiber2:
        d["fiber2"] = [s.name for s in fiber2]
    return d


def algebroid_to_dict(A: Algebroid1) -> dict:
    br = {}
    n = A.n
    for k, i, j in itertools.product(range(n), repeat=3):
        if not A.Qbr[k][i][j].is_zero():
            br[f"Q.{k + 1}.{i + 1}.{j + 1}"] = str(A.Qbr[k][i][j])
    alg: dict[str, Any] = {"anchor_left": [[str(e) for e in r] for r in A.QL]}
    if A.QR != A.QL:
        alg["anchor_right"] = [[str(e) for e in r] for r in A.QR]
    if br:
        alg["bracket"] = br
    return {"chart": _chart_dict(A.base, A.fiber), "algebroid": alg}


def ha2_to_dict(ha: HA2) -> dict:
    tables = {}
    for fam in HA2.FAMILIES:
        arr = getattr(ha, fam)
        shape = HA2.shapes(ha.m, ha.n, ha.p)[fam]
        entries = {}
        for idx in itertools.product(*(range(s) for s in shape)):
            if fam in _SYMMETRIC:
                a, b = _SYMMETRIC[fam]
                if idx[a] > idx[b]:
                    continue
            val = _get(arr, idx)
            if not val.is_zero():
                entries[".".join(str(i + 1) for i in idx)] = str(val)
        if entries:
            tables[fam] = entries
    return {"chart": _chart_dict(ha.base, ha.fiber1, ha.fiber2), "ha2": tables}


def dumps(doc: Mapping[str, Any]) -> str:
    return tomli_w.dumps(doc)


def write_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


# -- resolution helpers used by the command line -------------------------------------------


def resolve_algebroid(model: Model) -> Algebroid1:
    """The order-1 algebroid of a model: explicit ``[algebroid]`` or the one of ``[liealgebra]``."""
    if model.algebroid is not None:
        return model.algebroid
    if model.liealgebra is not None:
        from .algebroid import lie_algebra_algebroid

        name = "y"
        if model.chart is not None and model.chart.fiber:
            if len(model.chart.fiber) != model.liealgebra.dim or model.chart.base:
                raise SchemaError("[chart] does not fit the Lie algebra (no base, dim fiber coordinates)")
            m = re.fullmatch(r"([A-Za-z_]+)1", model.chart.fiber[0].name)
            name = m.group(1) if m else ""
            if [s.name for s in model.chart.fiber] != [f"{name}{i + 1}" for i in range(model.liealgebra.dim)]:
                raise SchemaError("Lie algebra fiber coordinates must be named <prefix>1..<prefix>n")
        return lie_algebra_algebroid(model.liealgebra.consts, name)
    raise SchemaError("model needs an [algebroid] or [liealgebra] section")


def second_order_fiber(model: Model, n: int) -> tuple[Symbol, ...]:
    if model.chart is not None and model.chart.fiber2:
        if len(model.chart.fiber2) != n:
            raise SchemaError("[chart].fiber2 must have one coordinate per fiber coordinate")
        return model.chart.fiber2
    return z_symbols(n)


def parse_in(text: str, symbols: Iterable[Symbol], where: str, jets: int = 0) -> Poly:
    """Parse ``text`` allowing the given symbols and their jets up to order ``jets``."""
    allowed = [s.jet(j) for s in symbols for j in range(jets + 1)]
    return _poly(text, allowed, where)
