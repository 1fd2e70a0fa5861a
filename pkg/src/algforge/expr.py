"""Exact multivariate polynomials over weighted jet symbols.

A :class:`Symbol` is a coordinate name together with a jet order (how many
times it has been differentiated along a curve) and an integer weight.  A
:class:`Poly` is a finite sum of rational multiples of monomials in such
symbols.  Polynomials print in a small text grammar that :func:`parse` reads
back, e.g. ``3/2*x1^2*y1.d1 - x2 + 7``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence, Union

from .errors import JetOverflow, MissingSymbol, ParseError

Rational = Fraction
Monomial = tuple  # tuple[tuple[Symbol, int], ...], sorted by symbol key


@dataclass(frozen=True, slots=True, order=False)
class Symbol:
    """A coordinate, identified by ``(name, jet_order)``.

    The weight is carried along for homogeneity checks but does not take
    part in equality or hashing.
    """

    name: str
    jet_order: int = 0
    weight: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        if self.jet_order < 0:
            raise ValueError("jet order must be non-negative")

    @property
    def key(self) -> tuple[str, int]:
        return (self.name, self.jet_order)

    def __lt__(self, other: "Symbol") -> bool:
        return self.key < other.key

    def jet(self, order: int = 1) -> "Symbol":
        """The ``order``-th time derivative of this coordinate."""
        return Symbol(self.name, self.jet_order + order, self.weight + order)

    def base(self) -> "Symbol":
        return Symbol(self.name, 0, self.weight - self.jet_order)

    def renamed(self, name: str) -> "Symbol":
        return Symbol(name, self.jet_order, self.weight)

    def __str__(self) -> str:
        if self.jet_order == 0:
            return self.name
        return f"{self.name}.d{self.jet_order}"

    def __repr__(self) -> str:
        return f"Symbol({str(self)!r}, w={self.weight})"


Coeff = Union[int, Fraction]
PolyLike = Union["Poly", Symbol, int, Fraction]


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    powers: dict[Symbol, int] = dict(a)
    for s, e in b:
        powers[s] = powers.get(s, 0) + e
    return tuple(sorted(powers.items(), key=lambda se: se[0].key))


def _mono_key(m: Monomial) -> tuple:
    return tuple((s.name, s.jet_order, e) for s, e in m)


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


class Poly:
    """Immutable polynomial with :class:`fractions.Fraction` coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Coeff] | None = None):
        clean: dict[Monomial, Fraction] = {}
        if terms:
            for m, c in terms.items():
                c = Fraction(c)
                if c:
                    clean[m] = c
        self._terms = clean
        self._hash: int | None = None

    # -- construction -----------------------------------------------------
    @classmethod
    def _raw(cls, terms: dict[Monomial, Fraction]) -> "Poly":
        p = cls.__new__(cls)
        p._terms = terms
        p._hash = None
        return p

    @classmethod
    def const(cls, c: Coeff) -> "Poly":
        c = Fraction(c)
        return cls._raw({(): c} if c else {})

    @classmethod
    def var(cls, s: Symbol) -> "Poly":
        return cls._raw({((s, 1),): Fraction(1)})

    @staticmethod
    def coerce(x: PolyLike) -> "Poly":
        if isinstance(x, Poly):
            return x
        if isinstance(x, Symbol):
            return Poly.var(x)
        if isinstance(x, (int, Fraction)):
            return Poly.const(x)
        raise TypeError(f"cannot convert {type(x).__name__} to Poly")

    # -- inspection -------------------------------------------------------
    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[Monomial, Fraction]]:
        return iter(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_constant(self) -> bool:
        return all(m == () for m in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((), Fraction(0))

    def symbols(self) -> set[Symbol]:
        return {s for m in self._terms for s, _ in m}

    def degree(self) -> int:
        return max((_mono_degree(m) for m in self._terms), default=0)

    def degree_in(self, syms: Iterable[Symbol]) -> int:
        ss = set(syms)
        return max((sum(e for s, e in m if s in ss) for m in self._terms), default=0)

    def coeff(self, monomial: Monomial) -> Fraction:
        return self._terms.get(monomial, Fraction(0))

    def max_abs_coeff(self) -> Fraction:
        return max((abs(c) for c in self._terms.values()), default=Fraction(0))

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other: PolyLike) -> "Poly":
        try:
            o = Poly.coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self._terms)
        for m, c in o._terms.items():
            v = out.get(m, 0) + c
            if v:
                out[m] = v
            else:
                out.pop(m, None)
        return Poly._raw(out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other: PolyLike) -> "Poly":
        try:
            o = Poly.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other: PolyLike) -> "Poly":
        return Poly.coerce(other) - self

    def __mul__(self, other: PolyLike) -> "Poly":
        if isinstance(other, (int, Fraction)):
            f = Fraction(other)
            if not f:
                return Poly()
            return Poly._raw({m: c * f for m, c in self._terms.items()})
        try:
            o = Poly.coerce(other)
        except TypeError:
            return NotImplemented
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in o._terms.items():
                m = _mono_mul(m1, m2)
                v = out.get(m, 0) + c1 * c2
                if v:
                    out[m] = v
                else:
                    out.pop(m, None)
        return Poly._raw(out)

    __rmul__ = __mul__

    def __truediv__(self, other: Coeff) -> "Poly":
        if not isinstance(other, (int, Fraction)):
            return NotImplemented
        return self * (1 / Fraction(other))

    def __pow__(self, n: int) -> "Poly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = Poly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction, Symbol)):
            other = Poly.coerce(other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # -- calculus ---------------------------------------------------------
    def diff(self, s: Symbol) -> "Poly":
        out: dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            for idx, (t, e) in enumerate(m):
                if t == s:
                    rest = m[:idx] + (((t, e - 1),) if e > 1 else ()) + m[idx + 1:]
                    out[rest] = out.get(rest, 0) + c * e
                    break
        return Poly(out)

    def subs(self, mapping: Mapping[Symbol, PolyLike]) -> "Poly":
        """Simultaneous substitution of symbols by polynomials."""
        if not mapping:
            return self
        repl = {s: Poly.coerce(v) for s, v in mapping.items()}
        power_cache: dict[tuple[Symbol, int], Poly] = {}

        def power(s: Symbol, e: int) -> Poly:
            key = (s, e)
            if key not in power_cache:
                power_cache[key] = repl[s] ** e
            return power_cache[key]

        result = Poly()
        for m, c in self._terms.items():
            kept: list[tuple[Symbol, int]] = []
            factor = Poly.const(c)
            for s, e in m:
                if s in repl:
                    factor = factor * power(s, e)
                else:
                    kept.append((s, e))
            result = result + factor * Poly._raw({tuple(kept): Fraction(1)})
        return result

    def evaluate(self, point: Mapping[Symbol, Coeff]) -> Fraction:
        """Exact value at a point; every symbol must be assigned."""
        total = Fraction(0)
        for m, c in self._terms.items():
            v = c
            for s, e in m:
                if s not in point:
                    raise MissingSymbol(f"no value for {s}")
                v *= Fraction(point[s]) ** e
            total += v
        return total

    def total_derivative(self, max_order: int | None = None) -> "Poly":
        return total_derivative(self, max_order)

    def compile(self, order: Sequence[Symbol]) -> Callable[[Sequence[float]], float]:
        """Float evaluator taking values in the given symbol order."""
        index = {s: i for i, s in enumerate(order)}
        parts = []
        for m, c in self._terms.items():
            factors = [repr(float(c))]
            for s, e in m:
                if s not in index:
                    raise MissingSymbol(f"no slot for {s}")
                factors.append(f"v[{index[s]}]" + (f"**{e}" if e > 1 else ""))
            parts.append("*".join(factors))
        body = " + ".join(parts) if parts else "0.0"
        return eval(f"lambda v: {body}")  # noqa: S307 - generated from numeric data only

    # -- printing ---------------------------------------------------------
    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        return sorted(self._terms.items(), key=lambda mc: (-_mono_degree(mc[0]), _mono_key(mc[0])))

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        pieces: list[str] = []
        for i, (m, c) in enumerate(self.sorted_terms()):
            sign = "-" if c < 0 else "+"
            a = abs(c)
            factors = [str(s) + (f"^{e}" if e > 1 else "") for s, e in m]
            if a != 1 or not factors:
                factors.insert(0, str(a))
            body = "*".join(factors)
            if i == 0:
                pieces.append(("-" if sign == "-" else "") + body)
            else:
                pieces.append(f" {sign} {body}")
        return "".join(pieces)

    def __repr__(self) -> str:
        return f"Poly({str(self)!r})"

    def to_latex(self) -> str:
        if not self._terms:
            return "0"
        pieces: list[str] = []
        for i, (m, c) in enumerate(self.sorted_terms()):
            a = abs(c)
            factors = [_latex_symbol(s) + (f"^{{{e}}}" if e > 1 else "") for s, e in m]
            if a.denominator != 1:
                coef = rf"\frac{{{a.numerator}}}{{{a.denominator}}}"
            else:
                coef = str(a.numerator)
            if a != 1 or not factors:
                factors.insert(0, coef)
            body = " ".join(factors)
            if i == 0:
                pieces.append(("-" if c < 0 else "") + body)
            else:
                pieces.append((" - " if c < 0 else " + ") + body)
        return "".join(pieces)


def _latex_symbol(s: Symbol) -> str:
    m = re.fullmatch(r"([A-Za-z]+)(\d*)", s.name)
    if m:
        head, idx = m.groups()
        base = head + (f"^{{{idx}}}" if idx else "")
    else:
        base = rf"\mathrm{{{s.name}}}"
    if s.jet_order:
        return rf"{base}_{{({s.jet_order})}}"
    return base


def const(c: Coeff) -> Poly:
    return Poly.const(c)


def var(s: Symbol) -> Poly:
    return Poly.var(s)


def total_derivative(p: Poly, max_order: int | None = None) -> Poly:
    """Total time derivative: every symbol ``s`` is sent to ``s.jet(1)``.

    Raises :class:`JetOverflow` when a symbol would exceed ``max_order``.
    """
    out: dict[Monomial, Fraction] = {}
    for m, c in p.items():
        for idx, (s, e) in enumerate(m):
            if max_order is not None and s.jet_order + 1 > max_order:
                raise JetOverflow(f"derivative of {s} exceeds jet order {max_order}")
            rest = dict(m[:idx] + m[idx + 1:])
            if e > 1:
                rest[s] = e - 1
            nxt = s.jet(1)
            rest[nxt] = rest.get(nxt, 0) + 1
            mono = tuple(sorted(rest.items(), key=lambda se: se[0].key))
            out[mono] = out.get(mono, 0) + c * e
    return Poly(out)


def weight_of(p: Poly, weights: Mapping[Symbol, object] | Callable[[Symbol], object] | None = None):
    """Common weight of all monomials of ``p``, or ``None`` if they differ.

    By default the symbol's own integer weight is used.  ``weights`` may map
    symbols to integers or to tuples (multi-gradings), which add
    componentwise.  The zero polynomial has no weight and returns ``None``.
    """
    if weights is None:
        lookup = lambda s: s.weight  # noqa: E731
    elif callable(weights) and not isinstance(weights, Mapping):
        lookup = weights
    else:
        table = weights

        def lookup(s: Symbol):
            if s not in table:
                raise MissingSymbol(f"no weight for {s}")
            return table[s]

    found = None
    for m, _ in p.items():
        w = None
        for s, e in m:
            ws = lookup(s)
            term = tuple(e * x for x in ws) if isinstance(ws, tuple) else e * ws
            w = term if w is None else _wadd(w, term)
        if w is None:
            w = _wzero(found) if found is not None else 0
        if found is None:
            found = w
        elif _wnorm(found) != _wnorm(w):
            return None
    return found


def _wadd(a, b):
    if isinstance(a, tuple):
        return tuple(x + y for x, y in zip(a, b))
    return a + b


def _wzero(like):
    return tuple(0 for _ in like) if isinstance(like, tuple) else 0


def _wnorm(w):
    if isinstance(w, tuple) and all(x == 0 for x in w):
        return 0
    return w


def is_homogeneous(p: Poly, weight, weights=None) -> bool:
    """True when every monomial of ``p`` has exactly the given weight."""
    if p.is_zero():
        return True
    w = weight_of(p, weights)
    return w is not None and _wnorm(w) == _wnorm(weight)


# -- parsing -------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<sym>[A-Za-z_][A-Za-z0-9_]*(?:\.d\d+)?)|(?P<op>[-+*^()/]))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    pos = 0
    out: list[tuple[str, str]] = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected input at {pos}: {text[pos:pos + 10]!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, tokens, resolve):
        self.toks = tokens
        self.i = 0
        self.resolve = resolve

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def expr(self) -> Poly:
        kind, val = self.peek()
        sign = 1
        if kind == "op" and val in "+-":
            self.take()
            sign = -1 if val == "-" else 1
        acc = self.term() * sign
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                t = self.term()
                acc = acc + t if val == "+" else acc - t
            else:
                return acc

    def term(self) -> Poly:
        acc = self.power()
        while True:
            kind, val = self.peek()
            if kind == "op" and val == "*":
                self.take()
                acc = acc * self.power()
            elif kind == "op" and val == "/":
                self.take()
                d = self.power()
                if not d.is_constant() or d.is_zero():
                    raise ParseError("division only by non-zero constants")
                acc = acc / d.constant_term()
            else:
                return acc

    def power(self) -> Poly:
        base = self.atom()
        kind, val = self.peek()
        if kind == "op" and val == "^":
            self.take()
            k, v = self.take()
            if k != "num" or "/" in v:
                raise ParseError("exponent must be a non-negative integer")
            return base ** int(v)
        return base

    def atom(self) -> Poly:
        kind, val = self.take()
        if kind == "num":
            return Poly.const(Fraction(val))
        if kind == "sym":
            return Poly.var(self.resolve(val))
        if kind == "op" and val == "(":
            inner = self.expr()
            k, v = self.take()
            if v != ")":
                raise ParseError("missing ')'")
            return inner
        if kind == "op" and val == "-":
            return -self.atom()
        raise ParseError(f"unexpected token {val!r}")


def parse_symbol(text: str, weights: Mapping[str, int] | None = None) -> Symbol:
    m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)(?:\.d(\d+))?", text.strip())
    if not m:
        raise ParseError(f"bad symbol {text!r}")
    name, jet = m.group(1), int(m.group(2) or 0)
    base_w = (weights or {}).get(name, 0)
    return Symbol(name, jet, base_w + jet)


def parse(text: str, symbols: Iterable[Symbol] | Mapping[str, int] | None = None) -> Poly:
    """Read a polynomial written in the text grammar.

    ``symbols`` either lists known :class:`Symbol` objects (to recover their
    weights) or maps base names to base weights.  Unknown names get weight
    equal to their jet order.
    """
    known: dict[str, Symbol] = {}
    base_weights: dict[str, int] = {}
    if isinstance(symbols, Mapping):
        base_weights = dict(symbols)
    elif symbols is not None:
        for s in symbols:
            known[str(s)] = s
            base_weights.setdefault(s.name, s.weight - s.jet_order)

    def resolve(tok: str) -> Symbol:
        if tok in known:
            return known[tok]
        return parse_symbol(tok, base_weights)

    toks = _tokenize(text)
    if not toks:
        raise ParseError("empty expression")
    parser = _Parser(toks, resolve)
    result = parser.expr()
    if parser.i != len(toks):
        raise ParseError(f"trailing input after token {parser.i}")
    return result


def symbols(names: str, weight: int = 0) -> list[Symbol]:
    """``symbols("x1 x2", 0)`` -> list of weight-0 symbols."""
    return [Symbol(n, 0, weight) for n in names.split()]


def jacobian(polys: Sequence[Poly], syms: Sequence[Symbol]) -> list[list[Poly]]:
    return [[p.diff(s) for s in syms] for p in polys]


def linear_coefficients(p: Poly, syms: Sequence[Symbol]) -> tuple[list[Poly], Poly]:
    """Split ``p = sum c_i s_i + rest`` with ``rest`` free of ``syms``.

    Requires ``p`` to be affine in ``syms``.
    """
    if p.degree_in(syms) > 1:
        raise ValueError("expression is not affine in the requested symbols")
    coeffs = [p.diff(s) for s in syms]
    rest = p.subs({s: 0 for s in syms})
    return coeffs, rest
