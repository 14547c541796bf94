"""Exact-rational sparse multivariate polynomials.

Variables are interned in a process-wide registry: each distinct name gets a
small integer id (used internally for fast monomial arithmetic) and a sort key
(used for every externally visible ordering). A monomial is a tuple of
``(var_id, exponent)`` pairs sorted by id; an :class:`Expr` maps monomials to
nonzero ``gmpy2.mpq`` coefficients.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import gmpy2

Rational = gmpy2.mpq
Monomial = tuple  # tuple[tuple[int, int], ...]

_ZERO = Rational(0)
_ONE = Rational(1)


def rational(value) -> Rational:
    """Coerce int, Fraction, mpq or a ``"p/q"`` string to an exact rational."""
    if isinstance(value, str):
        return Rational(Fraction(value.strip()))
    if isinstance(value, Fraction):
        return Rational(value.numerator, value.denominator)
    if isinstance(value, float):
        raise TypeError("floating point values are not allowed in exact expressions")
    return Rational(value)


def format_rational(c: Rational) -> str:
    c = Rational(c)
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


# --------------------------------------------------------------------------
# variable registry


class Registry:
    """Append-only name <-> id table; thread safe for registration."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._ids: dict[str, int] = {}
        self.names: list[str] = []
        self.keys: list[tuple] = []
        self.payloads: list[object] = []
        self.resolvers: list[Callable[[str], tuple | None]] = []

    def register(self, name: str, key: tuple | None = None, payload: object = None) -> int:
        vid = self._ids.get(name)
        if vid is not None:
            return vid
        with self._lock:
            vid = self._ids.get(name)
            if vid is not None:
                return vid
            vid = len(self.names)
            self.names.append(name)
            self.keys.append(key if key is not None else (99, name))
            self.payloads.append(payload)
            self._ids[name] = vid
            return vid

    def lookup(self, name: str) -> int:
        """Id for ``name``, registering it through the resolvers if new."""
        vid = self._ids.get(name)
        if vid is not None:
            return vid
        for resolve in self.resolvers:
            hit = resolve(name)
            if hit is not None:
                key, payload = hit
                return self.register(name, key, payload)
        if not _PLAIN_NAME.match(name):
            raise ValueError(f"unparseable variable name {name!r}")
        return self.register(name)

    def __contains__(self, name: str) -> bool:
        return name in self._ids


_PLAIN_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

REGISTRY = Registry()


def var_id(name: str) -> int:
    return REGISTRY.lookup(name)


def var_name(vid: int) -> str:
    return REGISTRY.names[vid]


def var_key(vid: int) -> tuple:
    return REGISTRY.keys[vid]


def var_payload(vid: int):
    return REGISTRY.payloads[vid]


# --------------------------------------------------------------------------
# monomials


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    if a[-1][0] < b[0][0]:
        return a + b
    if b[-1][0] < a[0][0]:
        return b + a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def mono_sort_key(m: Monomial) -> tuple:
    """Graded lexicographic: higher degree first, then earlier variables with
    larger exponents first."""
    factors = sorted((var_key(v), -e) for v, e in m)
    return (-mono_degree(m), factors)


# --------------------------------------------------------------------------
# expressions


class Expr:
    """Immutable canonical polynomial. Equality is term-map identity."""

    __slots__ = ("_t", "_h")

    def __init__(self, terms: dict | None = None) -> None:
        self._t: dict = terms if terms is not None else {}
        self._h: int | None = None

    # construction -------------------------------------------------------
    @classmethod
    def const(cls, c) -> "Expr":
        c = rational(c)
        return cls({(): c}) if c else cls()

    @classmethod
    def var(cls, v: int | str, exponent: int = 1) -> "Expr":
        if isinstance(v, str):
            v = var_id(v)
        return cls({((v, exponent),): _ONE})

    @classmethod
    def from_terms(cls, pairs: Iterable[tuple[Monomial, object]]) -> "Expr":
        acc = Accumulator()
        for m, c in pairs:
            acc.add_term(tuple(sorted(m)), rational(c))
        return acc.result()

    # inspection ---------------------------------------------------------
    @property
    def terms(self) -> Mapping:
        return self._t

    def items(self):
        return self._t.items()

    def __len__(self) -> int:
        return len(self._t)

    def __bool__(self) -> bool:
        return bool(self._t)

    def is_zero(self) -> bool:
        return not self._t

    def is_constant(self) -> bool:
        return not self._t or (len(self._t) == 1 and () in self._t)

    def constant_value(self) -> Rational:
        return self._t.get((), _ZERO)

    def variables(self) -> set[int]:
        out: set[int] = set()
        for m in self._t:
            for v, _ in m:
                out.add(v)
        return out

    def degree(self) -> int:
        return max((mono_degree(m) for m in self._t), default=0)

    def __eq__(self, other) -> bool:
        if isinstance(other, Expr):
            return self._t == other._t
        if isinstance(other, (int, Fraction)) or type(other) is type(_ONE):
            return self._t == Expr.const(other)._t
        return NotImplemented

    def __hash__(self) -> int:
        if self._h is None:
            self._h = hash(frozenset(self._t.items()))
        return self._h

    # arithmetic ---------------------------------------------------------
    def __add__(self, other) -> "Expr":
        return add(self, _coerce(other))

    __radd__ = __add__

    def __sub__(self, other) -> "Expr":
        return add(self, _coerce(other), -1)

    def __rsub__(self, other) -> "Expr":
        return add(_coerce(other), self, -1)

    def __neg__(self) -> "Expr":
        return Expr({m: -c for m, c in self._t.items()})

    def __mul__(self, other) -> "Expr":
        if isinstance(other, Expr):
            return mul(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Expr":
        if isinstance(other, Expr):
            raise TypeError("polynomial division is not supported")
        return scale(self, 1 / rational(other))

    def __pow__(self, n: int) -> "Expr":
        if n < 0:
            raise ValueError("negative powers are not polynomial")
        out = Expr.const(1)
        base = self
        while n:
            if n & 1:
                out = mul(out, base)
            n >>= 1
            if n:
                base = mul(base, base)
        return out

    # serialization ------------------------------------------------------
    def sorted_terms(self) -> list[tuple[Monomial, Rational]]:
        return sorted(self._t.items(), key=lambda mc: mono_sort_key(mc[0]))

    def to_text(self) -> str:
        return to_text(self)

    def to_json(self) -> list:
        return to_json(self)

    def __str__(self) -> str:
        return to_text(self)

    def __repr__(self) -> str:
        text = to_text(self)
        if len(text) > 200:
            text = text[:200] + " ..."
        return f"Expr({text})"


ZERO = Expr()
ONE = Expr.const(1)


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return Expr.const(x)


class Accumulator:
    """Mutable sum used in hot loops; call :meth:`result` once."""

    __slots__ = ("_d",)

    def __init__(self) -> None:
        self._d: dict = {}

    def add_term(self, m: Monomial, c) -> None:
        d = self._d
        d[m] = d.get(m, _ZERO) + c

    def add(self, e: Expr, factor=_ONE, mono: Monomial = ()) -> None:
        d = self._d
        if mono:
            for m, c in e._t.items():
                k = mono_mul(m, mono)
                d[k] = d.get(k, _ZERO) + c * factor
        else:
            for m, c in e._t.items():
                d[m] = d.get(m, _ZERO) + c * factor

    def add_product(self, a: Expr, b: Expr, factor=_ONE) -> None:
        d = self._d
        bt = b._t.items()
        for ma, ca in a._t.items():
            cf = ca * factor
            for mb, cb in bt:
                k = mono_mul(ma, mb)
                d[k] = d.get(k, _ZERO) + cf * cb

    def result(self) -> Expr:
        return Expr({m: c for m, c in self._d.items() if c})


def add(a: Expr, b: Expr, factor=1) -> Expr:
    """``a + factor*b`` in canonical form."""
    if not b._t:
        return a
    if not a._t and factor == 1:
        return b
    d = dict(a._t)
    f = rational(factor)
    for m, c in b._t.items():
        s = d.get(m, _ZERO) + c * f
        if s:
            d[m] = s
        else:
            d.pop(m, None)
    return Expr(d)


def scale(a: Expr, factor) -> Expr:
    f = rational(factor)
    if not f:
        return ZERO
    return Expr({m: c * f for m, c in a._t.items()})


def mul(a: Expr, b: Expr) -> Expr:
    if not a._t or not b._t:
        return ZERO
    if len(a._t) > len(b._t):
        a, b = b, a
    acc = Accumulator()
    acc.add_product(a, b)
    return acc.result()


def sum_exprs(items: Iterable[Expr]) -> Expr:
    acc = Accumulator()
    for e in items:
        acc.add(e)
    return acc.result()


def formal_diff(p: Expr, v: int | str) -> Expr:
    """Partial derivative treating every other variable as constant."""
    if isinstance(v, str):
        v = var_id(v)
    d: dict = {}
    for m, c in p._t.items():
        for i, (w, e) in enumerate(m):
            if w == v:
                rest = m[:i] + ((v, e - 1),) + m[i + 1:] if e > 1 else m[:i] + m[i + 1:]
                d[rest] = d.get(rest, _ZERO) + c * e
                break
    return Expr({m: c for m, c in d.items() if c})


def derive(p: Expr, image: Callable[[int], Expr | None]) -> Expr:
    """Apply the derivation sending each variable ``v`` to ``image(v)``.

    ``image`` returns ``None`` for variables annihilated by the derivation.
    Images are memoized for the duration of the call.
    """
    cache: dict[int, Expr | None] = {}
    acc = Accumulator()
    for m, c in p._t.items():
        for i, (v, e) in enumerate(m):
            if v in cache:
                img = cache[v]
            else:
                img = image(v)
                if img is not None and not img._t:
                    img = None
                cache[v] = img
            if img is None:
                continue
            rest = m[:i] + ((v, e - 1),) + m[i + 1:] if e > 1 else m[:i] + m[i + 1:]
            acc.add(img, c * e, rest)
    return acc.result()


def coefficient_of(p: Expr, selected: Iterable[int]) -> dict[Monomial, Expr]:
    """Group ``p`` by its monomial in the selected variables.

    Returns ``{selected_monomial: coefficient}`` with coefficients free of the
    selected variables; ``sum(mono * coeff)`` reproduces ``p``.
    """
    sel = frozenset(selected)
    groups: dict[Monomial, dict] = {}
    for m, c in p._t.items():
        inside = tuple(f for f in m if f[0] in sel)
        outside = tuple(f for f in m if f[0] not in sel)
        groups.setdefault(inside, {})[outside] = c
    return {k: Expr(v) for k, v in groups.items()}


def reassemble(groups: Mapping[Monomial, Expr]) -> Expr:
    acc = Accumulator()
    for mono, coeff in groups.items():
        acc.add(coeff, _ONE, mono)
    return acc.result()


def mono_expr(m: Monomial) -> Expr:
    return Expr({m: _ONE})


# --------------------------------------------------------------------------
# fractions with a fixed base denominator


@dataclass(frozen=True)
class FracExpr:
    """``num / base**den_power``; ``base`` is ``None`` when no denominator is
    in play (then ``den_power`` must be 0)."""

    num: Expr
    den_power: int = 0
    base: Expr | None = None

    def __post_init__(self) -> None:
        if self.den_power < 0:
            raise ValueError("den_power must be nonnegative")
        if self.den_power and self.base is None:
            raise ValueError("nonzero den_power requires a base denominator")

    @classmethod
    def of(cls, e: Expr, base: Expr | None = None) -> "FracExpr":
        return cls(e, 0, base)

    def raised_to(self, k: int) -> Expr:
        """Numerator over ``base**k`` (``k >= den_power``)."""
        if k == self.den_power:
            return self.num
        if k < self.den_power:
            raise ValueError("cannot lower the denominator power")
        return mul(self.num, _base_power(self.base, k - self.den_power))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __mul__(self, other: "FracExpr") -> "FracExpr":
        base = _common_base(self, other)
        return FracExpr(mul(self.num, other.num), self.den_power + other.den_power, base)

    def __add__(self, other: "FracExpr") -> "FracExpr":
        base = _common_base(self, other)
        k = max(self.den_power, other.den_power)
        tmp_a = FracExpr(self.num, self.den_power, base)
        tmp_b = FracExpr(other.num, other.den_power, base)
        return FracExpr(add(tmp_a.raised_to(k), tmp_b.raised_to(k)), k, base)

    def __neg__(self) -> "FracExpr":
        return FracExpr(-self.num, self.den_power, self.base)

    def __sub__(self, other: "FracExpr") -> "FracExpr":
        return self + (-other)

    def equals(self, other: "FracExpr") -> bool:
        base = _common_base(self, other)
        k = max(self.den_power, other.den_power)
        return (FracExpr(self.num, self.den_power, base).raised_to(k)
                == FracExpr(other.num, other.den_power, base).raised_to(k))


_POW_CACHE: dict[tuple[int, int], Expr] = {}


def _base_power(base: Expr, k: int) -> Expr:
    key = (id(base), k)
    hit = _POW_CACHE.get(key)
    if hit is not None and hit[0] is base:
        return hit[1]
    value = base ** k
    _POW_CACHE[key] = (base, value)
    return value


def _common_base(a: FracExpr, b: FracExpr) -> Expr | None:
    if a.base is None:
        return b.base
    if b.base is None or b.base is a.base or b.base == a.base:
        return a.base
    raise ValueError("FracExpr operands have different base denominators")


def is_zero(p: Expr | FracExpr) -> bool:
    return p.is_zero()


def substitute(p: Expr, mapping: Mapping[int, Expr | FracExpr]) -> FracExpr:
    """Simultaneous substitution of variables by expressions or fractions.

    All fractional images must share one base. The result carries the
    smallest denominator power that clears every term.
    """
    if not mapping:
        return FracExpr(p)
    images: dict[int, FracExpr] = {}
    base = None
    for v, img in mapping.items():
        if isinstance(v, str):
            v = var_id(v)
        if isinstance(img, Expr):
            img = FracExpr(img)
        elif not isinstance(img, FracExpr):
            img = FracExpr(Expr.const(img))
        if img.base is not None:
            if base is None:
                base = img.base
            elif img.base is not base and img.base != base:
                raise ValueError("substitution images use different denominators")
        images[v] = img

    # group by the substituted part of each monomial so shared products are
    # expanded once
    grouped: dict[Monomial, dict] = {}
    for m, c in p._t.items():
        hit = tuple(f for f in m if f[0] in images)
        rest = tuple(f for f in m if f[0] not in images)
        grouped.setdefault(hit, {})[rest] = c

    products: dict[Monomial, tuple[Expr, int]] = {}
    power_cache: dict[tuple[int, int], Expr] = {}
    kmax = 0
    for hit in grouped:
        num = ONE
        k = 0
        for v, e in hit:
            img = images[v]
            pk = power_cache.get((v, e))
            if pk is None:
                pk = img.num ** e
                power_cache[(v, e)] = pk
            num = mul(num, pk)
            k += img.den_power * e
        products[hit] = (num, k)
        kmax = max(kmax, k)

    acc = Accumulator()
    for hit, rest_terms in grouped.items():
        num, k = products[hit]
        if not num._t:
            continue
        if k < kmax:
            num = mul(num, _base_power(base, kmax - k))
        rest = Expr(rest_terms)
        acc.add_product(rest, num)
    return FracExpr(acc.result(), kmax, base if kmax else None)


def substitute_expr(p: Expr, mapping: Mapping[int, Expr]) -> Expr:
    """Polynomial-only substitution (no denominators)."""
    out = substitute(p, mapping)
    if out.den_power:
        raise ValueError("substitution introduced a denominator")
    return out.num


def proportionality(a: Expr, b: Expr) -> Rational | None:
    """Return ``c`` with ``a == c*b`` exactly, or ``None``."""
    if not b._t:
        return _ONE if not a._t else None
    if len(a._t) != len(b._t):
        return None
    m0, c0 = next(iter(b._t.items()))
    ca = a._t.get(m0)
    if ca is None:
        return None
    ratio = ca / c0
    for m, c in b._t.items():
        if a._t.get(m) != c * ratio:
            return None
    return ratio


# --------------------------------------------------------------------------
# serialization


def to_text(p: Expr) -> str:
    if not p._t:
        return "0"
    parts = []
    for m, c in p.sorted_terms():
        factors = [format_rational(c)]
        for v, e in sorted(m, key=lambda f: var_key(f[0])):
            name = var_name(v)
            factors.append(name if e == 1 else f"{name}^{e}")
        parts.append("*".join(factors))
    return " + ".join(parts)


_COEFF = re.compile(r"^-?\d+(/\d+)?$")


def from_text(text: str) -> Expr:
    text = text.strip()
    if text == "0" or not text:
        return ZERO
    acc = Accumulator()
    for term in text.split(" + "):
        tokens = term.split("*")
        if not _COEFF.match(tokens[0]):
            raise ValueError(f"term {term!r} does not start with a rational coefficient")
        c = rational(tokens[0])
        factors: dict[int, int] = {}
        for tok in tokens[1:]:
            name, exp = tok, 1
            if "^" in tok:
                name, _, e = tok.rpartition("^")
                exp = int(e)
            vid = var_id(name)
            factors[vid] = factors.get(vid, 0) + exp
        acc.add_term(tuple(sorted(factors.items())), c)
    return acc.result()


def to_json(p: Expr) -> list:
    out = []
    for m, c in p.sorted_terms():
        mono = [[var_name(v), e] for v, e in sorted(m, key=lambda f: var_key(f[0]))]
        out.append({"monomial": mono, "coeff": format_rational(c)})
    return out


def from_json(data: list | str) -> Expr:
    if isinstance(data, str):
        data = json.loads(data)
    acc = Accumulator()
    for entry in data:
        factors: dict[int, int] = {}
        for name, e in entry["monomial"]:
            vid = var_id(name)
            factors[vid] = factors.get(vid, 0) + int(e)
        acc.add_term(tuple(sorted(factors.items())), rational(entry["coeff"]))
    return acc.result()


def evaluate(p: Expr, values: Mapping[int, Rational]) -> Rational:
    """Exact value of ``p`` at a point; every variable must be assigned."""
    total = _ZERO
    for m, c in p._t.items():
        t = c
        for v, e in m:
            t *= values[v] ** e if e > 1 else values[v]
        total += t
    return total
