"""Atomic variables of the jet space over an N-dimensional metric.

Every atom is an interned :mod:`lievac.exprcore` variable whose payload is a
:class:`JetVar` (metric data, coordinates, constants, Christoffel atoms) or a
:class:`FuncAtom` (a derivative of an unknown function of ``x`` and ``g``).
Indices are 1-based everywhere.

Naming grammar (bit-exact, round-trippable)::

    g[1,2]  gi[1,2]  d[3]g[1,2]  dd[1,3]g[2,2]  ddd[1,2,3]g[1,1]  lam  x1
    Gam[1;2,3]                       Christoffel atom, last pair sorted
    H[2]  dH[2;x1]  dPhi[1,2;x1,g[1,1]]  PhiT[1,2]   functions of (x, g)
    f[1]  f1[1;x2]  f3[1;x1,x2,x2]  Ax[]  Ax1[;x2]  B2[1,2;x1,x1]
                                     functions of x only (prefix = order)
    A  c  ka ...                     plain constants
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

from .exprcore import ONE, REGISTRY, Expr, derive, var_payload

# functions of (x, all g), (x, own g only) or x only
FUNC_DEPS = {"H": "xg", "Phi": "xg", "PhiT": "xo", "f": "x", "h": "x", "Ax": "x", "B": "x"}
FUNC_ARITY = {"H": 1, "Phi": 2, "PhiT": 2, "f": 1, "h": 1, "Ax": 0, "B": 2}
FUNC_ORDER_CAP = {"f": 3, "h": 3}
DEFAULT_ORDER_CAP = 2


class DerivativeOrderError(ValueError):
    pass


class IndexRangeError(ValueError):
    pass


class InverseMode(Enum):
    FORMAL = "formal"
    EXACT = "exact"


class JetVar(NamedTuple):
    kind: str  # g gi d dd ddd lam x const Gam
    deriv: tuple = ()
    pair: tuple = ()
    name: str = ""


class FuncAtom(NamedTuple):
    func: str
    idx: tuple
    xs: tuple = ()
    gs: tuple = ()

    @property
    def order(self) -> int:
        return len(self.xs) + len(self.gs)


def _pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i <= j else (j, i)


def _idx_text(t) -> str:
    return ",".join(str(i) for i in t)


# --------------------------------------------------------------------------
# naming


def jet_name(v: JetVar) -> str:
    k = v.kind
    if k == "g":
        return f"g[{_idx_text(v.pair)}]"
    if k == "gi":
        return f"gi[{_idx_text(v.pair)}]"
    if k in ("d", "dd", "ddd"):
        return f"{k}[{_idx_text(v.deriv)}]g[{_idx_text(v.pair)}]"
    if k == "lam":
        return "lam"
    if k == "x":
        return f"x{v.deriv[0]}"
    if k == "Gam":
        return f"Gam[{v.deriv[0]};{_idx_text(v.pair)}]"
    if k == "const":
        return v.name
    raise ValueError(k)


def func_name(a: FuncAtom) -> str:
    idx = _idx_text(a.idx)
    if FUNC_DEPS[a.func] == "x":
        if not a.xs:
            return f"{a.func}[{idx}]"
        return f"{a.func}{len(a.xs)}[{idx};{','.join(f'x{i}' for i in a.xs)}]"
    if not a.xs and not a.gs:
        return f"{a.func}[{idx}]"
    derivs = [f"x{i}" for i in a.xs] + [f"g[{_idx_text(p)}]" for p in a.gs]
    return f"d{a.func}[{idx};{','.join(derivs)}]"


_KIND_RANK = {"lam": 0, "const": 1, "x": 2, "g": 3, "gi": 4, "d": 5, "dd": 6, "ddd": 7, "Gam": 8}


def _sort_key(payload) -> tuple:
    if isinstance(payload, FuncAtom):
        return (9, payload.func, payload.idx, payload.order, payload.xs, payload.gs)
    rank = _KIND_RANK[payload.kind]
    if payload.kind == "const":
        return (rank, payload.name)
    return (rank, payload.deriv, payload.pair)


_JET_RE = re.compile(r"^(g|gi)\[(\d+),(\d+)\]$")
_DER_RE = re.compile(r"^(d|dd|ddd)\[([\d,]+)\]g\[(\d+),(\d+)\]$")
_X_RE = re.compile(r"^x(\d+)$")
_GAM_RE = re.compile(r"^Gam\[(\d+);(\d+),(\d+)\]$")
_FUNC_RE = re.compile(r"^(d?)([A-Za-z]+?)(\d*)\[([\d,]*)(?:;(.*))?\]$")
_CONST_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_DERIV_ITEM = re.compile(r"x(\d+)|g\[(\d+),(\d+)\]")


def parse_name(name: str):
    """Structured payload for a grammar name, or ``None`` if not a jet name."""
    m = _JET_RE.match(name)
    if m:
        return JetVar(m.group(1), (), _pair(int(m.group(2)), int(m.group(3))))
    m = _DER_RE.match(name)
    if m:
        deriv = tuple(sorted(int(i) for i in m.group(2).split(",")))
        if len(deriv) != len(m.group(1)):
            return None
        return JetVar(m.group(1), deriv, _pair(int(m.group(3)), int(m.group(4))))
    if name == "lam":
        return JetVar("lam")
    m = _X_RE.match(name)
    if m:
        return JetVar("x", (int(m.group(1)),))
    m = _GAM_RE.match(name)
    if m:
        return JetVar("Gam", (int(m.group(1)),), _pair(int(m.group(2)), int(m.group(3))))
    if _CONST_RE.match(name):
        return JetVar("const", name=name)
    m = _FUNC_RE.match(name)
    if m:
        dflag, func, order, idx_text, derivs = m.groups()
        if func not in FUNC_DEPS:
            return None
        idx = tuple(int(i) for i in idx_text.split(",")) if idx_text else ()
        xs: list[int] = []
        gs: list[tuple] = []
        for item in _DERIV_ITEM.finditer(derivs or ""):
            if item.group(1):
                xs.append(int(item.group(1)))
            else:
                gs.append(_pair(int(item.group(2)), int(item.group(3))))
        atom = _canon_func(func, idx, xs, gs)
        # reject anything that does not print back identically
        if atom is None or func_name(atom) != name:
            return None
        return atom
    return None


def _resolve(name: str):
    payload = parse_name(name)
    if payload is None:
        return None
    return _sort_key(payload), payload


REGISTRY.resolvers.append(_resolve)


# --------------------------------------------------------------------------
# interning

_JET_IDS: dict[tuple, int] = {}
_FUNC_IDS: dict[FuncAtom, int] = {}


def jet_id(kind: str, deriv: tuple = (), pair: tuple = (), name: str = "") -> int:
    key = (kind, deriv, pair, name)
    vid = _JET_IDS.get(key)
    if vid is None:
        jv = JetVar(kind, deriv, pair, name)
        vid = REGISTRY.register(jet_name(jv), _sort_key(jv), jv)
        _JET_IDS[key] = vid
    return vid


def _canon_func(func: str, idx, xs, gs) -> FuncAtom | None:
    idx = tuple(idx)
    if len(idx) != FUNC_ARITY[func]:
        raise ValueError(f"{func} takes {FUNC_ARITY[func]} indices, got {idx}")
    if len(idx) == 2:
        idx = _pair(*idx)
    dep = FUNC_DEPS[func]
    gs = tuple(sorted(_pair(*p) for p in gs))
    if gs and dep == "x":
        return None
    if dep == "xo" and any(p != idx for p in gs):
        return None
    atom = FuncAtom(func, idx, tuple(sorted(xs)), gs)
    if atom.order > FUNC_ORDER_CAP.get(func, DEFAULT_ORDER_CAP):
        raise DerivativeOrderError(f"derivative order cap exceeded for {func_name(atom)}")
    return atom


def func_id(func: str, idx=(), xs=(), gs=()) -> int | None:
    """Interned id of a function-derivative atom; ``None`` if it is
    identically zero by the function's declared dependencies."""
    atom = _canon_func(func, idx, xs, gs)
    if atom is None:
        return None
    vid = _FUNC_IDS.get(atom)
    if vid is None:
        vid = REGISTRY.register(func_name(atom), _sort_key(atom), atom)
        _FUNC_IDS[atom] = vid
    return vid


def func(func_: str, idx=(), xs=(), gs=()) -> Expr:
    vid = func_id(func_, idx, xs, gs)
    return Expr() if vid is None else Expr.var(vid)


def const(name: str) -> Expr:
    return Expr.var(jet_id("const", name=name))


def payload(vid: int):
    return var_payload(vid)


# --------------------------------------------------------------------------
# context


@dataclass(frozen=True)
class MetricContext:
    dim: int
    inverse_mode: InverseMode = InverseMode.FORMAL
    registry: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ValueError("dimension must be at least 2")
        if not self.registry:
            ids = []
            for order in range(4):
                ids.extend(jet_id(v.kind, v.deriv, v.pair) for v in enumerate_vars(self, order))
            ids.append(jet_id("lam"))
            ids.extend(jet_id("gi", (), p) for p in self.pairs)
            object.__setattr__(self, "registry", tuple(ids))

    @property
    def indices(self) -> range:
        return range(1, self.dim + 1)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(i, j) for i in self.indices for j in self.indices if i <= j]

    def check(self, *idx: int) -> None:
        for i in idx:
            if not 1 <= i <= self.dim:
                raise IndexRangeError(f"index {i} outside [1..{self.dim}]")

    # atom constructors -------------------------------------------------
    def g(self, i: int, j: int) -> Expr:
        return Expr.var(jet_id("g", (), _pair(i, j)))

    def gi(self, i: int, j: int) -> Expr:
        return Expr.var(jet_id("gi", (), _pair(i, j)))

    def d(self, k: int, i: int, j: int) -> Expr:
        return Expr.var(jet_id("d", (k,), _pair(i, j)))

    def dd(self, k: int, l: int, i: int, j: int) -> Expr:
        return Expr.var(jet_id("dd", tuple(sorted((k, l))), _pair(i, j)))

    def ddd(self, k: int, l: int, m: int, i: int, j: int) -> Expr:
        return Expr.var(jet_id("ddd", tuple(sorted((k, l, m))), _pair(i, j)))

    def lam(self) -> Expr:
        return Expr.var(jet_id("lam"))

    def x(self, i: int) -> Expr:
        return Expr.var(jet_id("x", (i,)))

    def gamma_atom(self, l: int, m: int, n: int) -> Expr:
        return Expr.var(jet_id("Gam", (l,), _pair(m, n)))

    # atom id groups ------------------------------------------------------
    def metric_ids(self) -> list[int]:
        return [jet_id("g", (), p) for p in self.pairs]

    def inverse_ids(self) -> list[int]:
        return [jet_id("gi", (), p) for p in self.pairs]

    def d1_ids(self) -> list[int]:
        return [jet_id("d", (k,), p) for k in self.indices for p in self.pairs]

    def d2_ids(self) -> list[int]:
        return [jet_id("dd", kl, p) for kl in self.pairs for p in self.pairs]

    def d3_ids(self) -> list[int]:
        return [jet_id("ddd", t, p)
                for t in itertools.combinations_with_replacement(self.indices, 3)
                for p in self.pairs]


def canon(ctx: MetricContext, kind: str, raw) -> JetVar:
    """Canonical representative of a jet variable given raw index data.

    ``raw`` is ``(i, j)`` for g/gi, ``(k, (i, j))`` for d, ``((k, l), (i, j))``
    for dd and ``((k, l, m), (i, j))`` for ddd.
    """
    if kind in ("g", "gi"):
        ctx.check(*raw)
        return JetVar(kind, (), _pair(*raw))
    if kind == "d":
        k, p = raw
        ctx.check(k, *p)
        return JetVar("d", (k,), _pair(*p))
    if kind in ("dd", "ddd"):
        deriv, p = raw
        if len(deriv) != len(kind):
            raise ValueError(f"{kind} needs {len(kind)} derivative indices")
        ctx.check(*deriv, *p)
        return JetVar(kind, tuple(sorted(deriv)), _pair(*p))
    if kind == "lam":
        return JetVar("lam")
    raise ValueError(f"unknown jet kind {kind!r}")


def enumerate_vars(ctx: MetricContext, order: int) -> list[JetVar]:
    """All metric jet variables of the given derivative order (0..3)."""
    pairs = [(i, j) for i in range(1, ctx.dim + 1) for j in range(i, ctx.dim + 1)]
    if order == 0:
        return [JetVar("g", (), p) for p in pairs]
    kind = {1: "d", 2: "dd", 3: "ddd"}[order]
    derivs = itertools.combinations_with_replacement(range(1, ctx.dim + 1), order)
    return [JetVar(kind, t, p) for t in derivs for p in pairs]


# --------------------------------------------------------------------------
# X symbols


def kron(a: int, b: int) -> int:
    return 1 if a == b else 0


def x_symbol_upper(ctx: MetricContext, m: int, n: int, k: int, l: int) -> Expr:
    """Minus the derivative of the inverse-metric entry (m,n) with respect to
    the metric atom g[k,l]."""
    ctx.check(m, n, k, l)
    out = ctx.gi(m, k) * ctx.gi(n, l)
    if k != l:
        out = out + ctx.gi(m, l) * ctx.gi(n, k)
    return out


def x_mixed_value(m: int, n: int, k: int, l: int) -> int:
    if k != l:
        return kron(m, k) * kron(n, l) + kron(m, l) * kron(n, k)
    return kron(m, k) * kron(n, l)


def x_symbol_mixed(ctx: MetricContext, m: int, n: int, k: int, l: int) -> Expr:
    """Derivative of g[m,n] with respect to the independent atom g[k,l]."""
    ctx.check(m, n, k, l)
    return Expr.const(x_mixed_value(m, n, k, l))


def x_symbol_one_up(ctx: MetricContext, a: int, c: int, k: int, l: int) -> Expr:
    """X with first index lowered and second raised: gi[c,s] X_{a s}^{k l}."""
    ctx.check(a, c, k, l)
    out = Expr()
    if a == k:
        out = out + ctx.gi(c, l)
    if k != l and a == l:
        out = out + ctx.gi(c, k)
    return out


def g_cap_symbol(ctx: MetricContext, r: int, s: int) -> Expr:
    ctx.check(r, s)
    return ctx.gi(r, s) if r == s else 2 * ctx.gi(r, s)


# --------------------------------------------------------------------------
# explicit partial derivatives


_PX_CACHE: dict[tuple[int, int], Expr | None] = {}
_PG_CACHE: dict[tuple[int, tuple], Expr | None] = {}


def _px_image(vid: int, a: int) -> Expr | None:
    key = (vid, a)
    if key in _PX_CACHE:
        return _PX_CACHE[key]
    p = var_payload(vid)
    out = None
    if isinstance(p, FuncAtom):
        out = func(p.func, p.idx, p.xs + (a,), p.gs) or None
    elif isinstance(p, JetVar) and p.kind == "x" and p.deriv[0] == a:
        out = ONE
    _PX_CACHE[key] = out
    return out


def _pg_image(vid: int, pair: tuple) -> Expr | None:
    key = (vid, pair)
    if key in _PG_CACHE:
        return _PG_CACHE[key]
    p = var_payload(vid)
    out = None
    if isinstance(p, FuncAtom):
        out = func(p.func, p.idx, p.xs, p.gs + (pair,)) or None
    elif isinstance(p, JetVar):
        if p.kind == "g" and p.pair == pair:
            out = ONE
        elif p.kind == "gi":
            a, b = p.pair
            k, l = pair
            x = Expr.var(jet_id("gi", (), _pair(a, k))) * Expr.var(jet_id("gi", (), _pair(b, l)))
            if k != l:
                x = x + Expr.var(jet_id("gi", (), _pair(a, l))) * Expr.var(jet_id("gi", (), _pair(b, k)))
            out = -x
    _PG_CACHE[key] = out
    return out


def partial_x(p: Expr, a: int) -> Expr:
    """Explicit derivative in the coordinate x^a (jet atoms are constant)."""
    return derive(p, lambda v: _px_image(v, a))


def partial_g(p: Expr, i: int, j: int) -> Expr:
    """Derivative with respect to the independent metric atom g[i,j],
    including the dependence of inverse-metric atoms on it."""
    pair = _pair(i, j)
    return derive(p, lambda v: _pg_image(v, pair))


def partial_g_formal(p: Expr, i: int, j: int) -> Expr:
    """Like :func:`partial_g` but holding inverse-metric atoms fixed."""
    pair = _pair(i, j)

    def image(v):
        q = var_payload(v)
        if isinstance(q, JetVar) and q.kind == "gi":
            return None
        return _pg_image(v, pair)

    return derive(p, image)


def func_atoms(p: Expr) -> set[int]:
    return {v for v in p.variables() if isinstance(var_payload(v), FuncAtom)}


def jet_kind(vid: int) -> str:
    q = var_payload(vid)
    if isinstance(q, FuncAtom):
        return "func"
    if isinstance(q, JetVar):
        return q.kind
    return "other"
