"""Generator vector fields on (x, g) space and their second prolongation.

A :class:`VectorField` stores ``H^mu`` and the symmetric ``Phi_(mu nu)`` as
expressions. Generic (unknown) fields carry function atoms ``H[.]``/``Phi[.,.]``;
concrete fields carry ordinary jet expressions. The first and second
prolongation coefficients are available both in expanded closed form
(:func:`phi_first`, :func:`phi_second`) and through repeated total
derivatives (:func:`phi_first_total`, :func:`phi_second_total`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .exprcore import ONE, Accumulator, Expr, ZERO, derive, formal_diff, var_payload
from .geometry import HALF, christoffel, einstein_delta
from .jetspace import (
    FUNC_DEPS,
    FuncAtom,
    JetVar,
    MetricContext,
    func,
    jet_id,
    partial_g,
    partial_x,
)

_HALF = HALF.constant_value()


class ProlongationError(RuntimeError):
    pass


@dataclass(frozen=True)
class VectorField:
    ctx: MetricContext
    H: tuple  # H[mu - 1]
    Phi: dict  # (mu, nu), mu <= nu -> Expr
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.H) != self.ctx.dim:
            raise ValueError("H needs one component per coordinate")
        missing = set(self.ctx.pairs) - set(self.Phi)
        if missing:
            raise ValueError(f"Phi is missing components {sorted(missing)}")

    def h(self, mu: int) -> Expr:
        return self.H[mu - 1]

    def phi(self, mu: int, nu: int) -> Expr:
        return self.Phi[(mu, nu) if mu <= nu else (nu, mu)]

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.ctx, tuple(a + b for a, b in zip(self.H, other.H)),
                           {p: self.Phi[p] + other.Phi[p] for p in self.ctx.pairs})

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self + other.scaled(-1)

    def scaled(self, c) -> "VectorField":
        return VectorField(self.ctx, tuple(h * c for h in self.H),
                           {p: e * c for p, e in self.Phi.items()})

    def is_vertical(self) -> bool:
        return all(h.is_zero() for h in self.H)

    def is_zero(self) -> bool:
        return self.is_vertical() and all(e.is_zero() for e in self.Phi.values())

    def to_json(self) -> dict:
        return {
            "H": [h.to_json() for h in self.H],
            "Phi": {f"{a},{b}": self.Phi[(a, b)].to_json() for a, b in self.ctx.pairs},
        }


def make_field(ctx: MetricContext, H, Phi) -> VectorField:
    phi = {}
    for (a, b), e in dict(Phi).items():
        phi[(a, b) if a <= b else (b, a)] = e
    for p in ctx.pairs:
        phi.setdefault(p, ZERO)
    return VectorField(ctx, tuple(H), phi)


def generic_field(ctx: MetricContext) -> VectorField:
    """Unknown generator: H^mu and Phi_(mu nu) arbitrary functions of (x, g)."""
    return VectorField(ctx, tuple(func("H", (m,)) for m in ctx.indices),
                       {p: func("Phi", p) for p in ctx.pairs})


def zero_field(ctx: MetricContext) -> VectorField:
    return make_field(ctx, [ZERO] * ctx.dim, {})


# --------------------------------------------------------------------------
# total derivative


def _total_image(ctx: MetricContext, alpha: int):
    def image(v: int) -> Expr | None:
        p = var_payload(v)
        if isinstance(p, JetVar):
            k = p.kind
            if k == "g":
                return ctx.d(alpha, *p.pair)
            if k == "d":
                return ctx.dd(alpha, p.deriv[0], *p.pair)
            if k == "dd":
                return ctx.ddd(alpha, *p.deriv, *p.pair)
            if k == "ddd":
                raise ProlongationError("total derivative of a third-order atom is not supported")
            if k == "gi":
                a, b = p.pair
                acc = Accumulator()
                for kk in ctx.indices:
                    for ll in ctx.indices:
                        acc.add_product(ctx.gi(a, kk) * ctx.gi(ll, b), ctx.d(alpha, kk, ll), -1)
                return acc.result()
            if k == "x":
                return ONE if p.deriv[0] == alpha else None
            return None
        if isinstance(p, FuncAtom):
            dep = FUNC_DEPS[p.func]
            acc = Accumulator()
            acc.add(func(p.func, p.idx, p.xs + (alpha,), p.gs))
            if dep == "xg":
                for pair in ctx.pairs:
                    acc.add_product(ctx.d(alpha, *pair), func(p.func, p.idx, p.xs, p.gs + (pair,)))
            elif dep == "xo":
                acc.add_product(ctx.d(alpha, *p.idx), func(p.func, p.idx, p.xs, p.gs + (p.idx,)))
            return acc.result()
        return None

    return image


def total_derivative(ctx: MetricContext, p: Expr, alpha: int) -> Expr:
    """Total derivative D_alpha on jet space (may create third-order atoms)."""
    ctx.check(alpha)
    return derive(p, _total_image(ctx, alpha))


# --------------------------------------------------------------------------
# memoized partials of the field coefficients


def _coef(vf: VectorField, base: tuple) -> Expr:
    if base[0] == "H":
        return vf.h(base[1])
    return vf.phi(*base[1])


def _dpart(vf: VectorField, base: tuple, *ops: tuple) -> Expr:
    """Explicit partial derivatives of a field coefficient.

    ``base`` is ``("H", eta)`` or ``("Phi", (m, n))``; each op is ``("x", a)``
    or ``("g", (i, j))``. Partials commute, so the op list is sorted for the
    memo key.
    """
    key = (base, tuple(sorted(ops)))
    hit = vf._memo.get(key)
    if hit is not None:
        return hit
    if not ops:
        out = _coef(vf, base)
    else:
        ops_sorted = key[1]
        prev = _dpart(vf, base, *ops_sorted[:-1])
        kind, arg = ops_sorted[-1]
        out = partial_x(prev, arg) if kind == "x" else partial_g(prev, *arg)
    vf._memo[key] = out
    return out


def _H(vf, eta, *ops):
    return _dpart(vf, ("H", eta), *ops)


def _P(vf, m, n, *ops):
    return _dpart(vf, ("Phi", (m, n) if m <= n else (n, m)), *ops)


def _x(a):
    return ("x", a)


def _g(p):
    return ("g", p)


# --------------------------------------------------------------------------
# prolongation coefficients


def phi_first(vf: VectorField, t: int, c: int, a: int) -> Expr:
    """Coefficient of d/d(d[a]g[t,c]) in the first prolongation, expanded."""
    key = ("phi1", min(t, c), max(t, c), a)
    hit = vf._memo.get(key)
    if hit is not None:
        return hit
    ctx = vf.ctx
    ctx.check(t, c, a)
    acc = Accumulator()
    acc.add(_P(vf, t, c, _x(a)))
    for eta in ctx.indices:
        acc.add_product(ctx.d(eta, t, c), _H(vf, eta, _x(a)), -1)
    for pair in ctx.pairs:
        da = ctx.d(a, *pair)
        acc.add_product(da, _P(vf, t, c, _g(pair)))
        for eta in ctx.indices:
            hg = _H(vf, eta, _g(pair))
            if hg:
                acc.add_product(da * ctx.d(eta, t, c), hg, -1)
    out = acc.result()
    vf._memo[key] = out
    return out


def phi_first_total(vf: VectorField, t: int, c: int, a: int) -> Expr:
    """Same coefficient via D_a(Phi_tc - H^e d[e]g[t,c]) + H^e dd[a,e]g[t,c]."""
    ctx = vf.ctx
    q = _characteristic(vf, t, c)
    acc = Accumulator()
    acc.add(total_derivative(ctx, q, a))
    for eta in ctx.indices:
        acc.add_product(vf.h(eta), ctx.dd(a, eta, t, c))
    return acc.result()


def _characteristic(vf: VectorField, t: int, c: int) -> Expr:
    ctx = vf.ctx
    acc = Accumulator()
    acc.add(vf.phi(t, c))
    for eta in ctx.indices:
        acc.add_product(vf.h(eta), ctx.d(eta, t, c), -1)
    return acc.result()


def phi_second(vf: VectorField, a: int, b: int, c: int, d: int) -> Expr:
    """Coefficient of d/d(dd[c,d]g[a,b]) in the second prolongation, expanded."""
    key = ("phi2", min(a, b), max(a, b), min(c, d), max(c, d))
    hit = vf._memo.get(key)
    if hit is not None:
        return hit
    ctx = vf.ctx
    ctx.check(a, b, c, d)
    idx = ctx.indices
    pairs = ctx.pairs
    acc = Accumulator()
    acc.add(_P(vf, a, b, _x(c), _x(d)))
    for eta in idx:
        acc.add_product(ctx.d(eta, a, b), _H(vf, eta, _x(c), _x(d)), -1)
    for mn in pairs:
        dc = ctx.d(c, *mn)
        ddl = ctx.d(d, *mn)
        acc.add_product(ddl, _P(vf, a, b, _x(c), _g(mn)))
        acc.add_product(dc, _P(vf, a, b, _x(d), _g(mn)))
        acc.add_product(ctx.dd(c, d, *mn), _P(vf, a, b, _g(mn)))
        for eta in idx:
            deab = ctx.d(eta, a, b)
            hgd = _H(vf, eta, _x(d), _g(mn))
            if hgd:
                acc.add_product(dc * deab, hgd, -1)
            hgc = _H(vf, eta, _x(c), _g(mn))
            if hgc:
                acc.add_product(ddl * deab, hgc, -1)
            hg = _H(vf, eta, _g(mn))
            if hg:
                acc.add_product(dc * ctx.dd(d, eta, a, b), hg, -1)
                acc.add_product(ddl * ctx.dd(c, eta, a, b), hg, -1)
                acc.add_product(deab * ctx.dd(d, c, *mn), hg, -1)
        for ps in pairs:
            dcd = dc * ctx.d(d, *ps)
            acc.add_product(dcd, _P(vf, a, b, _g(mn), _g(ps)))
            for eta in idx:
                hgg = _H(vf, eta, _g(mn), _g(ps))
                if hgg:
                    acc.add_product(dcd * ctx.d(eta, a, b), hgg, -1)
    for eta in idx:
        acc.add_product(ctx.dd(d, eta, a, b), _H(vf, eta, _x(c)), -1)
        acc.add_product(ctx.dd(c, eta, a, b), _H(vf, eta, _x(d)), -1)
    out = acc.result()
    vf._memo[key] = out
    return out


def phi_second_total(vf: VectorField, a: int, b: int, c: int, d: int) -> Expr:
    """Same coefficient via D_c D_d(Phi_ab - H^e d[e]g[a,b]) + H^e ddd[c,d,e]g[a,b];
    every third-order atom must cancel."""
    ctx = vf.ctx
    q = _characteristic(vf, a, b)
    inner = total_derivative(ctx, q, d)
    # D_c of the third-order-free first stage; D_c(dd) produces ddd atoms
    acc = Accumulator()
    acc.add(total_derivative(ctx, inner, c))
    for eta in idx_range(ctx):
        acc.add_product(vf.h(eta), ctx.ddd(c, d, eta, a, b))
    out = acc.result()
    leftover = [v for v in out.variables()
                if isinstance(var_payload(v), JetVar) and var_payload(v).kind == "ddd"]
    if leftover:
        raise ProlongationError(f"third-order atoms survived: {len(leftover)}")
    return out


def idx_range(ctx: MetricContext) -> range:
    return ctx.indices


# --------------------------------------------------------------------------
# action on the vacuum field equations


def raised_phi(vf: VectorField) -> dict:
    """Phi with both indices raised by the inverse-metric atoms."""
    hit = vf._memo.get("raised")
    if hit is not None:
        return hit
    ctx = vf.ctx
    out = {}
    for c, d in ctx.pairs:
        acc = Accumulator()
        for k in ctx.indices:
            for l in ctx.indices:
                e = vf.phi(k, l)
                if e:
                    acc.add_product(ctx.gi(c, k) * ctx.gi(d, l), e)
        out[(c, d)] = acc.result()
    vf._memo["raised"] = out
    return out


def prolong_einstein_component(vf: VectorField, a: int, b: int) -> Expr:
    """pr(2) v applied to R_ab - lam g_ab, assembled with unrestricted sums."""
    ctx = vf.ctx
    ctx.check(a, b)
    idx = ctx.indices
    up = raised_phi(vf)

    def U(c, d):
        return up[(c, d) if c <= d else (d, c)]

    def G(t, c, e):
        return christoffel(ctx, t, c, e)

    P1 = lambda t, c, e: phi_first(vf, t, c, e)  # noqa: E731
    P2 = lambda p, q, r, s: phi_second(vf, p, q, r, s)  # noqa: E731

    acc = Accumulator()
    acc.add_product(ctx.lam(), vf.phi(a, b), -1)
    for c in idx:
        for d in idx:
            second = ctx.dd(c, d, a, b) + ctx.dd(a, b, c, d) - ctx.dd(d, b, c, a) - ctx.dd(c, a, d, b)
            acc.add_product(U(c, d), second, _HALF)

    for c in idx:
        for d in idx:
            gcd = ctx.gi(c, d)
            for t in idx:
                for r in idx:
                    quad = G(t, c, a) * G(r, d, b) - G(t, c, d) * G(r, a, b)
                    if not quad:
                        continue
                    w = gcd * U(t, r) + ctx.gi(t, r) * U(c, d)
                    acc.add_product(quad, w, -1)

    def B1(t, c, e):
        return P1(t, c, e) + P1(t, e, c) - P1(c, e, t)

    for c in idx:
        for d in idx:
            for t in idx:
                for r in idx:
                    w = ctx.gi(c, d) * ctx.gi(t, r)
                    inner = (B1(t, c, a) * G(r, d, b) + B1(r, d, b) * G(t, c, a)
                             - B1(t, c, d) * G(r, a, b) - B1(r, a, b) * G(t, c, d))
                    acc.add_product(w, inner, _HALF)

    for c in idx:
        for d in idx:
            inner = -P2(a, b, c, d) - P2(c, d, a, b) + P2(c, a, d, b) + P2(d, b, c, a)
            acc.add_product(ctx.gi(c, d), inner, _HALF)
    return acc.result()


@dataclass(frozen=True)
class ProlongedAction:
    ctx: MetricContext
    components: dict  # (a, b), a <= b -> Expr

    def __getitem__(self, ab):
        a, b = ab
        return self.components[(a, b) if a <= b else (b, a)]


def prolong_einstein(vf: VectorField, components=None) -> ProlongedAction:
    pairs = list(components) if components is not None else vf.ctx.pairs
    out = {}
    for a, b in pairs:
        key = (min(a, b), max(a, b))
        out[key] = prolong_einstein_component(vf, *key)
    return ProlongedAction(vf.ctx, out)


def prolong_direct(vf: VectorField, target: Expr) -> Expr:
    """pr(2) v applied term by term to a target over jet atoms of order <= 2."""
    ctx = vf.ctx
    acc = Accumulator()
    for mu in ctx.indices:
        h = vf.h(mu)
        if h:
            acc.add_product(h, partial_x(target, mu))
    for pair in ctx.pairs:
        e = vf.phi(*pair)
        if e:
            acc.add_product(e, partial_g(target, *pair))
    for v in sorted(target.variables()):
        p = var_payload(v)
        if not isinstance(p, JetVar):
            continue
        if p.kind == "d":
            acc.add_product(phi_first(vf, *p.pair, p.deriv[0]), formal_diff(target, v))
        elif p.kind == "dd":
            acc.add_product(phi_second(vf, *p.pair, *p.deriv), formal_diff(target, v))
        elif p.kind == "ddd":
            raise ProlongationError("target contains third-order atoms")
    return acc.result()


def prolong_direct_einstein(vf: VectorField, a: int, b: int) -> Expr:
    return prolong_direct(vf, einstein_delta(vf.ctx, a, b))
