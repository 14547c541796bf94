"""Christoffel symbols, Ricci tensor, vacuum field equations and the
closed-form partial derivatives of the Ricci tensor on jet space."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .exprcore import Accumulator, Expr, FracExpr, ZERO, coefficient_of, formal_diff, substitute
from .jetspace import (
    MetricContext,
    jet_id,
    jet_kind,
    kron,
    payload,
    x_mixed_value,
    x_symbol_upper,
)

HALF = Expr.const("1/2")


@dataclass(frozen=True)
class EinsteinSystem:
    ctx: MetricContext
    delta: dict  # (a, b) with a <= b -> Expr

    def __getitem__(self, ab: tuple[int, int]) -> Expr:
        a, b = ab
        return self.delta[(a, b) if a <= b else (b, a)]


def christoffel(ctx: MetricContext, t: int, c: int, a: int) -> Expr:
    """Christoffel symbol of the first kind, symmetric in its last two slots."""
    ctx.check(t, c, a)
    return _christoffel(ctx.dim, t, c, a)


@lru_cache(maxsize=None)
def _christoffel(dim: int, t: int, c: int, a: int) -> Expr:
    ctx = MetricContext(dim)
    return HALF * (ctx.d(a, t, c) + ctx.d(c, t, a) - ctx.d(t, c, a))


def ricci(ctx: MetricContext, a: int, b: int) -> Expr:
    ctx.check(a, b)
    if a > b:
        a, b = b, a
    return _ricci(ctx.dim, a, b)


@lru_cache(maxsize=None)
def _ricci(dim: int, a: int, b: int) -> Expr:
    ctx = MetricContext(dim)
    idx = ctx.indices
    acc = Accumulator()
    half = HALF.constant_value()
    for c in idx:
        for d in idx:
            second = -ctx.dd(c, d, a, b) - ctx.dd(a, b, c, d) + ctx.dd(b, d, a, c) + ctx.dd(a, c, d, b)
            acc.add_product(ctx.gi(c, d), second, half)
    gam = {(t, c, e): _christoffel(dim, t, c, e) for t in idx for c in idx for e in idx}
    for c in idx:
        for d in idx:
            gcd = ctx.gi(c, d)
            for t in idx:
                for r in idx:
                    quad = gam[t, c, a] * gam[r, d, b] - gam[t, c, d] * gam[r, a, b]
                    if quad:
                        acc.add_product(gcd * ctx.gi(t, r), quad)
    return acc.result()


def einstein_delta(ctx: MetricContext, a: int, b: int) -> Expr:
    return ricci(ctx, a, b) - ctx.lam() * ctx.g(a, b)


def einstein_system(ctx: MetricContext) -> EinsteinSystem:
    return EinsteinSystem(ctx, {(a, b): einstein_delta(ctx, a, b) for a, b in ctx.pairs})


# --------------------------------------------------------------------------
# exact inverse and identities modulo g^{-1} g = 1


def _det(m: list[list[Expr]]) -> Expr:
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    acc = Accumulator()
    for j in range(n):
        if not m[0][j]:
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        acc.add_product(m[0][j], _det(minor), -1 if j % 2 else 1)
    return acc.result()


@lru_cache(maxsize=None)
def metric_determinant(dim: int) -> Expr:
    ctx = MetricContext(dim)
    return _det([[ctx.g(i, j) for j in ctx.indices] for i in ctx.indices])


@lru_cache(maxsize=None)
def _adjugate(dim: int) -> dict:
    ctx = MetricContext(dim)
    mat = [[ctx.g(i, j) for j in ctx.indices] for i in ctx.indices]
    out = {}
    for i, j in ctx.pairs:
        # cofactor C_{ji}; the metric is symmetric so adj is too
        minor = [row[:i - 1] + row[i:] for k, row in enumerate(mat) if k != j - 1]
        sign = -1 if (i + j) % 2 else 1
        out[(i, j)] = _det(minor) * sign if dim > 1 else Expr.const(1)
    return out


def exact_inverse(ctx: MetricContext) -> dict:
    """``{(i, j): FracExpr}`` for i <= j: adjugate entries over det(g)."""
    det = metric_determinant(ctx.dim)
    return {p: FracExpr(e, 1, det) for p, e in _adjugate(ctx.dim).items()}


def inverse_substitution(ctx: MetricContext) -> dict:
    return {jet_id("gi", (), p): f for p, f in exact_inverse(ctx).items()}


def reduce_mod_inverse(expr: Expr, ctx: MetricContext) -> FracExpr:
    """Replace every inverse-metric atom by its adjugate/determinant form."""
    return substitute(expr, inverse_substitution(ctx))


def is_zero_mod_inverse(expr: Expr, ctx: MetricContext) -> bool:
    if expr.is_zero():
        return True
    return reduce_mod_inverse(expr, ctx).is_zero()


# --------------------------------------------------------------------------
# closed-form partial derivatives of the Ricci tensor


def _xm(m: int, n: int, k: int, l: int) -> int:
    return x_mixed_value(m, n, k, l)


def dricci_d2(ctx: MetricContext, a: int, b: int, k: int, l: int, m: int, n: int) -> Expr:
    """Closed form of dR_ab / d(dd[k,l]g[m,n])."""
    ctx.check(a, b, k, l, m, n)
    acc = Accumulator()
    for c in ctx.indices:
        for d in ctx.indices:
            w = (-_xm(c, d, k, l) * _xm(a, b, m, n) - _xm(a, b, k, l) * _xm(c, d, m, n)
                 + _xm(d, b, k, l) * _xm(c, a, m, n) + _xm(c, a, k, l) * _xm(d, b, m, n))
            if w:
                acc.add(ctx.gi(c, d), w)
    return HALF * acc.result()


def dricci_d1(ctx: MetricContext, a: int, b: int, k: int, m: int, n: int) -> Expr:
    """Closed form of dR_ab / d(d[k]g[m,n])."""
    ctx.check(a, b, k, m, n)
    idx = ctx.indices
    acc = Accumulator()

    def bracket(p, q, r):
        # [d^k_p X_{q r} + d^k_r X_{q p} - d^k_q X_{r p}] with X lowered on (m, n)
        return kron(p, k) * _xm(q, r, m, n) + kron(r, k) * _xm(q, p, m, n) - kron(q, k) * _xm(r, p, m, n)

    for c in idx:
        for d in idx:
            for t in idx:
                for r in idx:
                    inner = Accumulator()
                    w1 = bracket(a, t, c)
                    if w1:
                        inner.add(christoffel(ctx, r, d, b), w1)
                    w2 = bracket(b, r, d)
                    if w2:
                        inner.add(christoffel(ctx, t, c, a), w2)
                    w3 = bracket(d, t, c)
                    if w3:
                        inner.add(christoffel(ctx, r, a, b), -w3)
                    w4 = bracket(b, r, a)
                    if w4:
                        inner.add(christoffel(ctx, t, c, d), -w4)
                    e = inner.result()
                    if e:
                        acc.add_product(ctx.gi(c, d) * ctx.gi(t, r), e)
    return HALF * acc.result()


def dricci_d0(ctx: MetricContext, a: int, b: int, m: int, n: int) -> Expr:
    """Closed form of dR_ab / dg[m,n] (inverse-metric dependence included)."""
    ctx.check(a, b, m, n)
    idx = ctx.indices
    acc = Accumulator()
    for c in idx:
        for d in idx:
            second = ctx.dd(c, d, a, b) + ctx.dd(a, b, c, d) - ctx.dd(d, b, c, a) - ctx.dd(c, a, d, b)
            acc.add_product(second, x_symbol_upper(ctx, c, d, m, n), HALF.constant_value())
    for c in idx:
        for d in idx:
            for t in idx:
                for r in idx:
                    quad = (christoffel(ctx, t, c, a) * christoffel(ctx, r, d, b)
                            - christoffel(ctx, t, c, d) * christoffel(ctx, r, a, b))
                    if not quad:
                        continue
                    weight = ctx.gi(c, d) * x_symbol_upper(ctx, t, r, m, n) + ctx.gi(t, r) * x_symbol_upper(ctx, c, d, m, n)
                    acc.add_product(quad, weight, -1)
    return acc.result()


def dricci_d0_chain(ctx: MetricContext, a: int, b: int, m: int, n: int) -> Expr:
    """Chain-rule oracle: formal derivative in g[m,n] plus the inverse-metric
    atoms' dependence on g[m,n]."""
    r = ricci(ctx, a, b)
    out = formal_diff(r, jet_id("g", (), (min(m, n), max(m, n))))
    acc = Accumulator()
    acc.add(out)
    for p, q in ctx.pairs:
        dr = formal_diff(r, jet_id("gi", (), (p, q)))
        if dr:
            acc.add_product(dr, x_symbol_upper(ctx, p, q, m, n), -1)
    return acc.result()


# --------------------------------------------------------------------------
# second-derivative atoms absent from the Ricci tensor


def absent_atoms(ctx: MetricContext) -> dict[str, list[int]]:
    """The two absent shapes, keyed by name, over ordered (rho, sigma).

    ``repeated``: dd[s,s]g[r,s]   (second derivative twice along s of g_rs)
    ``diagonal``: dd[r,s]g[s,s]   (any second derivative of g_ss involving s)
    Off-diagonal instances (r != s) come first in each list; the r == s atoms
    dd[s,s]g[s,s] are shared by both shapes.
    """
    rep, diag, both = [], [], []
    for r in ctx.indices:
        for s in ctx.indices:
            if r == s:
                both.append(jet_id("dd", (s, s), (s, s)))
                continue
            rep.append(jet_id("dd", (s, s), (min(r, s), max(r, s))))
            diag.append(jet_id("dd", tuple(sorted((r, s))), (s, s)))
    return {"repeated": rep, "diagonal": diag, "coincident": both}


def check_absent_derivatives(ctx: MetricContext) -> dict:
    shapes = absent_atoms(ctx)
    offending = []
    checked = set()
    for atoms in shapes.values():
        checked.update(atoms)
    for a, b in ctx.pairs:
        groups = coefficient_of(ricci(ctx, a, b), checked)
        for mono in groups:
            if mono:
                offending.append({"alpha": a, "beta": b,
                                  "atom": [payload(v) for v, _ in mono]})
    return {
        "dim": ctx.dim,
        "off_diagonal_instances": len(shapes["repeated"]) + len(shapes["diagonal"]),
        "distinct_atoms": len(checked),
        "shapes_checked": sorted(shapes),
        "offending": offending,
        "ok": not offending,
    }


def d2_atoms_in(expr: Expr) -> set[int]:
    return {v for v in expr.variables() if jet_kind(v) == "dd"}


def einstein_tensor_2d_residual(ctx: MetricContext, a: int, b: int) -> Expr:
    """R_ab - 1/2 g_ab g^{cd} R_cd; vanishes identically when N = 2."""
    acc = Accumulator()
    acc.add(ricci(ctx, a, b))
    trace = Accumulator()
    for c in ctx.indices:
        for d in ctx.indices:
            trace.add_product(ctx.gi(c, d), ricci(ctx, c, d))
    acc.add_product(ctx.g(a, b), trace.result(), HALF.constant_value() * -1)
    return acc.result()


__all__ = [
    "EinsteinSystem", "christoffel", "ricci", "einstein_delta", "einstein_system",
    "metric_determinant", "exact_inverse", "reduce_mod_inverse", "is_zero_mod_inverse",
    "dricci_d2", "dricci_d1", "dricci_d0", "dricci_d0_chain", "absent_atoms",
    "check_absent_derivatives", "einstein_tensor_2d_residual", "ZERO",
]
