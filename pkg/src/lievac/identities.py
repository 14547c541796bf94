"""Catalog of symbolically certified zeros for the numeric oracle.

Each target yields ``(label, lhs, rhs)`` triples with ``lhs == rhs`` certified
symbolically (modulo the inverse-metric relation). The oracle evaluates both
sides separately at random exact rational points; any difference exposes a
kernel bug.
"""

from __future__ import annotations

from typing import Callable, Iterator

from .determining import dg_ddg_closed_form, extract_dg_ddg
from .exprcore import ZERO, Expr, formal_diff
from .geometry import (
    HALF,
    christoffel,
    dricci_d0,
    dricci_d0_chain,
    dricci_d1,
    dricci_d2,
    einstein_tensor_2d_residual,
    ricci,
)
from .jetspace import MetricContext, const, jet_id, kron, x_symbol_mixed
from .liealg import gct_sides, scaling_residuals
from .oracle import eval_at, sample_for
from .prolongation import (
    generic_field,
    phi_first,
    phi_first_total,
    phi_second,
    phi_second_total,
    prolong_direct_einstein,
    prolong_einstein_component,
)

Identity = tuple[str, Expr, Expr]  # label, lhs, rhs


def ricci_identities(ctx: MetricContext) -> Iterator[Identity]:
    I = ctx.indices
    for t in I:
        for c in I:
            for a in I:
                yield (f"christoffel-sum[{t},{c},{a}]",
                       christoffel(ctx, t, c, a) + christoffel(ctx, c, t, a), ctx.d(a, t, c))
    for m in I:
        for l in I:
            e = sum((ctx.gi(m, k) * ctx.g(k, l) for k in I), ZERO)
            yield (f"inverse[{m},{l}]", e, Expr.const(kron(m, l)))
    # symmetric-array collapse: sum over m <= n of A_mn X_cd^mn = A_cd
    A = {p: const(f"A{p[0]}{p[1]}") for p in ctx.pairs}
    for c, d in ctx.pairs:
        e = sum((A[p] * x_symbol_mixed(ctx, c, d, *p) for p in ctx.pairs), ZERO)
        yield (f"symmetric-collapse[{c},{d}]", e, A[(c, d)])
    if ctx.dim == 2:
        for a, b in ctx.pairs:
            yield (f"einstein-2d[{a},{b}]", einstein_tensor_2d_residual(ctx, a, b), ZERO)


def dricci_identities(ctx: MetricContext) -> Iterator[Identity]:
    I = ctx.indices
    for a, b in ctx.pairs:
        r = ricci(ctx, a, b)
        for m, n in ctx.pairs:
            yield (f"dricci-d0[{a},{b};{m},{n}]", dricci_d0(ctx, a, b, m, n), dricci_d0_chain(ctx, a, b, m, n))
            for k in I:
                yield (f"dricci-d1[{a},{b};{k};{m},{n}]",
                       dricci_d1(ctx, a, b, k, m, n), formal_diff(r, jet_id("d", (k,), (m, n))))
                for l in I:
                    if l < k:
                        continue
                    yield (f"dricci-d2[{a},{b};{k},{l};{m},{n}]",
                           dricci_d2(ctx, a, b, k, l, m, n), formal_diff(r, jet_id("dd", (k, l), (m, n))))


def prolong_route_identities(ctx: MetricContext) -> Iterator[Identity]:
    vf = generic_field(ctx)
    I = ctx.indices
    for t, c in ctx.pairs:
        for a in I:
            yield (f"phi-first[{t},{c};{a}]", phi_first(vf, t, c, a), phi_first_total(vf, t, c, a))
    for a, b in ctx.pairs:
        for c in I:
            for d in I:
                if d < c:
                    continue
                yield (f"phi-second[{a},{b};{c},{d}]", phi_second(vf, a, b, c, d), phi_second_total(vf, a, b, c, d))
    for a, b in ctx.pairs:
        yield (f"prolong-routes[{a},{b}]", prolong_einstein_component(vf, a, b), prolong_direct_einstein(vf, a, b))


def prolong_gct_identities(ctx: MetricContext) -> Iterator[Identity]:
    for a, b in ctx.pairs:
        yield (f"gct[{a},{b}]", *gct_sides(ctx, a, b))


def prolong_scaling_identities(ctx: MetricContext) -> Iterator[Identity]:
    for a, b in ctx.pairs:
        r, d = scaling_residuals(ctx, a, b)
        d = d - ctx.lam() * const("A") * ctx.g(a, b)
        yield (f"scaling-ricci[{a},{b}]", r, ZERO)
        yield (f"scaling-delta[{a},{b}]", d, -ctx.lam() * const("A") * ctx.g(a, b))


def determining_identities(ctx: MetricContext) -> Iterator[Identity]:
    for c in extract_dg_ddg(ctx, keep_zero=True):
        a, b, g, m, n, r, s = c.indices
        yield (f"dg-ddg[{a},{b},{g};{m},{n};{r},{s}]", c.expr, HALF * dg_ddg_closed_form(ctx, a, b, g, (m, n), r, s))


TARGETS: dict[str, Callable[[MetricContext], Iterator[Identity]]] = {
    "ricci": ricci_identities,
    "dricci": dricci_identities,
    "prolong-gct": prolong_gct_identities,
    "prolong-scaling": prolong_scaling_identities,
    "prolong-routes": prolong_route_identities,
    "determining": determining_identities,
}


def check_identity(ctx: MetricContext, label: str, lhs: Expr, rhs: Expr, seeds) -> dict:
    failed = []
    for s in seeds:
        pt = sample_for(ctx, s, lhs, rhs)
        if eval_at(lhs, pt) != eval_at(rhs, pt):
            failed.append(s)
    return {"label": label, "terms": [len(lhs), len(rhs)], "samples": len(seeds), "failed_seeds": failed}


def run_target(ctx: MetricContext, target: str, seeds) -> dict:
    seeds = list(seeds)
    rows = [check_identity(ctx, label, lhs, rhs, seeds) for label, lhs, rhs in TARGETS[target](ctx)]
    bad = [r["label"] for r in rows if r["failed_seeds"]]
    return {"dim": ctx.dim, "target": target, "identities": len(rows), "samples": len(seeds),
            "seeds": [seeds[0], seeds[-1]] if seeds else [], "failures": bad,
            "results": rows, "ok": not bad}
