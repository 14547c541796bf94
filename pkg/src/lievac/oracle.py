"""Exact evaluation at random rational points.

Symbolic identities are cross-checked by evaluating both sides at points
drawn from a small rational pool. Arithmetic is exact, so a certified zero
must evaluate to exactly zero.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Iterable

from .exprcore import Expr, FracExpr, Rational, evaluate, formal_diff, var_name, var_payload
from .jetspace import JetVar, MetricContext, jet_id

POOL_HEIGHT = 20
DET_BOUND = Rational(1, 100)
MAX_ATTEMPTS = 1000


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class PointAssignment:
    ctx: MetricContext
    seed: int
    values: dict  # var id -> Rational

    def __getitem__(self, v: int) -> Rational:
        return self.values[v]


def _draw(rng: random.Random) -> Rational:
    num = rng.randint(-POOL_HEIGHT, POOL_HEIGHT)
    den = rng.randint(1, POOL_HEIGHT)
    return Rational(num, den)


def _det(m: list[list[Rational]]) -> Rational:
    m = [row[:] for row in m]
    n = len(m)
    det = Rational(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Rational(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        for r in range(col + 1, n):
            f = m[r][col] / m[col][col]
            if f:
                for c in range(col, n):
                    m[r][c] -= f * m[col][c]
    return det


def _inverse(m: list[list[Rational]]) -> list[list[Rational]]:
    n = len(m)
    aug = [row[:] + [Rational(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def sample(ctx: MetricContext, seed: int, variables: Iterable[int] = ()) -> PointAssignment:
    """Deterministic point for ``seed``.

    The metric block is resampled until ``|det g| >= 1/100``; inverse-metric
    atoms get the exact matrix inverse. Every other variable draws from its own
    stream keyed by ``(seed, name)``, so its value does not depend on which
    other variables were requested.
    """
    idx = list(ctx.indices)
    n = ctx.dim
    rng = random.Random(f"metric|{n}|{seed}")
    for _ in range(MAX_ATTEMPTS):
        mat = [[Rational(0)] * n for _ in idx]
        for i, j in ctx.pairs:
            mat[i - 1][j - 1] = mat[j - 1][i - 1] = _draw(rng)
        det = _det(mat)
        if abs(det) >= DET_BOUND:
            break
    else:
        raise SamplingError("could not draw a nondegenerate metric")
    inv = _inverse(mat)
    values: dict[int, Rational] = {}
    for i, j in ctx.pairs:
        values[jet_id("g", (), (i, j))] = mat[i - 1][j - 1]
        values[jet_id("gi", (), (i, j))] = inv[i - 1][j - 1]
    for v in variables:
        if v in values:
            continue
        p = var_payload(v)
        if isinstance(p, JetVar) and p.kind in ("g", "gi"):
            continue  # outside the metric block (index beyond dim)
        values[v] = _draw(random.Random(f"{seed}|{var_name(v)}"))
    return PointAssignment(ctx, seed, values)


def sample_for(ctx: MetricContext, seed: int, *exprs: Expr | FracExpr) -> PointAssignment:
    vs: set[int] = set()
    for e in exprs:
        if isinstance(e, FracExpr):
            vs |= e.num.variables()
            if e.base is not None:
                vs |= e.base.variables()
        else:
            vs |= e.variables()
    return sample(ctx, seed, vs)


def eval_at(p: Expr | FracExpr, pt: PointAssignment) -> Rational:
    if isinstance(p, FracExpr):
        num = evaluate(p.num, pt.values)
        if not p.den_power:
            return num
        den = evaluate(p.base, pt.values) ** p.den_power
        if den == 0:
            raise ZeroDivisionError("denominator vanishes at the sample point")
        return num / den
    return evaluate(p, pt.values)


def vanishes_on_samples(p: Expr | FracExpr, ctx: MetricContext, seeds: Iterable[int]) -> list[int]:
    """Seeds at which ``p`` does not evaluate to zero (empty list = pass)."""
    failed = []
    for s in seeds:
        if eval_at(p, sample_for(ctx, s, p)) != 0:
            failed.append(s)
    return failed


def diff_oracle(builder: Callable[[], Expr], var: int, pt: PointAssignment) -> Rational:
    """Value at ``pt`` of the formal derivative of the built expression."""
    return eval_at(formal_diff(builder(), var), pt)


def exact_rank(rows: list[list[Rational]]) -> int:
    m = [list(r) for r in rows if any(r)]
    if not m:
        return 0
    ncol = len(m[0])
    rank = 0
    for col in range(ncol):
        piv = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        p = m[rank][col]
        for r in range(len(m)):
            if r != rank and m[r][col]:
                f = m[r][col] / p
                m[r] = [x - f * y for x, y in zip(m[r], m[rank])]
        rank += 1
        if rank == len(m):
            break
    return rank


def rank_at_point(forms: list[dict], unknowns: list[int], pt: PointAssignment) -> int:
    """Rank of a linear system whose rows map unknown ids to coefficient Exprs."""
    rows = []
    for form in forms:
        rows.append([eval_at(form[u], pt) if u in form else Rational(0) for u in unknowns])
    return exact_rank(rows)


__all__ = [
    "PointAssignment", "SamplingError", "sample", "sample_for", "eval_at", "vanishes_on_samples",
    "diff_oracle", "exact_rank", "rank_at_point", "POOL_HEIGHT", "DET_BOUND",
]
