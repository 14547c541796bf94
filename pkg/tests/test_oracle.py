from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import VIDS, exprs
from lievac.exprcore import Rational
from lievac.geometry import christoffel
from lievac.jetspace import MetricContext, jet_id
from lievac.oracle import (
    DET_BOUND,
    _det,
    eval_at,
    exact_rank,
    sample,
    sample_for,
    vanishes_on_samples,
)


def _matrix(ctx, pt, kind):
    return [[pt[jet_id(kind, (), (min(i, j), max(i, j)))] for j in ctx.indices] for i in ctx.indices]


def test_sampling_is_deterministic():
    ctx = MetricContext(3)
    e = christoffel(ctx, 1, 2, 3)
    assert sample_for(ctx, 7, e).values == sample_for(ctx, 7, e).values
    assert sample_for(ctx, 7, e).values != sample_for(ctx, 8, e).values


def test_values_do_not_depend_on_requested_set():
    ctx = MetricContext(2)
    a, b = jet_id("d", (1,), (1, 2)), jet_id("dd", (1, 2), (2, 2))
    assert sample(ctx, 3, [a])[a] == sample(ctx, 3, [a, b])[a]


def test_metric_block_is_nondegenerate_with_exact_inverse():
    for n in (2, 3, 4):
        ctx = MetricContext(n)
        for seed in range(20):
            pt = sample(ctx, seed)
            g, gi = _matrix(ctx, pt, "g"), _matrix(ctx, pt, "gi")
            assert abs(_det(g)) >= DET_BOUND
            for i in range(n):
                for j in range(n):
                    assert sum((g[i][k] * gi[k][j] for k in range(n)), Rational(0)) == int(i == j)


def test_eval_examples():
    ctx = MetricContext(2)
    pt = sample(ctx, 0)
    g11 = pt[jet_id("g", (), (1, 1))]
    assert eval_at(ctx.g(1, 1) ** 2 + 1, pt) == g11 * g11 + 1
    assert vanishes_on_samples(ctx.g(1, 1) - ctx.g(1, 1), ctx, range(5)) == []
    assert vanishes_on_samples(ctx.g(1, 1), ctx, range(3)) == [s for s in range(3) if sample(ctx, s)[jet_id("g", (), (1, 1))]]


def test_exact_rank_examples():
    r = [Rational(x) for x in (1, 2, 3)]
    assert exact_rank([r, [2 * x for x in r]]) == 1
    assert exact_rank([[Rational(1), Rational(0)], [Rational(0), Rational(1)]]) == 2
    assert exact_rank([]) == 0


@settings(max_examples=200, deadline=None)
@given(exprs(), exprs(), st.integers(0, 10**6))
def test_evaluation_homomorphism_at_samples(a, b, seed):
    ctx = MetricContext(2)
    pt = sample(ctx, seed, VIDS)
    assert eval_at(a * b, pt) == eval_at(a, pt) * eval_at(b, pt)
    assert eval_at(a + b, pt) == eval_at(a, pt) + eval_at(b, pt)
