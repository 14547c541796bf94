from __future__ import annotations

import pytest

from lievac.identities import TARGETS, check_identity, run_target
from lievac.jetspace import MetricContext


@pytest.mark.parametrize("target", sorted(TARGETS))
def test_targets_pass_on_a_few_seeds_n2(target):
    rep = run_target(MetricContext(2), target, range(5))
    assert rep["ok"], rep["failures"]
    assert rep["identities"] > 0 and rep["samples"] == 5


def test_check_identity_detects_a_wrong_identity():
    ctx = MetricContext(2)
    rep = check_identity(ctx, "wrong", ctx.g(1, 1) * ctx.gi(1, 1), ctx.g(1, 1) * 0 + 1, range(10))
    assert rep["failed_seeds"]


@pytest.mark.parametrize("target", sorted(TARGETS))
def test_targets_are_not_vacuous(target):
    # both sides are evaluated separately; a good share have nonzero sides
    items = list(TARGETS[target](MetricContext(2)))
    nontrivial = [label for label, lhs, rhs in items if not (lhs.is_zero() and rhs.is_zero())]
    assert len(nontrivial) * 2 >= len(items)
    assert len({label for label, _, _ in items}) == len(items)
