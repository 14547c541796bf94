from __future__ import annotations

import pytest

from lievac.exprcore import ZERO, Expr, var_payload
from lievac.geometry import is_zero_mod_inverse
from lievac.jetspace import JetVar, MetricContext, const, func, jet_id
from lievac.liealg import gct_generator, gct_sides, scaling_generator
from lievac.oracle import eval_at, sample_for
from lievac.prolongation import (
    ProlongationError,
    generic_field,
    make_field,
    phi_first,
    phi_first_total,
    phi_second,
    phi_second_total,
    prolong_direct,
    prolong_direct_einstein,
    prolong_einstein,
    prolong_einstein_component,
    total_derivative,
    zero_field,
)


@pytest.fixture(scope="module")
def ctx2():
    return MetricContext(2)


def test_total_derivative_examples(ctx2):
    c = ctx2
    assert total_derivative(c, c.x(1), 1) == Expr.const(1)
    assert total_derivative(c, c.x(1), 2).is_zero()
    assert total_derivative(c, c.g(1, 2), 1) == c.d(1, 1, 2)
    assert total_derivative(c, c.d(2, 1, 1), 1) == c.dd(1, 2, 1, 1)
    # chain rule through the metric argument of an unknown function
    h = func("H", (1,))
    expect = func("H", (1,), (2,))
    for p in c.pairs:
        expect = expect + func("H", (1,), (), (p,)) * c.d(2, *p)
    assert total_derivative(c, h, 2) == expect


def test_total_derivative_leibniz(ctx2):
    c = ctx2
    p, q = c.g(1, 1) * c.x(2), c.d(1, 1, 2) + c.g(2, 2)
    assert total_derivative(c, p * q, 1) == p * total_derivative(c, q, 1) + q * total_derivative(c, p, 1)


def test_phi_first_vertical_coordinate_only(ctx2):
    c = ctx2
    vf = make_field(c, [ZERO, ZERO], {(1, 2): c.x(1) ** 2 * c.x(2)})
    assert phi_first(vf, 1, 2, 1) == 2 * c.x(1) * c.x(2)
    assert phi_first(vf, 2, 1, 2) == c.x(1) ** 2
    assert phi_first(vf, 1, 1, 1).is_zero()


def test_phi_first_generic_shape(ctx2):
    vf = generic_field(ctx2)
    e = phi_first(vf, 1, 1, 2)
    assert func("Phi", (1, 1), (2,)) in [Expr.var(v) for v in e.variables()]
    kinds = {var_payload(v).kind for v in e.variables() if isinstance(var_payload(v), JetVar)}
    assert kinds <= {"g", "d"}


@pytest.mark.parametrize("n", [2, 3])
def test_scaling_prolongation(n):
    ctx = MetricContext(n)
    vf = scaling_generator(ctx)
    A = const("A")
    for t, c in ctx.pairs:
        for a in ctx.indices:
            assert phi_first(vf, t, c, a) == A * ctx.d(a, t, c)
        for k, l in ctx.pairs:
            assert phi_second(vf, t, c, k, l) == A * ctx.dd(k, l, t, c)


def test_zero_field_prolongs_to_zero(ctx2):
    vf = zero_field(ctx2)
    assert phi_first(vf, 1, 2, 1).is_zero()
    assert phi_second(vf, 1, 2, 1, 2).is_zero()
    assert all(e.is_zero() for e in prolong_einstein(vf).components.values())


@pytest.mark.parametrize("n", [2, 3])
def test_phi_second_index_symmetries(n):
    ctx = MetricContext(n)
    vf = generic_field(ctx)
    I = ctx.indices
    for a in I:
        for b in I:
            for c in I:
                for d in I:
                    base = phi_second(vf, a, b, c, d)
                    assert phi_second(vf, b, a, c, d) == base
                    assert phi_second(vf, a, b, d, c) == base


@pytest.mark.parametrize("n", [2, 3])
def test_first_order_routes_agree(n):
    ctx = MetricContext(n)
    vf = generic_field(ctx)
    for t, c in ctx.pairs:
        for a in ctx.indices:
            assert phi_first(vf, t, c, a) == phi_first_total(vf, t, c, a)


def test_second_order_routes_agree_n2(ctx2):
    vf = generic_field(ctx2)
    for a, b in ctx2.pairs:
        for c, d in ctx2.pairs:
            assert phi_second(vf, a, b, c, d) == phi_second_total(vf, a, b, c, d)


def test_second_order_routes_agree_n3_sample():
    ctx = MetricContext(3)
    vf = generic_field(ctx)
    for idx in [(1, 1, 1, 1), (1, 2, 1, 3), (2, 3, 2, 2), (3, 3, 1, 2)]:
        assert phi_second(vf, *idx) == phi_second_total(vf, *idx)


def test_assembled_matches_direct_n2(ctx2):
    vf = generic_field(ctx2)
    for a, b in ctx2.pairs:
        assert is_zero_mod_inverse(prolong_einstein_component(vf, a, b) - prolong_direct_einstein(vf, a, b), ctx2)


def test_assembled_matches_direct_n3_component():
    ctx = MetricContext(3)
    vf = generic_field(ctx)
    diff = prolong_einstein_component(vf, 1, 2) - prolong_direct_einstein(vf, 1, 2)
    for s in range(3):
        assert eval_at(diff, sample_for(ctx, s, diff)) == 0


def test_prolong_direct_examples(ctx2):
    c = ctx2
    vf = generic_field(c)
    assert prolong_direct(vf, c.g(1, 1)) == vf.phi(1, 1)
    assert prolong_direct(vf, c.d(1, 1, 2)) == phi_first(vf, 1, 2, 1)
    assert prolong_direct(vf, c.x(2)) == vf.h(2)
    with pytest.raises(ProlongationError):
        prolong_direct(vf, c.ddd(1, 1, 1, 1, 1))


def test_prolongation_is_linear(ctx2):
    c = ctx2
    v1 = make_field(c, [c.x(2), ZERO], {(1, 1): c.g(1, 2)})
    v2 = make_field(c, [ZERO, c.x(1) * c.g(1, 1)], {(1, 2): c.x(1)})
    s = v1 + v2
    for a, b in c.pairs:
        lhs = prolong_einstein_component(s, a, b)
        rhs = prolong_einstein_component(v1, a, b) + prolong_einstein_component(v2, a, b)
        assert lhs == rhs
    t = v1.scaled(3)
    assert prolong_einstein_component(t, 1, 2) == 3 * prolong_einstein_component(v1, 1, 2)


@pytest.mark.parametrize("n", [2, 3])
def test_gct_action_is_combination_of_equations(n):
    ctx = MetricContext(n)
    comps = ctx.pairs if n == 2 else [(1, 1), (1, 2)]
    for a, b in comps:
        pr, rhs = gct_sides(ctx, a, b)
        assert is_zero_mod_inverse(pr - rhs, ctx)


def test_scaling_action_on_equations(ctx2):
    vf = scaling_generator(ctx2)
    for a, b in ctx2.pairs:
        act = prolong_einstein_component(vf, a, b)
        assert is_zero_mod_inverse(act + ctx2.lam() * const("A") * ctx2.g(a, b), ctx2)


def test_gct_generator_shape(ctx2):
    vf = gct_generator(ctx2)
    assert vf.h(1) == func("f", (1,))
    assert jet_id("g", (), (1, 1)) in vf.phi(1, 1).variables()
    assert vf.phi(1, 1) == -2 * (ctx2.g(1, 1) * func("f", (1,), (1,)) + ctx2.g(1, 2) * func("f", (2,), (1,)))
