from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lievac.exprcore import ZERO, Expr, from_text, var_name
from lievac.jetspace import (
    DerivativeOrderError,
    IndexRangeError,
    JetVar,
    MetricContext,
    canon,
    const,
    enumerate_vars,
    func,
    g_cap_symbol,
    jet_name,
    parse_name,
    partial_g,
    partial_x,
    x_symbol_mixed,
    x_symbol_upper,
)


@pytest.fixture(scope="module")
def ctx2():
    return MetricContext(2)


def test_canon_examples():
    ctx = MetricContext(3)
    assert canon(ctx, "g", (2, 1)) == JetVar("g", (), (1, 2))
    assert canon(ctx, "dd", ((3, 1), (2, 2))) == JetVar("dd", (1, 3), (2, 2))
    assert canon(ctx, "g", (1, 1)) == JetVar("g", (), (1, 1))
    with pytest.raises(IndexRangeError):
        canon(ctx, "g", (1, 4))


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(["g", "gi", "d", "dd", "ddd"]), st.lists(st.integers(1, 4), min_size=5, max_size=5))
def test_canon_idempotent(kind, raw):
    ctx = MetricContext(4)
    if kind in ("g", "gi"):
        data = (raw[0], raw[1])
        again = lambda jv: jv.pair  # noqa: E731
    elif kind == "d":
        data = (raw[0], (raw[1], raw[2]))
        again = lambda jv: (jv.deriv[0], jv.pair)  # noqa: E731
    else:
        n = len(kind)
        data = (tuple(raw[:n]), (raw[3], raw[4]))
        again = lambda jv: (jv.deriv, jv.pair)  # noqa: E731
    once = canon(ctx, kind, data)
    assert canon(ctx, kind, again(once)) == once


@pytest.mark.parametrize("n", [2, 3, 4])
def test_enumerate_counts(n):
    ctx = MetricContext(n)
    m = n * (n + 1) // 2
    assert len(enumerate_vars(ctx, 0)) == m
    assert len(enumerate_vars(ctx, 1)) == n * m
    assert len(enumerate_vars(ctx, 2)) == m * m
    assert len(enumerate_vars(ctx, 3)) == (n * (n + 1) * (n + 2) // 6) * m
    for order in range(4):
        vs = enumerate_vars(ctx, order)
        assert len(set(vs)) == len(vs)


def test_enumerate_n2_examples(ctx2):
    assert len(enumerate_vars(ctx2, 0)) == 3
    assert len(enumerate_vars(ctx2, 1)) == 6
    assert len(enumerate_vars(ctx2, 2)) == 9


def test_x_symbols(ctx2):
    assert x_symbol_mixed(ctx2, 1, 1, 1, 1) == 1
    assert x_symbol_mixed(ctx2, 1, 2, 1, 2) == 1
    assert x_symbol_upper(ctx2, 1, 2, 1, 1) == ctx2.gi(1, 1) * ctx2.gi(1, 2)


def test_x_upper_is_minus_inverse_derivative():
    ctx = MetricContext(3)
    for m, n in ctx.pairs:
        for k, l in ctx.pairs:
            assert partial_g(ctx.gi(m, n), k, l) == -x_symbol_upper(ctx, m, n, k, l)


def test_g_cap_symbol(ctx2):
    assert g_cap_symbol(ctx2, 1, 1) == ctx2.gi(1, 1)
    assert g_cap_symbol(ctx2, 1, 2) == 2 * ctx2.gi(1, 2)
    assert g_cap_symbol(ctx2, 2, 1) == g_cap_symbol(ctx2, 1, 2)


@pytest.mark.parametrize("n", [2, 3])
def test_symmetric_collapse(n):
    # sum over m <= n of A_mn X_cd^mn = A_cd for any symmetric A
    ctx = MetricContext(n)
    A = {p: const(f"S{p[0]}{p[1]}") for p in ctx.pairs}
    for c, d in ctx.pairs:
        total = ZERO
        for p in ctx.pairs:
            total = total + A[p] * x_symbol_mixed(ctx, c, d, *p)
        assert total == A[(c, d)]


NAMES = ["g[1,2]", "gi[1,2]", "d[3]g[1,2]", "dd[1,3]g[2,2]", "ddd[1,2,3]g[1,1]", "lam", "x2",
         "Gam[1;2,3]", "dH[2;x1]", "dPhi[1,2;g[1,1]]", "f3[1;x1,x2,x2]", "PhiT[1,2]", "B2[1,2;x1,x1]"]


@pytest.mark.parametrize("name", NAMES)
def test_name_grammar_round_trip(name):
    p = from_text(f"1*{name}")
    ((mono, _),) = p.items()
    assert var_name(mono[0][0]) == name
    payload = parse_name(name)
    assert payload is not None
    if isinstance(payload, JetVar):
        assert jet_name(payload) == name


def test_func_dependencies():
    assert func("f", (1,), (), ((1, 1),)).is_zero()
    assert func("PhiT", (1, 2), (), ((1, 1),)).is_zero()
    assert not func("PhiT", (1, 2), (), ((1, 2),)).is_zero()
    with pytest.raises(DerivativeOrderError):
        func("H", (1,), (1, 2, 3))
    assert not func("f", (1,), (1, 2, 2)).is_zero()


def test_partials_on_atoms():
    ctx = MetricContext(2)
    assert partial_x(ctx.x(1) ** 2, 1) == 2 * ctx.x(1)
    assert partial_x(func("H", (1,)), 2) == func("H", (1,), (2,))
    assert partial_g(ctx.g(1, 2), 1, 2) == Expr.const(1)
    assert partial_g(func("Phi", (1, 1)), 2, 1) == func("Phi", (1, 1), (), ((1, 2),))
