from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lievac.exprcore import ZERO, Expr
from lievac.geometry import is_zero_mod_inverse
from lievac.jetspace import MetricContext, const, func
from lievac.liealg import (
    GCT_COMBINATION,
    LieAlgebraError,
    ansatz_collapse,
    ansatz_step_bracket,
    ansatz_step_coordinate_independence,
    ansatz_step_linear,
    ansatz_vertical,
    apply_field,
    check_bracket_closed_form,
    commutator,
    coordinate_field,
    final_classification,
    gct_closure,
    gct_generator,
    gct_residual,
    ricci_homogeneity,
    scaling_generator,
    two_dim_b,
    two_dim_branch,
    verify_gct_symmetry,
    verify_scaling,
)
from lievac.prolongation import make_field, prolong_einstein_component

CTX2 = MetricContext(2)
ATOMS2 = [CTX2.x(1), CTX2.x(2), CTX2.g(1, 1), CTX2.g(1, 2), CTX2.g(2, 2)]


@st.composite
def polys(draw):
    out = ZERO
    for _ in range(draw(st.integers(0, 3))):
        t = Expr.const(draw(st.integers(-3, 3)))
        for a in draw(st.lists(st.sampled_from(ATOMS2), max_size=2)):
            t = t * a
        out = out + t
    return out


@st.composite
def fields(draw):
    H = [draw(polys()) for _ in CTX2.indices]
    return make_field(CTX2, H, {p: draw(polys()) for p in CTX2.pairs})


# ---------------------------------------------------------------- generators

def test_generator_examples():
    c = CTX2
    v = coordinate_field(c, [c.x(2), ZERO])
    # x1 -> x1 + eps x2 drags g_22 by -2 g_12 and g_12 by -g_11
    assert v.phi(2, 2) == -2 * c.g(1, 2)
    assert v.phi(1, 2) == -c.g(1, 1)
    assert v.phi(1, 1).is_zero()
    s = scaling_generator(c)
    assert s.is_vertical() and s.phi(1, 2) == const("A") * c.g(1, 2)


def test_translations_have_no_vertical_part():
    v = coordinate_field(CTX2, [const("t1"), const("t2")])
    assert all(e.is_zero() for e in v.Phi.values())
    for a, b in CTX2.pairs:
        assert prolong_einstein_component(v, a, b).is_zero()


def test_apply_field_examples():
    c = CTX2
    v = make_field(c, [c.x(1), ZERO], {(1, 1): c.g(1, 1)})
    assert apply_field(v, c.x(1) ** 2) == 2 * c.x(1) ** 2
    assert apply_field(v, c.g(1, 1) * c.g(2, 2)) == c.g(1, 1) * c.g(2, 2)


# ---------------------------------------------------------------- bracket

@settings(max_examples=60, deadline=None)
@given(fields(), fields())
def test_commutator_antisymmetric(v1, v2):
    assert (commutator(v1, v2) + commutator(v2, v1)).is_zero()
    assert commutator(v1, v1).is_zero()


@settings(max_examples=30, deadline=None)
@given(fields(), fields(), fields())
def test_commutator_jacobi_and_bilinear(v1, v2, v3):
    j = commutator(v1, commutator(v2, v3)) + commutator(v2, commutator(v3, v1)) + commutator(v3, commutator(v1, v2))
    assert j.is_zero()
    assert commutator(v1 + v2, v3) == commutator(v1, v3) + commutator(v2, v3)
    assert commutator(v1.scaled(2), v3) == commutator(v1, v3).scaled(2)


def test_scaling_commutes_with_coordinate_transformations():
    for n in (2, 3):
        ctx = MetricContext(n)
        assert commutator(scaling_generator(ctx), gct_generator(ctx)).is_zero()


@pytest.mark.parametrize("n", [2, 3])
def test_bracket_closed_form(n):
    assert check_bracket_closed_form(MetricContext(n))["ok"]


@pytest.mark.parametrize("n", [2, 3])
def test_coordinate_fields_close(n):
    assert gct_closure(MetricContext(n))["closed"]


@pytest.mark.parametrize("n", [2, 3])
def test_ricci_scale_invariance(n):
    assert ricci_homogeneity(MetricContext(n))["ok"]


# ---------------------------------------------------------------- symmetries

def test_gct_symmetry_n2():
    rep = verify_gct_symmetry(CTX2)
    assert rep["ok"] and rep["combination"] == GCT_COMBINATION == {"left": 1, "right": 1, "trace": 0}


def test_gct_symmetry_n3_component():
    ctx = MetricContext(3)
    rep = verify_gct_symmetry(ctx, components=[(1, 1), (2, 3)])
    assert rep["ok"]
    assert is_zero_mod_inverse(gct_residual(ctx, 1, 2), ctx)


def test_gct_wrong_combination_fails():
    assert not is_zero_mod_inverse(gct_residual(CTX2, 1, 2, {"left": 1, "right": 0, "trace": 0}), CTX2)


def test_full_symbolic_cap():
    with pytest.raises(LieAlgebraError):
        verify_gct_symmetry(MetricContext(5))


@pytest.mark.parametrize("n", [2, 3])
def test_scaling(n):
    ctx = MetricContext(n)
    sym = verify_scaling(ctx, "symbolic")
    assert sym["ok"] and sym["ricci_invariant"] and sym["action_is_minus_lambda_A_g"]
    assert sym["is_symmetry"] is False
    assert verify_scaling(ctx, "zero")["is_symmetry"] is True


def test_ansatz_field_action():
    # B = 0: the action is exactly -lam A g
    v = ansatz_vertical(CTX2, const("A"), {p: ZERO for p in CTX2.pairs})
    for a, b in CTX2.pairs:
        act = prolong_einstein_component(v, a, b)
        assert is_zero_mod_inverse(act + CTX2.lam() * const("A") * CTX2.g(a, b), CTX2)


# ---------------------------------------------------------------- collapse

@pytest.mark.parametrize("n", [2, 3])
def test_ansatz_steps(n):
    ctx = MetricContext(n)
    assert ansatz_step_linear(ctx)["ansatz_sufficient"]
    ci = ansatz_step_coordinate_independence(ctx)
    assert ci["ok"] and ci["A_constant"] and ci["split_matches"]
    br = ansatz_step_bracket(ctx)
    assert br["B_zero"] and br["B_rank"] == br["B_unknowns"] == n * (n + 1) // 2
    assert ansatz_collapse(ctx)["ok"]


def test_coordinate_independence_rank_n3():
    rep = ansatz_step_coordinate_independence(MetricContext(3))
    assert rep["rank"] == rep["unknowns"] == 21
    assert rep["all_C_vanish"] and rep["B_constant"]


def test_two_dimensional_branch():
    rep = two_dim_branch(CTX2)
    assert rep["ok"] and rep["B_zero"] and rep["bracket_rank"] == 6
    B = two_dim_b(CTX2)
    assert func("f", (1,)) not in B.values()
    assert set(B) == set(CTX2.pairs)


def test_two_dimensional_branch_requires_dim_two():
    with pytest.raises(LieAlgebraError):
        two_dim_branch(MetricContext(3))


# ---------------------------------------------------------------- certificate

def test_final_classification_n2():
    sym = final_classification(CTX2, "symbolic")
    zero = final_classification(CTX2, "zero")
    assert sym["ok"] and zero["ok"] and sym["schema"] == 1
    assert all(s["status"] == "pass" for s in sym["steps"])
    assert set(sym["steps"][0]) == {"name", "paper_eq", "status", "residual_hash"}
    assert sym["conclusion"]["scaling"].startswith("excluded")
    assert zero["conclusion"]["scaling"].startswith("included")
    assert len(sym["conclusion"]["generators"]) == 1
    assert len(zero["conclusion"]["generators"]) == 2


def test_final_classification_agrees_across_dimensions():
    a = final_classification(CTX2, "zero")
    b = final_classification(MetricContext(3), "zero")
    assert b["ok"]
    assert a["conclusion"] == b["conclusion"]
    assert len(a["steps"]) == len(b["steps"])
    assert {s["status"] for s in a["steps"] + b["steps"]} == {"pass"}
