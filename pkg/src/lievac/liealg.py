"""Concrete generators, the Lie bracket and the final classification.

The determining equations leave generators of the form
``H^m(x) d/dx^m + (-g d H - g d H + tildePhi_mn(x, g_mn)) d/dg_mn``. This
module checks that coordinate transformations and (without cosmological
term) uniform rescalings are symmetries, and that closure under brackets with
coordinate transformations collapses ``tildePhi`` to ``A g`` with constant A.
"""

from __future__ import annotations

import hashlib
import itertools
import json

from .determining import (
    _pivot_id,
    certify_tilde_phi_structure,
    check_dg_ddg_closed_form,
    check_ddg_closed_forms,
    christoffel_combination,
    deduce_h_independence,
    deduce_phi_relations,
    dg_vanishes_without_coordinate_dependence,
    restricted_dg_check,
    verify_sufficiency,
)
from .exprcore import ZERO, Expr, Rational, coefficient_of, substitute_expr, var_name, var_payload
from .geometry import einstein_delta, is_zero_mod_inverse, ricci
from .jetspace import FuncAtom, MetricContext, const, func, partial_g, partial_x
from .oracle import exact_rank, eval_at, sample_for
from .prolongation import VectorField, make_field, prolong_direct, prolong_einstein_component
from .rules import RuleSet

FULL_SYMBOLIC_CAP = 4


class LieAlgebraError(RuntimeError):
    pass


def _sum(terms) -> Expr:
    out = ZERO
    for t in terms:
        out = out + t
    return out


def _sym(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a <= b else (b, a)


# --------------------------------------------------------------------------
# generators


def coordinate_field(ctx: MetricContext, components) -> VectorField:
    """Generator of the coordinate transformation x -> x + eps f(x)."""
    comps = list(components)
    I = ctx.indices
    phi = {}
    for a, b in ctx.pairs:
        phi[(a, b)] = -_sum(ctx.g(a, c) * partial_x(comps[c - 1], b) + ctx.g(c, b) * partial_x(comps[c - 1], a)
                            for c in I)
    return make_field(ctx, comps, phi)


def gct_generator(ctx: MetricContext, family: str = "f") -> VectorField:
    """Coordinate-transformation generator with arbitrary functions ``family[m](x)``."""
    return coordinate_field(ctx, [func(family, (m,)) for m in ctx.indices])


def scaling_generator(ctx: MetricContext, A: Expr | None = None) -> VectorField:
    A = A if A is not None else const("A")
    return make_field(ctx, [ZERO] * ctx.dim, {p: A * ctx.g(*p) for p in ctx.pairs})


def vertical_field(ctx: MetricContext, tphi: dict) -> VectorField:
    return make_field(ctx, [ZERO] * ctx.dim, tphi)


def generic_vertical(ctx: MetricContext) -> VectorField:
    """``tildePhi_mn(x, g_mn) d/dg_mn`` with unknown functions."""
    return vertical_field(ctx, {p: func("PhiT", p) for p in ctx.pairs})


def ansatz_vertical(ctx: MetricContext, A: Expr, B: dict) -> VectorField:
    """``(A g_mn + B_mn) d/dg_mn``."""
    return vertical_field(ctx, {p: A * ctx.g(*p) + B[p] for p in ctx.pairs})


# --------------------------------------------------------------------------
# bracket


def apply_field(v: VectorField, e: Expr) -> Expr:
    """Action of ``v`` as a derivation on functions of (x, g)."""
    out = ZERO
    for m in v.ctx.indices:
        h = v.h(m)
        if h:
            out = out + h * partial_x(e, m)
    for p in v.ctx.pairs:
        ph = v.phi(*p)
        if ph:
            out = out + ph * partial_g(e, *p)
    return out


def commutator(v1: VectorField, v2: VectorField) -> VectorField:
    """``[v1, v2] = v1 v2 - v2 v1`` on (x, g) space."""
    ctx = v1.ctx
    H = [apply_field(v1, v2.h(m)) - apply_field(v2, v1.h(m)) for m in ctx.indices]
    phi = {p: apply_field(v1, v2.phi(*p)) - apply_field(v2, v1.phi(*p)) for p in ctx.pairs}
    return make_field(ctx, H, phi)


def bracket_closed_form(ctx: MetricContext, fs, tphi: dict) -> dict:
    """Vertical part of ``[tildePhi d/dg, v_f]`` when tildePhi_mn depends on
    (x, g_mn) only:
    ``-f^a d_a tP_mn - tP_mc d_n f^c - tP_cn d_m f^c + (g_mc d_n f^c + g_cn d_m f^c) dtP_mn/dg_mn``.
    """
    I = ctx.indices
    out = {}
    for m, n in ctx.pairs:
        T = lambda a, b: tphi[_sym(a, b)]  # noqa: E731
        e = -_sum(fs[a - 1] * partial_x(T(m, n), a) for a in I)
        e = e - _sum(T(m, c) * partial_x(fs[c - 1], n) + T(c, n) * partial_x(fs[c - 1], m) for c in I)
        drag = _sum(ctx.g(m, c) * partial_x(fs[c - 1], n) + ctx.g(c, n) * partial_x(fs[c - 1], m) for c in I)
        out[(m, n)] = e + drag * partial_g(T(m, n), m, n)
    return out


def check_bracket_closed_form(ctx: MetricContext) -> dict:
    fs = [func("f", (m,)) for m in ctx.indices]
    vt = generic_vertical(ctx)
    br = commutator(vt, coordinate_field(ctx, fs))
    ref = bracket_closed_form(ctx, fs, vt.Phi)
    bad = [p for p in ctx.pairs if br.phi(*p) != ref[p]]
    return {"dim": ctx.dim, "horizontal_zero": br.is_vertical(), "mismatches": bad,
            "ok": br.is_vertical() and not bad}


# --------------------------------------------------------------------------
# symmetry checks


def _contraction(ctx: MetricContext, kind: str, a: int, b: int, fs) -> Expr:
    I = ctx.indices
    if kind == "left":
        return _sum(partial_x(fs[c - 1], a) * einstein_delta(ctx, c, b) for c in I)
    if kind == "right":
        return _sum(partial_x(fs[c - 1], b) * einstein_delta(ctx, a, c) for c in I)
    if kind == "trace":
        return _sum(partial_x(fs[c - 1], c) for c in I) * einstein_delta(ctx, a, b)
    raise ValueError(kind)


_KINDS = ("left", "right", "trace")
# the combination found by verify_gct_symmetry (the Lie derivative of Delta)
GCT_COMBINATION = {"left": 1, "right": 1, "trace": 0}


def _residual_hash(items) -> str:
    h = hashlib.sha256()
    for item in items:
        h.update(item.encode())
        h.update(b"\n")
    return h.hexdigest()


def verify_gct_symmetry(ctx: MetricContext, components=None, seeds=(11, 12)) -> dict:
    """Find coefficients c with ``pr v[Delta_ab] + sum_k c_k T_k = 0``, where
    the T_k are the contractions ``d_a f^c Delta_cb``, ``d_b f^c Delta_ac`` and
    ``(d_c f^c) Delta_ab``, and certify the winner symbolically."""
    if ctx.dim > FULL_SYMBOLIC_CAP:
        raise LieAlgebraError(f"full symbolic run capped at dim {FULL_SYMBOLIC_CAP}")
    fs = [func("f", (m,)) for m in ctx.indices]
    vf = coordinate_field(ctx, fs)
    comps = list(components) if components is not None else ctx.pairs
    found = None
    per = []
    for a, b in comps:
        pr = prolong_einstein_component(vf, a, b)
        T = {k: _contraction(ctx, k, a, b, fs) for k in _KINDS}
        # screen sign patterns numerically, then certify the survivors exactly
        candidates = []
        for coeffs in itertools.product((1, 0, -1), repeat=len(_KINDS)):
            res = pr + _sum(T[k] * c for k, c in zip(_KINDS, coeffs) if c)
            if all(eval_at(res, sample_for(ctx, s, res)) == 0 for s in seeds):
                candidates.append((coeffs, res))
        certified = None
        for coeffs, res in candidates:
            if is_zero_mod_inverse(res, ctx):
                certified = coeffs
                break
        per.append({"alpha": a, "beta": b,
                    "combination": None if certified is None else dict(zip(_KINDS, certified)),
                    "terms": len(pr)})
        if certified is None:
            return {"dim": ctx.dim, "components": per, "combination": None, "ok": False,
                    "residual_hash": _residual_hash(["no combination"])}
        if found is None:
            found = certified
        elif found != certified:
            return {"dim": ctx.dim, "components": per, "combination": None, "ok": False,
                    "residual_hash": _residual_hash(["inconsistent combinations"])}
    combo = dict(zip(_KINDS, found))
    text = " ".join(f"{'+' if c > 0 else '-'}{k}" for k, c in combo.items() if c)
    return {"dim": ctx.dim, "components": per, "combination": combo,
            "combination_text": f"pr v[Delta_ab] {text} = 0",
            "ok": True, "residual_hash": _residual_hash(["0"] * len(per))}


def gct_sides(ctx: MetricContext, a: int, b: int, combination: dict | None = None) -> tuple[Expr, Expr]:
    """``(pr v[Delta_ab], -sum_k c_k T_k)`` for the generic coordinate field."""
    combination = combination if combination is not None else GCT_COMBINATION
    fs = [func("f", (m,)) for m in ctx.indices]
    pr = prolong_einstein_component(coordinate_field(ctx, fs), a, b)
    return pr, -_sum(_contraction(ctx, k, a, b, fs) * c for k, c in combination.items() if c)


def gct_residual(ctx: MetricContext, a: int, b: int, combination: dict | None = None) -> Expr:
    lhs, rhs = gct_sides(ctx, a, b, combination)
    return lhs - rhs


def scaling_residuals(ctx: MetricContext, a: int, b: int) -> tuple[Expr, Expr]:
    """(pr v[R_ab], pr v[Delta_ab] + lam A g_ab) for Phi = A g; both vanish."""
    A = const("A")
    vf = scaling_generator(ctx, A)
    r = prolong_direct(vf, ricci(ctx, a, b))
    d = prolong_direct(vf, einstein_delta(ctx, a, b)) + ctx.lam() * A * ctx.g(a, b)
    return r, d


def verify_scaling(ctx: MetricContext, lambda_mode: str = "symbolic") -> dict:
    """``pr v[R_ab] = 0`` and ``pr v[Delta_ab] = -lam A g_ab`` for Phi = A g."""
    A = const("A")
    vf = scaling_generator(ctx, A)
    ricci_zero = True
    action_ok = True
    rows = []
    for a, b in ctx.pairs:
        r = prolong_direct(vf, ricci(ctx, a, b))
        rz = r.is_zero() or is_zero_mod_inverse(r, ctx)
        d = prolong_direct(vf, einstein_delta(ctx, a, b))
        expected = -ctx.lam() * A * ctx.g(a, b)
        diff = d - expected
        dz = diff.is_zero() or is_zero_mod_inverse(diff, ctx)
        ricci_zero &= rz
        action_ok &= dz
        rows.append({"alpha": a, "beta": b, "ricci_zero": rz, "action": expected.to_text()})
    symmetric = lambda_mode == "zero"
    return {"dim": ctx.dim, "lambda": lambda_mode, "components": rows,
            "ricci_invariant": ricci_zero, "action_is_minus_lambda_A_g": action_ok,
            "is_symmetry": symmetric, "ok": ricci_zero and action_ok,
            "residual_hash": _residual_hash(["0" if ricci_zero and action_ok else "nonzero"])}


def ricci_homogeneity(ctx: MetricContext) -> dict:
    """Scale g -> c g, g^-1 -> g^-1 / c, dg -> c dg, ddg -> c ddg with fresh atoms
    c and cinv; every Ricci monomial must carry equal powers of both, so R is
    unchanged once cinv = 1/c."""
    c, cinv = const("c"), const("cinv")
    cid, iid = _pivot_id(c), _pivot_id(cinv)
    mapping = {}
    for p in ctx.pairs:
        mapping[_pivot_id(ctx.g(*p))] = c * ctx.g(*p)
        mapping[_pivot_id(ctx.gi(*p))] = cinv * ctx.gi(*p)
    for v in ctx.d1_ids() + ctx.d2_ids():
        mapping[v] = c * Expr.var(v)
    bad = []
    for a, b in ctx.pairs:
        scaled = substitute_expr(ricci(ctx, a, b), mapping)
        groups = coefficient_of(scaled, {cid, iid})
        for mono in groups:
            powers = dict(mono)
            if powers.get(cid, 0) != powers.get(iid, 0):
                bad.append((a, b))
                break
        if substitute_expr(scaled, {cid: Expr.const(1), iid: Expr.const(1)}) != ricci(ctx, a, b):
            bad.append((a, b))
    return {"dim": ctx.dim, "failures": sorted(set(bad)), "ok": not bad}


def gct_closure(ctx: MetricContext) -> dict:
    """[v_f, v_h] is the coordinate field of ``k^m = f^a d_a h^m - h^a d_a f^m``."""
    fs = [func("f", (m,)) for m in ctx.indices]
    hs = [func("h", (m,)) for m in ctx.indices]
    br = commutator(coordinate_field(ctx, fs), coordinate_field(ctx, hs))
    ks = [_sum(fs[a - 1] * partial_x(hs[m - 1], a) - hs[a - 1] * partial_x(fs[m - 1], a) for a in ctx.indices)
          for m in ctx.indices]
    ref = coordinate_field(ctx, ks)
    diff = br - ref
    return {"dim": ctx.dim, "closed": diff.is_zero(), "ok": diff.is_zero()}


# --------------------------------------------------------------------------
# collapse of the vertical part


def _single_variable_rules(ctx: MetricContext, rho: int, sigma: int) -> tuple[list, RuleSet]:
    """f^c = delta^c_rho f(x^sigma): components and rules killing the other
    partial derivatives of f."""
    fs = [func("f", (rho,)) if c == rho else ZERO for c in ctx.indices]
    rs = RuleSet()
    for t in ctx.indices:
        if t != sigma:
            rs.add(func("f", (rho,), (t,)), ZERO, "single-variable function")
    return fs, rs


def _tilde_F(ctx: MetricContext, fs, tphi: dict, rules: RuleSet) -> dict:
    """Bracket vertical part plus ``f^a d_a tildePhi``: the combination that must
    depend on (x, g_mn) only."""
    br = bracket_closed_form(ctx, fs, tphi)
    out = {}
    for m, n in ctx.pairs:
        e = br[(m, n)] + _sum(fs[a - 1] * partial_x(tphi[(m, n)], a) for a in ctx.indices)
        out[(m, n)] = rules.apply(e)
    return out


def _dPT(p, gs=(), xs=()) -> Expr:
    return func("PhiT", p, xs, gs)


def ansatz_step_linear(ctx: MetricContext) -> dict:
    """Single-variable instantiation: tilde F_ss must not depend on g_sr.

    Reads off, for every r != s,
    ``d^2 tP_sr / dg_sr^2 = 0`` (tP_sr linear in g_sr) and
    ``dtP_sr/dg_sr = dtP_ss/dg_ss`` (equal slopes), then checks that the
    ansatz ``tP = A(x) g + B(x)`` satisfies every instance identically.
    """
    tphi = generic_vertical(ctx).Phi
    found = []
    ok = True
    for rho in ctx.indices:
        for sigma in ctx.indices:
            fs, rules = _single_variable_rules(ctx, rho, sigma)
            tf = _tilde_F(ctx, fs, tphi, rules)
            fdot = func("f", (rho,), (sigma,))
            s = sigma
            e = tf[(s, s)]
            # closed form 2 (-tP_sr + g_sr dtP_ss/dg_ss) fdot
            ref = 2 * (-tphi[_sym(s, rho)] + ctx.g(s, rho) * _dPT((s, s), ((s, s),))) * fdot
            closed = e == ref
            ok &= closed
            if rho == s:
                continue
            p = _sym(s, rho)
            first = partial_g(e, *p)
            second = partial_g(first, *p)
            slope = 2 * (-_dPT(p, (p,)) + _dPT((s, s), ((s, s),))) * fdot
            curv = -2 * _dPT(p, (p, p)) * fdot
            ok &= first == slope and second == curv
            found.append({"rho": rho, "sigma": sigma, "closed_form": closed,
                          "slope_relation": first == slope, "linearity": second == curv})
    # sufficiency of the ansatz with a single A for every pair
    A = func("Ax")
    B = {p: func("B", p) for p in ctx.pairs}
    tp = {p: A * ctx.g(*p) + B[p] for p in ctx.pairs}
    suff = True
    for rho in ctx.indices:
        for sigma in ctx.indices:
            fs, rules = _single_variable_rules(ctx, rho, sigma)
            tf = _tilde_F(ctx, fs, tp, rules)
            for (m, n), e in tf.items():
                for k, l in ctx.pairs:
                    if (k, l) != (m, n) and partial_g(e, k, l):
                        suff = False
    return {"dim": ctx.dim, "instances": found, "ansatz_sufficient": suff, "ok": ok and suff}


def _row_space_contains(rows: list, vec: list) -> bool:
    return exact_rank(rows + [vec]) == exact_rank(rows)


def _coef(form: Expr, u: int) -> Rational:
    return form.terms.get(((u, 1),), Rational(0))


def _sampled_rows(ctx: MetricContext, forms: list[Expr], unknowns: list[int], seeds) -> list:
    """Coefficient rows of metric-dependent linear forms, stacked over sample
    metrics. Every solution of the forms solves this system, so a vector in its
    row space vanishes on every solution."""
    rows = []
    for s in seeds:
        for f in forms:
            groups = coefficient_of(f, set(unknowns))
            pt = sample_for(ctx, s, *groups.values())
            rows.append([eval_at(groups[((u, 1),)], pt) if ((u, 1),) in groups else Rational(0)
                         for u in unknowns])
    return rows


def ansatz_step_coordinate_independence(ctx: MetricContext, seeds=(1, 2, 3, 4)) -> dict:
    """Insert tP = A(x) g + B(x) into the restricted first-derivative relation.

    Modulo the inverse relation each instance equals
    ``-g^{lr} d_r A g_ab + g^{lr} C_rab`` with
    ``C_rab = d_b B_ra + d_a B_rb - d_r B_ab``. The instances are linear in the
    first derivatives of A and B with metric-dependent coefficients; stacking
    them over sample metrics shows dA = 0 and, for dim >= 3, dB = 0. The
    identity ``(C_rab + C_arb) / 2 = d_b B_ra`` is what turns vanishing C into
    vanishing dB.
    """
    I = ctx.indices
    A = func("Ax")

    def field_fn(r, p, q):
        return partial_x(A * ctx.g(*_sym(r, p)) + func("B", _sym(r, p)), q)

    def C(r, a, b):
        return func("B", _sym(r, a), (b,)) + func("B", _sym(r, b), (a,)) - func("B", _sym(a, b), (r,))

    split_ok = True
    forms = []
    for a, b in ctx.pairs:
        for l in I:
            if l in (a, b):
                continue
            e = christoffel_combination(ctx, a, b, l, field_fn)
            claimed = _sum(ctx.gi(l, r) * (C(r, a, b) - func("Ax", (), (r,)) * ctx.g(a, b)) for r in I)
            split_ok &= is_zero_mod_inverse(e - claimed, ctx)
            forms.append(claimed)
    dA = [_pivot_id(func("Ax", (), (r,))) for r in I]
    dB = [_pivot_id(func("B", p, (t,))) for p in ctx.pairs for t in I]
    unknowns = dA + dB
    rows = _sampled_rows(ctx, forms, unknowns, seeds)

    def unit(u):
        return [Rational(int(u == w)) for w in unknowns]

    a_forced = all(_row_space_contains(rows, unit(u)) for u in dA)
    combo_ok = all((C(r, a, b) + C(a, r, b)) * Rational(1, 2) == func("B", _sym(r, a), (b,))
                   for r in I for a in I for b in I)
    rank = exact_rank(rows)
    report = {"dim": ctx.dim, "instances": len(forms), "split_matches": split_ok,
              "A_constant": a_forced, "combination_identity": combo_ok,
              "unknowns": len(unknowns), "rank": rank}
    if ctx.dim >= 3:
        c_forced = all(_row_space_contains(rows, [_coef(C(r, a, b), u) for u in unknowns])
                       for r in I for a in I for b in I)
        report["all_C_vanish"] = c_forced
        report["B_constant"] = c_forced and combo_ok and rank == len(unknowns)
        report["ok"] = split_ok and a_forced and report["B_constant"]
    else:
        report["ok"] = split_ok and a_forced and combo_ok
    return report


def _const_B(ctx: MetricContext) -> dict:
    return {p: const(f"B{p[0]}{p[1]}") for p in ctx.pairs}


def ansatz_step_bracket(ctx: MetricContext, B: dict | None = None) -> dict:
    """With tP = A g + B (A, B constant), the bracket with an arbitrary
    coordinate transformation has vertical part -B d f - B d f; belonging to
    the admissible class needs it to be constant, and the second-derivative
    coefficients then force every B_mn = 0."""
    A = const("A")
    B = B if B is not None else _const_B(ctx)
    fs = [func("f", (m,)) for m in ctx.indices]
    br = commutator(ansatz_vertical(ctx, A, B), coordinate_field(ctx, fs))
    expected = {}
    for m, n in ctx.pairs:
        expected[(m, n)] = -_sum(B[_sym(m, c)] * partial_x(fs[c - 1], n) + B[_sym(c, n)] * partial_x(fs[c - 1], m)
                                 for c in ctx.indices)
    closed = all(br.phi(*p) == expected[p] for p in ctx.pairs) and br.is_vertical()
    # constancy: every x-derivative of the vertical part vanishes
    forms = []
    f2 = set()
    for p in ctx.pairs:
        for t in ctx.indices:
            e = partial_x(br.phi(*p), t)
            groups = coefficient_of(e, {v for v in e.variables() if isinstance(var_payload(v), FuncAtom)})
            for mono, coeff in groups.items():
                if mono:
                    f2.update(v for v, _ in mono)
                    forms.append(coeff)
    bvars = sorted({_pivot_id(b) for b in B.values()}, key=var_name)
    rows = [[_coef(f, u) for u in bvars] for f in forms]
    rank = exact_rank(rows)
    return {"dim": ctx.dim, "bracket_closed_form": closed, "constraints": len(forms),
            "B_unknowns": len(bvars), "B_rank": rank, "B_zero": rank == len(bvars),
            "ok": closed and rank == len(bvars)}


def ansatz_collapse(ctx: MetricContext) -> dict:
    a = ansatz_step_linear(ctx)
    b = ansatz_step_coordinate_independence(ctx)
    c = ansatz_step_bracket(ctx)
    return {"dim": ctx.dim, "linear_in_metric": a, "coordinate_independence": b,
            "bracket_membership": c, "ok": a["ok"] and b["ok"] and c["ok"]}


# --------------------------------------------------------------------------
# two dimensions


def two_dim_b(ctx: MetricContext) -> dict:
    """Polynomial B allowed in two dimensions (coordinates x1, x2)."""
    ka, kb, kc, kd, kf, kg = (const(n) for n in ("ka", "kb", "kc", "kd", "kf", "kg"))
    x1, x2 = ctx.x(1), ctx.x(2)
    return {
        (1, 2): ka * x1 * x2 + kb * x1 + kc * x2 + kd,
        (1, 1): ka * x2 * x2 + 2 * kb * x2 + kf,
        (2, 2): ka * x1 * x1 + 2 * kc * x1 + kg,
    }


def _two_dim_relation(B: dict, a: int, r: int) -> Expr:
    # 2 d_a B_ra - d_r B_aa
    return 2 * partial_x(B[_sym(r, a)], a) - partial_x(B[(a, a)], r)


def two_dim_branch(ctx: MetricContext) -> dict:
    if ctx.dim != 2:
        raise LieAlgebraError("two-dimensional branch needs dim 2")
    I = ctx.indices
    # derivation: restricted relation with alpha = beta != lambda gives 2 d_a B_ra - d_r B_aa
    Bf = {p: func("B", p) for p in ctx.pairs}

    def field_fn(r, p, q):
        return partial_x(Bf[_sym(r, p)], q)

    derived = True
    rel_rules = RuleSet()
    for a in I:
        for l in I:
            if l == a:
                continue
            e = christoffel_combination(ctx, a, a, l, field_fn)
            for r in I:
                gid = _pivot_id(ctx.gi(l, r))
                coeff = coefficient_of(e, {gid}).get(((gid, 1),), ZERO)
                derived &= coeff == _two_dim_relation(Bf, a, r)
    # relations as rules: d_a B_aa = 0, d_a B_ra = d_r B_aa / 2
    for a in I:
        rel_rules.add(func("B", (a, a), (a,)), ZERO, "diagonal B independent of own coordinate")
    rel_rules.add(func("B", (1, 2), (1,)), func("B", (1, 1), (2,)) / 2, "off-diagonal B slope")
    rel_rules.add(func("B", (1, 2), (2,)), func("B", (2, 2), (1,)) / 2, "off-diagonal B slope")
    second = {t: rel_rules.apply(func("B", (1, 2), (t, t))) for t in I}
    second_ok = all(v.is_zero() for v in second.values())

    B = two_dim_b(ctx)
    rel_ok = all(_two_dim_relation(B, a, r).is_zero() for a in I for r in I)
    diag_ok = partial_x(B[(1, 1)], 1).is_zero() and partial_x(B[(2, 2)], 2).is_zero()
    slope_ok = (2 * partial_x(B[(1, 2)], 1) == partial_x(B[(1, 1)], 2)
                and 2 * partial_x(B[(1, 2)], 2) == partial_x(B[(2, 2)], 1))
    flat_ok = all(partial_x(partial_x(B[(1, 2)], t), t).is_zero() for t in I)

    # bracket membership: the bracket's vertical part must again satisfy the
    # two-dimensional relation for every coordinate transformation
    A = const("A")
    fs = [func("f", (m,)) for m in I]
    br = commutator(ansatz_vertical(ctx, A, B), coordinate_field(ctx, fs))
    F = {p: br.phi(*p) for p in ctx.pairs}
    consts = [const(n) for n in ("ka", "kb", "kc", "kd", "kf", "kg")]
    cids = [_pivot_id(c) for c in consts]
    forms = []
    for a in I:
        for r in I:
            e = _two_dim_relation(F, a, r)
            others = {v for v in e.variables() if v not in cids}
            for mono, coeff in coefficient_of(e, others).items():
                forms.append(coeff)
    rows = [[_coef(f, u) for u in cids] for f in forms]
    rank = exact_rank(rows)
    trivial = all(v.is_zero() for v in _zero_consts(B, consts).values())
    return {
        "dim": 2,
        "relation_derived": derived,
        "second_derivatives_vanish": second_ok,
        "closed_forms_satisfy_relation": rel_ok,
        "diagonal_independence": diag_ok,
        "slope_relations": slope_ok,
        "off_diagonal_flat": flat_ok,
        "trivial_solution": trivial,
        "bracket_rank": rank,
        "B_zero": rank == len(cids),
        "ok": all([derived, second_ok, rel_ok, diag_ok, slope_ok, flat_ok, trivial, rank == len(cids)]),
    }


def _zero_consts(B: dict, consts) -> dict:
    mapping = {_pivot_id(c): ZERO for c in consts}
    return {p: substitute_expr(e, mapping) for p, e in B.items()}


# --------------------------------------------------------------------------
# certificate


def _step(name: str, relation: str, report: dict) -> dict:
    payload = json.dumps(report, sort_keys=True, default=str)
    return {"name": name, "paper_eq": relation,
            "status": "pass" if report.get("ok") else "fail",
            "residual_hash": hashlib.sha256(payload.encode()).hexdigest()}


def final_classification(ctx: MetricContext, lambda_mode: str = "symbolic") -> dict:
    if lambda_mode not in ("symbolic", "zero"):
        raise ValueError("lambda_mode must be 'symbolic' or 'zero'")
    if ctx.dim > FULL_SYMBOLIC_CAP:
        raise LieAlgebraError(f"full symbolic run capped at dim {FULL_SYMBOLIC_CAP}")
    steps = []
    steps.append(_step("metric-derivative coupling coefficients",
                       "coefficient of dg*ddg equals the closed form up to 1/2",
                       check_dg_ddg_closed_form(ctx)))
    steps.append(_step("H independent of the metric", "dH^c/dg_rs = 0", deduce_h_independence(ctx)))
    steps.append(_step("absent second-derivative coefficients",
                       "coefficients of dd[s,e]g[s,s] and dd[s,s]g[r,s] match closed forms",
                       check_ddg_closed_forms(ctx)))
    rep, rules = deduce_phi_relations(ctx)
    steps.append(_step("Phi metric derivatives", "dPhi/dg fixed by d_a H", rep))
    for fam in ("ddg-diagonal", "ddg-repeated"):
        steps.append(_step(f"sufficiency {fam}", "remaining index cases vanish",
                           verify_sufficiency(ctx, fam, rules)))
    steps.append(_step("tildePhi structure", "tildePhi_ab depends on x and g_ab only",
                       certify_tilde_phi_structure(ctx, rules)))
    steps.append(_step("first-derivative relation", "g^{lr}(d_b tP_ra + d_a tP_rb - d_r tP_ab) = 0 instances",
                       restricted_dg_check(ctx)))
    steps.append(_step("first-derivative terms without explicit x", "d_b tildePhi = 0 kills every Christoffel coefficient",
                       dg_vanishes_without_coordinate_dependence(ctx)))
    steps.append(_step("bracket with coordinate transformations", "[tildev, v_f] vertical part closed form",
                       check_bracket_closed_form(ctx)))
    if ctx.dim >= 3:
        col = ansatz_collapse(ctx)
        steps.append(_step("tildePhi linear in the metric", "tildePhi = A(x) g + B(x)", col["linear_in_metric"]))
        steps.append(_step("A and B constant", "d A = 0, d B = 0", col["coordinate_independence"]))
        steps.append(_step("B vanishes", "B_mn = 0", col["bracket_membership"]))
    else:
        lin = ansatz_step_linear(ctx)
        steps.append(_step("tildePhi linear in the metric", "tildePhi = A(x) g + B(x)", lin))
        ci = ansatz_step_coordinate_independence(ctx)
        steps.append(_step("A constant", "d A = 0", ci))
        steps.append(_step("two-dimensional B", "B polynomial of degree two, then B = 0", two_dim_branch(ctx)))
    gct = verify_gct_symmetry(ctx)
    steps.append({**_step("coordinate transformations are symmetries", gct.get("combination_text") or "", gct),
                  "residual_hash": gct["residual_hash"]})
    sc = verify_scaling(ctx, lambda_mode)
    steps.append({**_step("uniform rescaling action", "pr v[Delta_ab] = -lam A g_ab", sc),
                  "residual_hash": sc["residual_hash"]})
    ok = all(s["status"] == "pass" for s in steps)
    generators = ["coordinate transformations: H^m(x) arbitrary, tildePhi = 0"]
    if lambda_mode == "zero":
        generators.append("uniform rescaling: tildePhi = A g with A constant")
        scaling = "included (lam = 0)"
    else:
        scaling = "excluded: pr v[Delta] = -lam A g forces A = 0 when lam != 0"
    return {
        "schema": 1,
        "dim": ctx.dim,
        "lambda": lambda_mode,
        "steps": steps,
        "conclusion": {
            "generator_form": "H^m(x) d/dx^m + (-g_mc d_n H^c - g_cn d_m H^c + A g_mn) d/dg_mn",
            "generators": generators,
            "scaling": scaling,
        },
        "ok": ok,
    }
