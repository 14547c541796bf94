"""Command-line front end.

Every command prints (or writes, with ``--out``) a JSON document carrying
``"schema": 1`` or the canonical text form. Exit codes: 0 when every
requested check passes, 1 when a check fails, 2 on usage errors, including
dimensions above the cap for full symbolic runs.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

SCHEMA = 1
FULL_SYMBOLIC_CAP = 4
OUT_DIR_ENV = "LIEVAC_OUT_DIR"


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# output


def _dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=True) + "\n"


def _text(doc: dict) -> str:
    if "text" in doc:
        return doc["text"]
    lines = []
    for key in sorted(doc):
        value = doc[key]
        if isinstance(value, (dict, list)):
            value = json.dumps(value, sort_keys=True)
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def write_atomic(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _resolve_out(args, default_name: str) -> Path | None:
    out_dir = os.environ.get(OUT_DIR_ENV)
    if args.out:
        p = Path(args.out)
        return p if p.is_absolute() or not out_dir else Path(out_dir) / p
    if out_dir:
        return Path(out_dir) / default_name
    return None


def _emit(args, doc: dict, default_name: str) -> None:
    doc = {"schema": SCHEMA, **doc}
    data = _dumps(doc) if args.format == "json" else _text(doc)
    path = _resolve_out(args, default_name)
    if path is None:
        sys.stdout.write(data)
    else:
        write_atomic(path, data)


# --------------------------------------------------------------------------
# parallel helpers (workers return plain data, never Exprs: variable ids are
# process-local)


def _pmap(fn, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=min(jobs, len(items)), mp_context=ctx) as pool:
        return list(pool.map(fn, items))


def _ricci_text(item) -> str:
    from .geometry import ricci
    from .jetspace import MetricContext

    n, a, b = item
    return ricci(MetricContext(n), a, b).to_text()


def _prolong_text(item) -> str:
    from .jetspace import MetricContext
    from .prolongation import prolong_einstein_component

    n, field, a, b = item
    vf = _field(MetricContext(n), field)
    return prolong_einstein_component(vf, a, b).to_text()


def _gct_component(item) -> dict:
    from .jetspace import MetricContext
    from .liealg import verify_gct_symmetry

    n, a, b = item
    return verify_gct_symmetry(MetricContext(n), components=[(a, b)])


# identities built once in the parent; forked workers inherit the list
_SHARED: list = []


def _oracle_chunk(item) -> list:
    from .identities import check_identity

    start, stop, seeds = item
    ctx = _SHARED[0]
    return [check_identity(ctx, *_SHARED[1][i], seeds) for i in range(start, stop)]


# --------------------------------------------------------------------------
# commands


def _ctx(args, cap: bool):
    from .jetspace import MetricContext

    if args.dim < 2:
        raise UsageError("--dim must be at least 2")
    if cap and args.dim > FULL_SYMBOLIC_CAP:
        raise UsageError(f"full symbolic runs are capped at --dim {FULL_SYMBOLIC_CAP}")
    return MetricContext(args.dim)


def _components(ctx, args) -> list[tuple[int, int]]:
    if args.alpha is None and args.beta is None:
        return list(ctx.pairs)
    if args.alpha is None or args.beta is None:
        raise UsageError("--alpha and --beta go together")
    for i in (args.alpha, args.beta):
        if not 1 <= i <= ctx.dim:
            raise UsageError("component index out of range")
    return [(min(args.alpha, args.beta), max(args.alpha, args.beta))]


def _field(ctx, name: str):
    from .liealg import gct_generator, scaling_generator
    from .prolongation import generic_field

    if name == "generic":
        return generic_field(ctx)
    if name == "gct":
        return gct_generator(ctx)
    if name == "scaling":
        return scaling_generator(ctx)
    raise UsageError(f"unknown field {name}")


def cmd_ricci(args) -> int:
    ctx = _ctx(args, cap=False)
    comps = _components(ctx, args)
    texts = _pmap(_ricci_text, [(ctx.dim, a, b) for a, b in comps], args.jobs)
    doc = {"command": "ricci", "dim": ctx.dim,
           "components": [{"alpha": a, "beta": b, "expr": t} for (a, b), t in zip(comps, texts)]}
    if args.format == "text":
        doc["text"] = "".join(f"R[{a},{b}] = {t}\n" for (a, b), t in zip(comps, texts))
    _emit(args, doc, f"ricci-dim{ctx.dim}.{_ext(args)}")
    return 0


def cmd_check_absent(args) -> int:
    from .geometry import check_absent_derivatives

    ctx = _ctx(args, cap=False)
    rep = check_absent_derivatives(ctx)
    rep["offending"] = [{**o, "atom": [str(a) for a in o["atom"]]} for o in rep["offending"]]
    _emit(args, {"command": "check-absent", **rep}, f"check-absent-dim{ctx.dim}.{_ext(args)}")
    return 0 if rep["ok"] else 1


def cmd_prolong(args) -> int:
    ctx = _ctx(args, cap=True)
    comps = _components(ctx, args)
    texts = _pmap(_prolong_text, [(ctx.dim, args.field, a, b) for a, b in comps], args.jobs)
    doc = {"command": "prolong", "dim": ctx.dim, "field": args.field,
           "components": [{"alpha": a, "beta": b, "expr": t} for (a, b), t in zip(comps, texts)]}
    if args.format == "text":
        doc["text"] = "".join(f"pr v[Delta[{a},{b}]] = {t}\n" for (a, b), t in zip(comps, texts))
    _emit(args, doc, f"prolong-{args.field}-dim{ctx.dim}.{_ext(args)}")
    return 0


def cmd_determining(args) -> int:
    from .determining import build_system

    ctx = _ctx(args, cap=True)
    system = build_system(ctx, args.cls)
    doc = {"command": "determining", "class": args.cls, **system.to_json()}
    if args.format == "text":
        doc["text"] = "".join(f"{c['source']} {json.dumps(c['indices'], sort_keys=True)}: {c['expr']} = 0\n"
                              for c in doc["constraints"])
    _emit(args, doc, f"determining-{args.cls}-dim{ctx.dim}.{_ext(args)}")
    return 0


def deduce_report(ctx, step: str) -> dict:
    from . import determining as D

    if step == "h-indep":
        return D.deduce_h_independence(ctx)
    if step == "phi-structure":
        rep, rules = D.deduce_phi_relations(ctx)
        parts = {
            "relations": rep,
            "rules": rules.describe(),
            "sufficiency": {w: D.verify_sufficiency(ctx, w, rules) for w in ("dg-ddg", "ddg-diagonal", "ddg-repeated")},
            "closed_forms": D.check_ddg_closed_forms(ctx),
            "literal_mixed_relation": D.literal_mixed_check(ctx),
            "structure": D.certify_tilde_phi_structure(ctx, rules),
        }
        parts["ok"] = all(v["ok"] for k, v in parts.items() if k not in ("rules", "sufficiency", "literal_mixed_relation")) \
            and all(v["ok"] for v in parts["sufficiency"].values()) and parts["literal_mixed_relation"]["corrected_matches"]
        return {"dim": ctx.dim, **parts}
    if step == "dg":
        a = D.restricted_dg_check(ctx)
        b = D.dg_vanishes_without_coordinate_dependence(ctx)
        return {"dim": ctx.dim, "restricted_instances": a, "vanish_without_coordinate_dependence": b,
                "ok": a["ok"] and b["ok"]}
    raise UsageError(f"unknown step {step}")


def cmd_deduce(args) -> int:
    ctx = _ctx(args, cap=True)
    rep = deduce_report(ctx, args.step)
    _emit(args, {"command": "deduce", "step": args.step, **rep}, f"deduce-{args.step}-dim{ctx.dim}.{_ext(args)}")
    return 0 if rep["ok"] else 1


def _lambda_mode(value: str) -> str:
    return {"sym": "symbolic", "symbolic": "symbolic", "0": "zero", "zero": "zero"}[value]


def cmd_verify(args) -> int:
    from . import liealg as L

    if args.what == "two-dim":
        if args.dim not in (None, 2):
            raise UsageError("verify two-dim runs in dimension 2")
        args.dim = 2
    elif args.dim is None:
        raise UsageError("--dim is required")
    ctx = _ctx(args, cap=True)
    if args.what == "gct":
        parts = _pmap(_gct_component, [(ctx.dim, a, b) for a, b in ctx.pairs], args.jobs)
        combos = {json.dumps(p["combination"], sort_keys=True) for p in parts}
        ok = all(p["ok"] for p in parts) and len(combos) == 1
        rep = {"dim": ctx.dim, "components": [c for p in parts for c in p["components"]],
               "combination": parts[0]["combination"] if ok else None,
               "combination_text": parts[0].get("combination_text") if ok else None, "ok": ok}
    elif args.what == "scaling":
        rep = L.verify_scaling(ctx, _lambda_mode(args.lam))
    elif args.what == "ansatz":
        rep = L.ansatz_collapse(ctx) if ctx.dim >= 3 else {
            "dim": 2, "linear_in_metric": L.ansatz_step_linear(ctx),
            "coordinate_independence": L.ansatz_step_coordinate_independence(ctx),
            "note": "dimension 2 continues with verify two-dim"}
        if ctx.dim == 2:
            rep["ok"] = rep["linear_in_metric"]["ok"] and rep["coordinate_independence"]["ok"]
    else:
        rep = L.two_dim_branch(ctx)
    _emit(args, {"command": "verify", "what": args.what, **rep},
          f"verify-{args.what}-dim{ctx.dim}.{_ext(args)}")
    return 0 if rep["ok"] else 1


def cmd_certify(args) -> int:
    from .liealg import final_classification

    ctx = _ctx(args, cap=True)
    mode = _lambda_mode(args.lam)
    cert = final_classification(ctx, mode)
    cert.pop("schema", None)
    args.format = "json"
    _emit(args, {"command": "certify", **cert}, f"certificate-dim{ctx.dim}-lambda-{mode}.json")
    return 0 if cert["ok"] else 1


def cmd_oracle(args) -> int:
    from .identities import TARGETS

    ctx = _ctx(args, cap=args.target != "ricci")
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    seeds = list(range(args.seed, args.seed + args.samples))
    _SHARED[:] = [ctx, list(TARGETS[args.target](ctx))]
    count = len(_SHARED[1])
    step = max(1, -(-count // max(1, args.jobs)))
    chunks = [(i, min(i + step, count), seeds) for i in range(0, count, step)]
    rows = [r for part in _pmap(_oracle_chunk, chunks, args.jobs) for r in part]
    bad = [r["label"] for r in rows if r["failed_seeds"]]
    doc = {"command": "oracle", "dim": ctx.dim, "target": args.target, "identities": count,
           "samples": args.samples, "seed": args.seed, "failures": bad, "results": rows, "ok": not bad}
    _emit(args, doc, f"oracle-{args.target}-dim{ctx.dim}.{_ext(args)}")
    return 0 if not bad else 1


def _ext(args) -> str:
    return "json" if args.format == "json" else "txt"


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route usage errors through the exit-code contract
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help=f"output file (relative paths resolve against ${OUT_DIR_ENV})")
    common.add_argument("--format", choices=("text", "json"), default="json")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")

    p = _Parser(prog="lievac", description="Point symmetries of the vacuum field equations with cosmological term.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ricci", parents=[common], help="Ricci tensor components")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--alpha", type=int)
    s.add_argument("--beta", type=int)
    s.set_defaults(func=cmd_ricci)

    s = sub.add_parser("check-absent", parents=[common], help="second-derivative atoms absent from Ricci")
    s.add_argument("--dim", type=int, required=True)
    s.set_defaults(func=cmd_check_absent)

    s = sub.add_parser("prolong", parents=[common], help="second prolongation applied to the field equations")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--field", choices=("generic", "gct", "scaling"), default="generic")
    s.add_argument("--alpha", type=int)
    s.add_argument("--beta", type=int)
    s.set_defaults(func=cmd_prolong)

    s = sub.add_parser("determining", parents=[common], help="extracted determining equations")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--class", dest="cls", choices=("dgddg", "ddg", "dg"), required=True)
    s.set_defaults(func=cmd_determining)

    s = sub.add_parser("deduce", parents=[common], help="proof report for one deduction step")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--step", choices=("h-indep", "phi-structure", "dg"), required=True)
    s.set_defaults(func=cmd_deduce)

    s = sub.add_parser("verify", parents=[common], help="symmetry and collapse checks")
    s.add_argument("what", choices=("gct", "scaling", "ansatz", "two-dim"))
    s.add_argument("--dim", type=int)
    s.add_argument("--lambda", dest="lam", choices=("sym", "symbolic", "0", "zero"), default="sym")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("certify", parents=[common], help="final classification certificate")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--lambda", dest="lam", choices=("sym", "symbolic", "0", "zero"), default="sym")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("oracle", parents=[common], help="random exact-rational evaluation of certified identities")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--target", choices=("ricci", "prolong-gct", "prolong-scaling", "dricci",
                                        "prolong-routes", "determining"), required=True)
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_oracle)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "jobs", 1) < 1:
            raise UsageError("--jobs must be positive")
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"lievac: error: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
