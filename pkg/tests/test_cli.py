from __future__ import annotations

import json
import subprocess
import sys

import pytest

from lievac.cli import OUT_DIR_ENV, main, write_atomic


@pytest.fixture(autouse=True)
def _no_out_dir(monkeypatch):
    monkeypatch.delenv(OUT_DIR_ENV, raising=False)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ricci_json(capsys):
    code, out, _ = run(capsys, "ricci", "--dim", "2", "--alpha", "1", "--beta", "2", "--jobs", "1")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == 1 and doc["dim"] == 2
    assert [(c["alpha"], c["beta"]) for c in doc["components"]] == [(1, 2)]


def test_ricci_text_and_parallel_agree(capsys):
    _, serial, _ = run(capsys, "ricci", "--dim", "2", "--format", "text", "--jobs", "1")
    _, par, _ = run(capsys, "ricci", "--dim", "2", "--format", "text", "--jobs", "2")
    assert serial == par and serial.startswith("R[1,1] = ")


def test_ricci_above_cap_is_allowed(capsys):
    code, out, _ = run(capsys, "ricci", "--dim", "5", "--alpha", "1", "--beta", "1", "--jobs", "1")
    assert code == 0 and json.loads(out)["dim"] == 5


@pytest.mark.parametrize("argv", [
    ["verify", "gct", "--dim", "5"],
    ["prolong", "--dim", "5"],
    ["certify", "--dim", "6"],
    ["ricci", "--dim", "1"],
    ["ricci", "--dim", "2", "--alpha", "3", "--beta", "1"],
    ["ricci", "--dim", "2", "--alpha", "1"],
    ["verify", "nonsense", "--dim", "2"],
    ["verify", "two-dim", "--dim", "3"],
    ["oracle", "--dim", "2", "--target", "ricci", "--samples", "0"],
    ["ricci", "--dim", "2", "--jobs", "0"],
    [],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_prolong_and_determining(capsys):
    code, out, _ = run(capsys, "prolong", "--dim", "2", "--field", "scaling", "--jobs", "1")
    doc = json.loads(out)
    assert code == 0 and all("lam" in c["expr"] for c in doc["components"])
    code, out, _ = run(capsys, "determining", "--dim", "2", "--class", "dgddg")
    doc = json.loads(out)
    assert code == 0 and doc["count"] == len(doc["constraints"]) > 0


@pytest.mark.parametrize("step", ["h-indep", "phi-structure", "dg"])
def test_deduce(capsys, step):
    code, out, _ = run(capsys, "deduce", "--dim", "2", "--step", step)
    assert code == 0 and json.loads(out)["ok"]


@pytest.mark.parametrize("what", ["gct", "scaling", "ansatz", "two-dim"])
def test_verify(capsys, what):
    argv = ["verify", what, "--jobs", "1"] + ([] if what == "two-dim" else ["--dim", "2"])
    code, out, _ = run(capsys, *argv)
    assert code == 0 and json.loads(out)["ok"]


def test_check_absent(capsys):
    code, out, _ = run(capsys, "check-absent", "--dim", "3")
    assert code == 0 and json.loads(out)["ok"]


def test_oracle_command(capsys):
    code, out, _ = run(capsys, "oracle", "--dim", "2", "--target", "ricci", "--samples", "3", "--jobs", "2")
    doc = json.loads(out)
    assert code == 0 and doc["ok"] and doc["samples"] == 3 and len(doc["results"]) == doc["identities"]


def test_certify_out_and_env(tmp_path, monkeypatch, capsys):
    out = tmp_path / "cert.json"
    assert run(capsys, "certify", "--dim", "2", "--lambda", "0", "--out", str(out))[0] == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == 1 and doc["lambda"] == "zero" and doc["ok"]
    assert {s["status"] for s in doc["steps"]} == {"pass"}
    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path / "env"))
    assert run(capsys, "certify", "--dim", "2")[0] == 0
    assert (tmp_path / "env" / "certificate-dim2-lambda-symbolic.json").exists()
    assert run(capsys, "certify", "--dim", "2", "--out", "rel.json")[0] == 0
    assert (tmp_path / "env" / "rel.json").exists()
    sym = json.loads((tmp_path / "env" / "rel.json").read_text())
    assert sym["conclusion"] != doc["conclusion"]
    assert not list(tmp_path.rglob("*.tmp"))


def test_failed_check_exits_1(capsys, monkeypatch):
    from lievac import liealg

    monkeypatch.setattr(liealg, "two_dim_branch", lambda ctx: {"dim": 2, "ok": False})
    assert run(capsys, "verify", "two-dim")[0] == 1


def test_write_atomic_replaces(tmp_path):
    p = tmp_path / "sub" / "a.json"
    write_atomic(p, "one\n")
    write_atomic(p, "two\n")
    assert p.read_text() == "two\n"
    assert [q.name for q in p.parent.iterdir()] == ["a.json"]


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "lievac", "check-absent", "--dim", "2", "--format", "text"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "ok: True" in res.stdout
