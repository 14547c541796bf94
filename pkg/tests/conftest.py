from __future__ import annotations

from fractions import Fraction

from hypothesis import strategies as st

from lievac.exprcore import Expr, var_id

NAMES = ("pa", "pb", "pc", "px", "py")
VIDS = [var_id(n) for n in NAMES]

coeffs = st.fractions(min_value=-20, max_value=20, max_denominator=12)
monomials = st.lists(st.tuples(st.sampled_from(VIDS), st.integers(1, 3)), max_size=3)


@st.composite
def exprs(draw, max_terms: int = 5) -> Expr:
    terms = draw(st.lists(st.tuples(monomials, coeffs), max_size=max_terms))
    out = Expr()
    for mono, c in terms:
        t = Expr.const(c)
        for v, e in mono:
            t = t * Expr.var(v, e)
        out = out + t
    return out


def v(name: str) -> Expr:
    return Expr.var(var_id(name))


def q(num: int, den: int = 1) -> Fraction:
    return Fraction(num, den)


# one summary line per acceptance criterion, taken from the real test outcome
_CRITERIA: dict[int, str] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rpartition("::")[2]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    num = int(name.split("_")[2])
    if report.when != "call" and report.outcome != "failed":
        return
    if _CRITERIA.get(num, "").startswith("FAIL"):
        return
    status = "PASS" if report.outcome == "passed" else "FAIL"
    detail = ""
    for line in report.capstdout.splitlines():
        if line.startswith(f"criterion {num}:"):
            detail = line.partition("(")[2].rstrip(")")
    _CRITERIA[num] = f"{status} ({detail})" if detail else status


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {num}: {_CRITERIA[num]}")
