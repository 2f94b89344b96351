import sys
from pathlib import Path

from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from virial_lab.opalg import CanonicalFactor, GaussianRational, Kind, OperatorExpr, ScalarCoeff  # noqa: E402

FACTORS = [CanonicalFactor(k, i, a) for k in Kind for i in (1, 2) for a in (1, 2)]


@st.composite
def monomial_exprs(draw, max_factors=4):
    c = ScalarCoeff(
        GaussianRational(draw(st.integers(-3, 3)), draw(st.integers(-2, 2))),
        draw(st.integers(0, 1)),
        draw(st.integers(-1, 1)),
    )
    out = OperatorExpr.scalar(c)
    for f in draw(st.lists(st.sampled_from(FACTORS), max_size=max_factors)):
        out = out * OperatorExpr.factor(f)
    return out


@st.composite
def exprs(draw, max_terms=3, max_factors=4):
    out = OperatorExpr()
    for m in draw(st.lists(monomial_exprs(max_factors), min_size=1, max_size=max_terms)):
        out = out + m
    return out


def pytest_addoption(parser):
    parser.addoption("--update-golden", action="store_true", help="rewrite tests/golden from the current code")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
