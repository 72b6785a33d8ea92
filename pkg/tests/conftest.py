import numpy as np
import pytest
from hypothesis import settings, strategies as st

from rdi.expr_core import add, const, cos, div, exp, log, mul, sin, sqrt, var

settings.register_profile("rdi", max_examples=60, deadline=None)
settings.load_profile("rdi")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_leaves = st.one_of(
    st.sampled_from([var("x", 0), var("x", 1), var("x", 2)]),
    st.floats(-2.0, 2.0, allow_nan=False).map(lambda c: const(round(c, 3))),
)


def _grow(children):
    # every combinator is total on R^3 so random points are always valid
    return st.one_of(
        st.tuples(children, children).map(lambda ab: add(*ab)),
        st.tuples(children, children).map(lambda ab: mul(*ab)),
        children.map(sin),
        children.map(cos),
        children.map(lambda a: exp(sin(a))),
        children.map(lambda a: sqrt(add(1.0, mul(a, a)))),
        children.map(lambda a: log(add(2.0, cos(a)))),
        children.map(lambda a: div(a, add(1.0, mul(a, a)))),
    )


exprs = st.recursive(_leaves, _grow, max_leaves=8)
points = st.lists(st.floats(-1.5, 1.5, allow_nan=False), min_size=3, max_size=3)


_VERDICTS = {}


@pytest.fixture
def verdict():
    """Record one acceptance line, then fail the test if any part failed."""

    def record(n, title, parts):
        bad = [label for label, ok in parts if not ok]
        status = "PASS" if not bad else "FAIL"
        detail = "; ".join(label for label, _ in parts) if not bad else "failed: " + "; ".join(bad)
        _VERDICTS[n] = f"criterion {n} {status}: {title} ({detail})"
        assert not bad, _VERDICTS[n]

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[n])
