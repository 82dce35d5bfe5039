import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from infopricing.core import ValueDistribution

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@st.composite
def distributions(draw, max_k=5, max_m=3, min_m=1, max_value=20):
    """Small distributions with integer values and integer weights."""
    m = draw(st.integers(min_m, max_m))
    point = st.tuples(*[st.integers(0, max_value)] * m)
    pts = draw(st.lists(point, min_size=1, max_size=max_k, unique=True))
    w = draw(st.lists(st.integers(1, 9), min_size=len(pts), max_size=len(pts)))
    w = np.array(w, dtype=float)
    return ValueDistribution(np.array(pts, dtype=float), w / w.sum())


@st.composite
def kernels(draw, K, max_s=4):
    """Random row-stochastic K x S kernel."""
    S = draw(st.integers(1, max_s))
    raw = draw(st.lists(st.lists(st.integers(0, 5), min_size=S, max_size=S), min_size=K, max_size=K))
    raw = np.array(raw, dtype=float)
    raw[raw.sum(axis=1) == 0, 0] = 1.0
    return raw / raw.sum(axis=1, keepdims=True)


@pytest.fixture
def ex1():
    from infopricing.instances import example_complex_info

    return example_complex_info()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.summary_line(number, mod.RESULTS[number]))
