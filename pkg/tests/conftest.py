import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from thinlaw.dist import DiscreteDist

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ORACLES = json.loads((Path(__file__).parent / "oracles" / "values.json").read_text())


@pytest.fixture(scope="session")
def oracles():
    return ORACLES


@st.composite
def finite_dists(draw, max_size=25, max_offset=6):
    """Random finitely supported laws (no truncated mass)."""
    size = draw(st.integers(1, max_size))
    weights = draw(
        st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=size, max_size=size).filter(
            lambda w: sum(w) > 1e-3
        )
    )
    w = np.asarray(weights)
    offset = draw(st.integers(0, max_offset))
    return DiscreteDist(offset, w / w.sum(), 0.0)


#: acceptance verdicts, filled by test_acceptance and echoed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
