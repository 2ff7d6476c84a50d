import numpy as np
import pytest

from pontryagin_lab.spectral import build_model

# Small shell surrogates for unit tests, one per order k.
SMALL = {
    1: ([-1.0], 3.5),
    2: ([-1.0, -1.0], 5.8),
    3: ([-1.0, 0.5, -1.0], 6.8),
    4: ([-1.0, 0.5, -1.0, -1.0], 8.8),
    5: ([-1.0, 0.5, -1.0, 0.3, -1.0], 10.8),
}

# Surrogates used by the ladder acceptance checks.
ACCEPT = {
    1: (dict(k=1, law="shell", d=3.5, N=40, a=1.0, p_min=0.05, p_max=4.0), [-1.0]),
    2: (dict(law="shell", d=5.8, N=50, a=6.0, p_min=0.1, p_max=5.0), [-1.0, -1.0]),
    3: (dict(law="shell", d=6.2, N=40, a=2.0, p_min=0.05, p_max=3.0), [-1.0, 0.5, -1.0]),
}

LADDER_N = (4, 8, 16, 32, 64, 128, 256)


def small_model(k, N=24):
    g, d = SMALL[k]
    return build_model(dict(law="shell", d=d, a=3.0, p_min=0.05, p_max=4.0, N=N)), g


@pytest.fixture(params=[1, 2, 3, 4, 5], ids=lambda k: f"k{k}")
def small(request):
    return small_model(request.param)


@pytest.fixture(params=[2, 3, 4, 5], ids=lambda k: f"k{k}")
def small_m_pos(request):
    return small_model(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance summary: tests/test_acceptance.py records one line per criterion.
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
