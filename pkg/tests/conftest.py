import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gammalogit import Dataset

settings.register_profile(
    "default", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def make_data(n=200, p=3, seed=0, beta=None, noise=0.0):
    """Logistic data with an intercept in the last column."""
    rng = np.random.default_rng(seed)
    X = np.column_stack([rng.normal(size=(n, p - 1)), np.ones(n)])
    beta = np.linspace(1.0, -0.5, p) if beta is None else np.asarray(beta, float)
    y = (rng.random(n) < 1 / (1 + np.exp(-X @ beta))).astype(int)
    if noise:
        flip = rng.random(n) < noise
        y = np.where(flip, 1 - y, y)
    return Dataset(X, y)


@pytest.fixture
def data():
    return make_data()


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
