import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from coninv.linalg_core import AffineMap

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def cvec(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def cmat(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def random_affine(rng, n, cap=1e3):
    while True:
        A = cmat(rng, n)
        if np.linalg.cond(A) <= cap:
            return AffineMap(A, cvec(rng, n))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
