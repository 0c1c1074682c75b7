import math
import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from renyisim.distributions import bsc, random_channel

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def bsc01():
    return bsc(0.1)


@pytest.fixture(scope="session")
def small_channels():
    gen = np.random.default_rng(7)
    return [random_channel(gen, int(gen.integers(2, 5)), int(gen.integers(2, 5))) for _ in range(20)]


def close(a, b, tol):
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol


ACCEPTANCE = []


@pytest.fixture
def verdict():
    """Record one acceptance line; the summary hook prints them all at the end."""

    def record(number, ok, detail):
        ACCEPTANCE.append((number, "PASS" if ok else "FAIL", detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, detail in sorted(ACCEPTANCE, key=lambda e: (int(e[0].rstrip("ab()")), e[0])):
        terminalreporter.write_line(f"{status} criterion {number}: {detail}")
