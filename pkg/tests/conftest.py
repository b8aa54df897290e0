import numpy as np
import pytest
from hypothesis import settings

from artifact.harness import cached_partition

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_partition():
    """Nine-point partition on [-2, 2]^2 at scale r = 1; cheap enough for unit tests."""
    return cached_partition(2, 2.0, 9, 1.0, 0.1, 16, 0)


@pytest.fixture(scope="session")
def grid_partition():
    """The 121-point partition on [-5, 5]^2 shared by the sup-partition and core checks."""
    return cached_partition(2, 5.0, 121, 1.0, 0.1, 16, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
