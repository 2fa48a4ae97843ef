import numpy as np
import pytest

from marketscale.fixtures import fixture_paths


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def quote_files():
    return [str(p) for p in fixture_paths()]


def seeded(seed):
    return np.random.default_rng(np.random.SeedSequence([seed]))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
