import numpy as np
import pytest

from eigengeo.acceptance import random_family


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def complex_family(rng):
    return random_family(rng, 4, 2, hermitian=False)


@pytest.fixture
def hermitian_family(rng):
    return random_family(rng, 4, 2, hermitian=True)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_eigengeo_acceptance", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("]", 1)[1].split(".", 1)[0])):
            terminalreporter.write_line(line)
