import numpy as np
import pytest

from abhms.siegel import random_siegel


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(20240611))


@pytest.fixture(params=[1, 2])
def tau_g12(request, rng):
    return random_siegel(rng, request.param)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.LINES):
            terminalreporter.write_line(line)
