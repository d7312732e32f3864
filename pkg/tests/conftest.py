import numpy as np
import pytest

from macpolar.channels import BinaryInputDMC, MacDMC

ACCEPTANCE_LINES = []


def random_mac(rng, m, outputs):
    """Random MAC table with strictly positive entries."""
    P = rng.random((2**m, outputs)) + 0.05
    return MacDMC(P / P.sum(axis=1, keepdims=True))


def random_single(rng, outputs):
    P = rng.random((2, outputs)) + 0.01
    return BinaryInputDMC(P / P.sum(axis=1, keepdims=True))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
