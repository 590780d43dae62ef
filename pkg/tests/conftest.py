import numpy as np
import pytest

from steerage.geometry import random_unit_vectors


@pytest.fixture
def rng():
    return np.random.default_rng(20170615)


@pytest.fixture
def directions(rng):
    return random_unit_vectors(rng, 200)


def random_valid_state(rng):
    """Random two-qubit state as a mixture of a random pure state and noise."""
    psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    psi /= np.linalg.norm(psi)
    w = rng.random()
    return w * np.outer(psi, psi.conj()) + (1 - w) * np.eye(4) / 4


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
