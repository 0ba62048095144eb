import numpy as np
import pytest

from dimple.linalg import orthonormalize

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_basis(rng, n, k):
    return orthonormalize(rng.standard_normal((n, k)))


def random_signed_adjacency(rng, n, density=0.3):
    A = np.zeros((n, n), dtype=np.int8)
    iu = np.triu_indices(n, 1)
    vals = rng.choice([-1, 0, 1], size=iu[0].size, p=[density / 2, 1 - density, density / 2])
    A[iu] = vals
    return A + A.T
