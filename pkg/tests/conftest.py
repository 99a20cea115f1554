import numpy as np
import pytest
from hypothesis import settings

from spectral_bandits.graph import gen_barabasi_albert, gen_erdos_renyi, laplacian
from spectral_bandits.spectral import eigendecompose, regularize

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def ba100():
    g = gen_barabasi_albert(100, 3, seed=7)
    return g, eigendecompose(laplacian(g))


@pytest.fixture(scope="session")
def small_world():
    """A connected 30-node graph with its basis and lambda=0.01 spectrum."""
    g = gen_erdos_renyi(30, 0.3, seed=3)
    assert g.is_connected()
    basis = eigendecompose(laplacian(g))
    return g, basis, regularize(basis, 0.01)


def random_unit_vectors(rng, count, dim):
    x = rng.normal(size=(count, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


#: One line per acceptance criterion, filled by test_acceptance.py.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
