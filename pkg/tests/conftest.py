import numpy as np
import pytest

from stomlab.markov import FiniteSymmetricChain
from stomlab.network import ElectricalNetwork, walk_generator


@pytest.fixture
def two_state():
    """Unit two-state chain with counting reference measure."""
    return FiniteSymmetricChain(("a", "b"), np.array([[-1.0, 1.0], [1.0, -1.0]]), np.ones(2))


@pytest.fixture
def triangle():
    return ElectricalNetwork.from_edges([(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], root=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def vsrw(net):
    return walk_generator(net, "VSRW")
