import numpy as np
import pytest

from hdmrc import Topology, build_gain_matrix

DEFAULT_SEED = 20121


def pytest_addoption(parser):
    parser.addoption("--seed", type=int, default=DEFAULT_SEED,
                     help="seed for randomized instance generation")


@pytest.fixture
def seed(request):
    return request.config.getoption("--seed")


@pytest.fixture
def rng(seed):
    return np.random.default_rng(seed)


def random_topology(rng, D):
    """Positions uniform in [0,100]^2, kappa=1, eta=2, P in [1,20], N in [0.005,0.1]."""
    return Topology(
        powers=rng.uniform(1, 20, D - 1),
        noises=rng.uniform(0.005, 0.1, D - 1),
        kappa=1.0,
        eta=2.0,
        positions=rng.uniform(0, 100, (D, 2)),
    )


def random_instances(rng, D, n):
    out = []
    for _ in range(n):
        t = random_topology(rng, D)
        out.append((t, build_gain_matrix(t)))
    return out


def four_node(y2, y3, x=0.0):
    """Relay-position experiment: nodes on the y axis, destination at 100."""
    t = Topology([10.0] * 3, [0.01] * 3, 1.0, 2.0,
                 positions=[(0, 0), (x, y2), (x, y3), (0, 100)])
    return t, build_gain_matrix(t)


def unit_line(D, P=10.0, N=1.0):
    t = Topology([P] * (D - 1), [N] * (D - 1), 1.0, 2.0,
                 positions=[(float(i), 0.0) for i in range(1, D + 1)])
    return t, build_gain_matrix(t)
