import numpy as np
import pytest

from cvforge import fixtures as fx


@pytest.fixture(scope="session")
def e1():
    return fx.example_rank1()


@pytest.fixture(scope="session")
def e2():
    return fx.example_semisimple(2, (1.0, 2.0))


@pytest.fixture(scope="session")
def f2():
    return fx.example_frobenius2()


@pytest.fixture(scope="session")
def sg():
    return fx.sinh_gordon_jet()


@pytest.fixture(scope="session")
def sg_unfolded():
    return fx.sinh_gordon_unfolded()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
