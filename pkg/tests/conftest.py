import numpy as np
import pytest

from pyrdepth.network import NetworkConfig, build
from pyrdepth.weights import random_init

DEFAULT_SEED = 0


@pytest.fixture(scope="session")
def default_config():
    return NetworkConfig()


@pytest.fixture(scope="session")
def default_container(default_config):
    return random_init(default_config, DEFAULT_SEED)


@pytest.fixture(scope="session")
def default_net(default_config, default_container):
    return build(default_config, default_container)


@pytest.fixture(scope="session")
def small_config():
    return NetworkConfig(levels=3, encoder_channels=(16, 32, 64))


@pytest.fixture(scope="session")
def small_net(small_config):
    return build(small_config, random_init(small_config, DEFAULT_SEED))


def rand_image(rng, c, h, w, lo=0.0, hi=1.0):
    return rng.uniform(lo, hi, size=(1, c, h, w)).astype(np.float32)
