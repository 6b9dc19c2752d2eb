import warnings

import numpy as np
import pytest

from dexroute import build_graph
from dexroute.synthetic import diamond_records, path_records, synthetic_snapshot, triangle_records


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def diamond_graph():
    return build_graph(diamond_records())


@pytest.fixture
def path_graph():
    return build_graph(path_records())


@pytest.fixture
def triangle_graph():
    return build_graph(triangle_records())


@pytest.fixture(scope="session")
def synth():
    return synthetic_snapshot()


@pytest.fixture(autouse=True)
def _quiet_round_cap():
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        yield
