import numpy as np
import pytest

from cvarselect.models.casestudies import CoverageInstance, ModInstance
from cvarselect.models.streetnet import StreetEdge, StreetNetwork, StreetNode
from cvarselect.services.coverage import coverage_build
from cvarselect.services.mod import mod_generate
from cvarselect.services.streetnet import synth_city
from cvarselect.settings.config import config


@pytest.fixture
def small_coverage() -> CoverageInstance:
    return coverage_build(
        width=6,
        height=6,
        obstacles=[(2, 2, 3, 3)],
        candidates=[0, 5, 30, 35, 7],
        budget=2,
        seed=3,
    )


@pytest.fixture
def small_mod() -> ModInstance:
    return mod_generate(n_demands=2, n_vehicles=3, seed=5)


@pytest.fixture(scope="session")
def golden_city() -> StreetNetwork:
    return synth_city(rows=config.CITY_ROWS, cols=config.CITY_COLS, seed=config.CITY_SEED)


@pytest.fixture
def line_network() -> StreetNetwork:
    """0 -> 1 -> 2 plus a long direct 0 -> 2 and an isolated node 3."""
    return StreetNetwork(
        nodes=[StreetNode(id=i, x=float(i), y=0.0) for i in range(4)],
        edges=[
            StreetEdge(source=0, target=1, len_m=100.0, maxv_mps=10.0),
            StreetEdge(source=1, target=2, len_m=100.0, maxv_mps=10.0),
            StreetEdge(source=0, target=2, len_m=500.0, maxv_mps=10.0),
        ],
        beta1=1.0,
        beta2=1.0,
        t_max_factor=5.0,
    )


def modular_samples(*, seed: int, n_elements: int, n_samples: int) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.0, 10.0, size=(n_elements, n_samples))
