import numpy as np
import pytest

from fetchbot import mapping
from fetchbot.scenario import builtin_scenario


@pytest.fixture(scope="session")
def corridor_scenario():
    return builtin_scenario("corridor_fetch.yaml")


@pytest.fixture(scope="session")
def replan_scenario():
    return builtin_scenario("corridor_replan.yaml")


@pytest.fixture(scope="session")
def corridor_grid(corridor_scenario):
    """Static map of the corridor world, built once per session (the build
    is seed-independent because the survey runs noiseless)."""
    world = corridor_scenario.make_world(0)
    return mapping.build_static_map(
        world,
        resolution=corridor_scenario.map.resolution,
        margin=corridor_scenario.map.margin,
        scan_sigma=corridor_scenario.map.build_sigma,
        sweep_spacing=corridor_scenario.map.sweep_spacing,
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
