import math

import numpy as np
import pytest

from rpr_singularity.config import example_input
from rpr_singularity.homotopy import TrackerSettings
from rpr_singularity.model import Configuration

HALF_PI = math.pi / 2

# closest singular configurations at phi = pi/2, one column per interpretation
CLOSEST_CONFIGURATIONS = {
    "triangle:rigid": [
        (0.1302373, -0.2775441), (11.114982, 0.3015644), (4.7547798, 6.9759796),
        (1.5271323, 1.8504855), (2.3464552, 4.4803586), (1.6264123, 2.1691557),
    ],
    "triangle:plate": [
        (0.3921934, -0.1187466), (11.059373, -0.0179767), (4.5484332, 7.1367234),
        (1.5195164, 1.7968665), (2.3515667, 4.5449419), (1.6289168, 2.1581914),
    ],
    "triangle:triangle": [
        (0.1960967, -0.0593733), (11.029686, -0.0089883), (4.7742166, 7.0683617),
        (1.5195164, 1.7968665), (2.3515667, 4.5449419), (1.6289168, 2.1581914),
    ],
}
CLOSEST_DISTANCES = {
    "triangle:rigid": 0.5735791,
    "triangle:plate": 0.5195729,
    "triangle:triangle": 0.46807561,
}
REGRESSION_LINE = (0.9570920262, -0.2897841482, -0.9336136247)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full homotopy solves")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full ab-initio and sweep solves")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def example():
    return example_input()


@pytest.fixture
def design(example):
    return example.design


@pytest.fixture
def motion(example):
    return example.motion


@pytest.fixture
def settings():
    return TrackerSettings()


@pytest.fixture
def closest_configurations():
    return {label: Configuration(np.array(points)) for label, points in CLOSEST_CONFIGURATIONS.items()}
