import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from slipchannel import build_grid
from slipchannel.grid import BoundaryData
from slipchannel.solver import run_scenario
from slipchannel.spaces import metric_context


@pytest.fixture(scope="session")
def grid8():
    return build_grid(8, 8, 8, 1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def grid16():
    return build_grid(16, 16, 16, 1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def bc():
    return BoundaryData(nu=1.0, gamma=1.0)


@pytest.fixture(scope="session")
def bc_thin():
    return BoundaryData(nu=0.05, gamma=1.0)


@pytest.fixture(scope="session")
def ctx8(grid8):
    return metric_context(grid8)


@pytest.fixture(scope="session")
def vortex_traj(grid8, bc_thin):
    """Short decaying-vortex trajectory shared by the pressure tests."""
    return run_scenario("vortex_decay", grid8, bc_thin, dt=0.01, n_steps=8,
                        amplitude=0.5)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(123)
