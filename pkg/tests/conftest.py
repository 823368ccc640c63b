import os

import numpy as np
import pytest

os.environ.setdefault("KGM_THREADS", "1")

from app.functional.domain import build_grid, build_potential, make_field
from app.functional.nonlinearity import PowerNonlinearity
from app.other.seeds import gaussian_bump


@pytest.fixture(scope="session")
def radial_grid():
    return build_grid("radial-ball", 12.0, 240)


@pytest.fixture(scope="session")
def cube_grid():
    return build_grid("periodic-cube", 2.0 * np.pi, 16)


@pytest.fixture(scope="session")
def small_cube():
    return build_grid("periodic-cube", 2.0 * np.pi, 8)


@pytest.fixture(scope="session")
def radial_V(radial_grid):
    return build_potential(radial_grid, 1.0)


@pytest.fixture(scope="session")
def periodic_V(small_cube):
    return build_potential(small_cube, 1.0, amplitude=0.5, cells=2)


@pytest.fixture
def quintic():
    return PowerNonlinearity(p=5.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def radial_bump(radial_grid):
    return make_field(radial_grid, gaussian_bump(radial_grid, 0.0, 1.5, 1.0))


@pytest.fixture
def write_config(tmp_path):
    def write(text: str, name: str = "experiment.ini"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write
