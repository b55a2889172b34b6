# fermi-nls-lab/tests/conftest.py
import pytest

from app.config.solver_config import SolverConfig
from app.core.entities.model import ModelParams
from app.core.services.fermi_solver import solve_ground_state
from app.core.services.scalar_nls import scalar_as_ground_state, solve_scalar
from app.core.services.soliton_oracle import soliton_ground_state_1d
from app.core.services.spectral_grid import build_grid

FAST = SolverConfig(box_check=False, el_tol=1e-8)


@pytest.fixture(scope="session")
def fast_config() -> SolverConfig:
    return FAST


@pytest.fixture(scope="session")
def soliton_13():
    return soliton_ground_state_1d(1.3)


@pytest.fixture(scope="session")
def scalar_13():
    """d=1, p=1.3 scalar ground state on the default box."""
    return solve_scalar(1, 1.3, config=FAST)


@pytest.fixture(scope="session")
def dimer_grid():
    return build_grid(1, 100.0, 1024)


@pytest.fixture(scope="session")
def scalar_13_wide(dimer_grid):
    """Same state on the long box used for dimers, as a one-orbital ground state."""
    return scalar_as_ground_state(solve_scalar(1, 1.3, config=FAST, grid=dimer_grid))


@pytest.fixture(scope="session")
def pair_13_wide(dimer_grid):
    return solve_ground_state(ModelParams(d=1, p=1.3, mass=2.0), FAST, grid=dimer_grid)


@pytest.fixture(scope="session")
def state_13_mass2():
    """d=1, p=1.3, lambda=2 on a box long enough for a clean tail fit."""
    grid = build_grid(1, 60.0, 512)
    return solve_ground_state(ModelParams(d=1, p=1.3, mass=2.0), FAST, grid=grid)
