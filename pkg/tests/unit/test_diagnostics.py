# fermi-nls-lab/tests/unit/test_diagnostics.py
import math

import numpy as np
import pytest

from app.config.solver_config import SolverConfig
from app.core.entities.model import ModelParams, OrbitalSet
from app.core.services.diagnostics import compute_diagnostics, count_local_maxima, edge_density_ratio
from app.core.services.fermi_solver import solve_on_grid
from app.core.services.spectral_grid import build_grid, sample

PLAIN = SolverConfig(box_check=False, check_mu_bounds=False, el_tol=1e-8)


@pytest.fixture(scope="module")
def flat_state():
    """A uniform orbital on the torus: a critical point of the flow with no kinetic energy."""
    grid = build_grid(1, 40.0, 256)
    params = ModelParams(d=1, p=1.3, mass=1.0)
    uniform = OrbitalSet(grid, np.full((1, 256), 1.0 / math.sqrt(40.0)), params.occupations())
    return solve_on_grid(params, grid, PLAIN, initial=uniform)


@pytest.mark.unit
def test_edge_density_of_an_exponential_tail():
    grid = build_grid(1, 20.0, 256)
    rho = sample(grid, lambda x: np.exp(-0.5 * np.abs(x)))
    assert edge_density_ratio(rho) == pytest.approx(math.exp(-0.5 * (10.0 - 2 * grid.h)), rel=0.05)
    narrow = sample(grid, lambda x: np.exp(-((x - 3.0) ** 2)))
    assert edge_density_ratio(narrow) < 1e-30


@pytest.mark.unit
def test_edge_density_follows_the_cluster_across_the_boundary():
    grid = build_grid(2, 20.0, 64)
    # centred on the corner of the box
    rho = sample(grid, lambda x, y: np.exp(-(((x + 10.0) % 20.0 - 10.0) ** 2 + y ** 2)))
    assert edge_density_ratio(rho) < 1e-20
    assert count_local_maxima(rho) == 1


@pytest.mark.unit
def test_clean_state_passes_the_box_checks(state_13_mass2):
    report = state_13_mass2.diagnostics
    assert report.virial_ok
    assert not report.trivial_state
    assert report.edge_density < 1e-8


@pytest.mark.unit
def test_flat_density_is_a_trivial_state(flat_state):
    report = flat_state.diagnostics
    assert report.trivial_state
    assert not report.virial_ok
    assert math.isinf(report.virial_residual)
    assert report.edge_density == pytest.approx(1.0)
    assert "trivial-state" in flat_state.flags
    assert not flat_state.converged


@pytest.mark.unit
def test_virial_tolerance_is_configurable(state_13_mass2):
    strict = compute_diagnostics(state_13_mass2, virial_tol=1e-30)
    assert not strict.virial_ok
    assert strict.virial_residual == state_13_mass2.diagnostics.virial_residual
