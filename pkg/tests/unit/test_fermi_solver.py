# fermi-nls-lab/tests/unit/test_fermi_solver.py
import math

import numpy as np
import pytest

from app.config.solver_config import SolverConfig
from app.core.entities.model import ModelParams, OrbitalSet
from app.core.services.binding_ledger import one_sided_derivative_gap
from app.core.services.fermi_solver import (
    extend_orbitals,
    initial_orbitals,
    solve_ground_state,
    sweep_mass,
    transfer_orbitals,
)
from app.core.services.orthonormalization import orthonormality_error
from app.core.services.scalar_nls import I_lambda
from app.core.services.spectral_grid import build_grid, circular_center, integrate


@pytest.fixture(scope="module")
def mass_sweep(fast_config):
    return sweep_mass(1, 1.3, [1.0, 1.25, 1.5, 1.75, 2.0], fast_config)


@pytest.mark.unit
def test_one_particle_matches_the_soliton(fast_config, soliton_13):
    result = solve_ground_state(ModelParams(d=1, p=1.3, mass=1.0), fast_config)
    assert result.converged
    assert result.energy == pytest.approx(soliton_13.I1, rel=1e-5)
    assert result.mu_last == pytest.approx(soliton_13.mu1, rel=1e-5)


@pytest.mark.unit
def test_fractional_mass_below_one_follows_scalar_scaling(fast_config, soliton_13):
    result = solve_ground_state(ModelParams(d=1, p=1.3, mass=0.5), fast_config)
    assert result.N == 1
    assert result.orbitals.occupations.tolist() == [0.5]
    assert result.energy == pytest.approx(I_lambda(1, 1.3, soliton_13.I1, 0.5), rel=1e-4)


@pytest.mark.unit
def test_two_particle_state_passes_its_diagnostics(state_13_mass2):
    state = state_13_mass2
    report = state.diagnostics
    assert state.converged
    assert "not-converged" not in state.flags
    assert state.energy < 0
    assert integrate(state.density.values, state.grid) == pytest.approx(2.0, abs=1e-10)
    assert orthonormality_error(state.orbitals.values, state.grid) < 1e-10
    assert state.mu[0] < state.mu[1] < 0
    assert report.virial_residual < 1e-5
    assert report.aufbau_verified
    assert report.mu_bounds_ok
    assert report.mu_lower_bound <= state.mu_last <= report.mu_upper_bound
    assert not report.decay_fit_skipped
    assert report.decay_rate_fit == pytest.approx(report.decay_rate_target, rel=0.15)


@pytest.mark.unit
def test_sweep_starts_on_the_scalar_curve(mass_sweep, soliton_13):
    assert not mass_sweep.failures
    assert mass_sweep[0].energy == pytest.approx(soliton_13.I1, rel=1e-5)


@pytest.mark.unit
def test_energy_decreases_and_is_concave_between_integers(mass_sweep):
    energies = np.array([state.energy for state in mass_sweep])
    assert np.all(np.diff(energies) < 0)
    second = energies[:-2] - 2 * energies[1:-1] + energies[2:]
    assert np.all(second <= 1e-7)


@pytest.mark.unit
def test_two_particles_lie_above_the_scalar_energy(mass_sweep, soliton_13):
    J2 = mass_sweep[-1].energy
    assert J2 > I_lambda(1, 1.3, soliton_13.I1, 2.0)
    assert J2 <= 2 * mass_sweep[0].energy + 1e-6


@pytest.mark.unit
def test_one_sided_derivative_bound(mass_sweep):
    upper, lower = mass_sweep[-1], mass_sweep[-2]
    gap = one_sided_derivative_gap(lower.energy, upper.energy, upper.mu_last, 0.25)
    assert gap <= 1e-8


@pytest.mark.unit
def test_initial_orbitals_are_orthonormal_and_seeded():
    grid = build_grid(2, 20.0, 32)
    params = ModelParams(d=2, p=1.5, mass=4.0)
    ladder = initial_orbitals(params, grid, 0, seed=0)
    first = initial_orbitals(params, grid, 2, seed=9)
    again = initial_orbitals(params, grid, 2, seed=9)
    other = initial_orbitals(params, grid, 1, seed=9)
    for orbitals in (ladder, first, other):
        assert orbitals.N == 4
        assert orthonormality_error(orbitals.values, grid) < 1e-12
    np.testing.assert_array_equal(first.values, again.values)
    assert not np.allclose(first.values, other.values)


@pytest.mark.unit
def test_extend_orbitals_adds_levels(state_13_mass2):
    params = ModelParams(d=1, p=1.3, mass=2.5)
    extended = extend_orbitals(state_13_mass2.orbitals, params)
    assert extended.N == 3
    assert extended.occupations.tolist() == [1.0, 1.0, 0.5]
    assert orthonormality_error(extended.values, extended.grid) < 1e-12


@pytest.mark.unit
def test_restarts_are_reported_and_reproducible():
    grid = build_grid(1, 40.0, 256)
    config = SolverConfig(box_check=False, check_mu_bounds=False, n_restarts=3, threads=2, seed=4)
    params = ModelParams(d=1, p=1.3, mass=2.0)
    first = solve_ground_state(params, config, grid=grid)
    second = solve_ground_state(params, config, grid=grid)
    assert len(first.restart_energies) == 3
    assert first.energy == min(first.restart_energies)
    assert first.restart_energies == second.restart_energies


@pytest.mark.unit
def test_iteration_cap_returns_best_state_with_flag():
    config = SolverConfig(box_check=False, check_mu_bounds=False, max_iter=3)
    result = solve_ground_state(ModelParams(d=1, p=1.3, mass=2.0), config, grid=build_grid(1, 40.0, 256))
    assert not result.converged
    assert "not-converged" in result.flags
    assert result.diagnostics is not None
    assert np.isfinite(result.energy)


@pytest.mark.unit
def test_box_check_accepts_the_default_box(soliton_13):
    result = solve_ground_state(ModelParams(d=1, p=1.3, mass=1.0), SolverConfig(el_tol=1e-8))
    assert result.box_check is not None
    assert result.box_check.accepted
    assert result.box_check.L_grown > result.box_check.L
    assert "box-check-failed" not in result.flags


@pytest.mark.unit
@pytest.mark.slow
def test_scf_refinement_agrees_with_the_flow(state_13_mass2):
    config = SolverConfig(box_check=False, el_tol=1e-8, engine="flow+scf")
    refined = solve_ground_state(ModelParams(d=1, p=1.3, mass=2.0), config, grid=state_13_mass2.grid)
    assert refined.engine == "flow+scf"
    assert refined.energy == pytest.approx(state_13_mass2.energy, abs=1e-7)


@pytest.mark.unit
def test_sweep_rejects_descending_masses(fast_config):
    with pytest.raises(ValueError):
        sweep_mass(1, 1.3, [2.0, 1.0], fast_config)


@pytest.mark.unit
def test_transfer_recentres_and_pads_the_orbitals(state_13_mass2):
    target = build_grid(1, 90.0, 768)
    moved = transfer_orbitals(state_13_mass2.orbitals, target)
    assert moved.grid == target
    assert moved.occupations.tolist() == [1.0, 1.0]
    assert orthonormality_error(moved.values, target) < 1e-12
    rho = np.sum(moved.values ** 2, axis=0)
    assert integrate(rho, target) == pytest.approx(2.0, abs=1e-10)
    assert abs(circular_center(rho, target)[0]) < target.h
    assert transfer_orbitals(state_13_mass2.orbitals, state_13_mass2.grid) is state_13_mass2.orbitals


@pytest.mark.unit
def test_sweep_follows_a_grown_box(soliton_13):
    config = SolverConfig(box_l=20.0, grid_n=256, el_tol=1e-8)
    sweep = sweep_mass(1, 1.3, [1.0, 2.0], config)
    assert not sweep.failures
    assert len(sweep) == 2
    assert sweep[0].grid.L > 20.0
    assert sweep[1].grid.L >= sweep[0].grid.L
    assert all(state.converged for state in sweep)
    assert sweep[0].energy == pytest.approx(soliton_13.I1, rel=1e-5)
    assert sweep[1].energy < 2 * sweep[0].energy


@pytest.mark.unit
def test_sweep_seeds_only_from_converged_states():
    grid = build_grid(1, 40.0, 256)
    config = SolverConfig(box_l=40.0, grid_n=256, box_check=False, check_mu_bounds=False, max_iter=3)
    sweep = sweep_mass(1, 1.3, [1.0, 2.0], config)
    assert not any(state.converged for state in sweep)
    fresh = solve_ground_state(ModelParams(d=1, p=1.3, mass=2.0), config, grid=grid)
    assert sweep[1].energy == fresh.energy


@pytest.mark.unit
def test_default_box_meets_the_virial_identity():
    result = solve_ground_state(ModelParams(d=1, p=1.3, mass=4.0), SolverConfig(el_tol=1e-8))
    report = result.diagnostics
    assert result.converged
    assert report.virial_residual < 1e-5
    assert report.edge_density < 1e-8
    assert "virial-failed" not in result.flags
    assert "box-check-failed" not in result.flags


@pytest.mark.unit
def test_cramped_box_is_flagged():
    config = SolverConfig(box_l=10.0, grid_n=128, box_check=False, check_mu_bounds=False, el_tol=1e-8)
    result = solve_ground_state(ModelParams(d=1, p=1.3, mass=2.0), config)
    report = result.diagnostics
    assert report.edge_density > 1e-4
    assert not report.virial_ok
    assert "virial-failed" in result.flags


@pytest.mark.unit
def test_flat_warm_start_is_replaced_by_a_fresh_solve(soliton_13):
    grid = build_grid(1, 40.0, 256)
    params = ModelParams(d=1, p=1.3, mass=1.0)
    uniform = OrbitalSet(grid, np.full((1, 256), 1.0 / math.sqrt(40.0)), params.occupations())
    config = SolverConfig(box_check=False, check_mu_bounds=False, el_tol=1e-8)
    result = solve_ground_state(params, config, initial=uniform, grid=grid)
    assert result.converged
    assert "trivial-state" not in result.flags
    assert not result.diagnostics.trivial_state
    assert result.energy == pytest.approx(soliton_13.I1, rel=1e-4)


@pytest.mark.unit
def test_every_flow_step_keeps_the_frame_orthonormal_and_lowers_the_energy():
    grid = build_grid(1, 40.0, 256)
    config = SolverConfig(box_check=False, check_mu_bounds=False, n_restarts=1, el_tol=1e-7)
    errors, trace = [], []

    def observer(iteration, values, energy):
        errors.append(orthonormality_error(values, grid))
        trace.append(energy)

    result = solve_ground_state(ModelParams(d=1, p=1.3, mass=2.5), config, grid=grid, observer=observer)
    assert result.converged
    assert len(trace) >= 10
    assert max(errors) < 1e-10
    # the Ritz rotation between steps may use the slack once more
    assert np.all(np.diff(trace) <= 2 * config.backtrack_slack)
    assert trace[-1] == pytest.approx(result.energy, abs=1e-9)
