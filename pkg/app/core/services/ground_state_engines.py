# File: app/core/services/ground_state_engines.py
"""
Inner minimisers behind IGroundStateEngine.

GradientFlowEngine: projected, preconditioned gradient flow with heavy-ball
momentum on the orthonormal frame, Loewdin retraction and a Rayleigh-Ritz
rotation inside the occupied span every iteration. Steps that raise the energy
by more than backtrack_slack are rejected.

SCFEngine: diagonalise H_gamma, refill by aufbau, mix densities linearly.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy import linalg as sla

from app.config.solver_config import SolverConfig
from app.core.entities.grid import Grid
from app.core.entities.model import OrbitalSet
from app.core.services.mean_field import (
    density_array,
    eigenpairs_array,
    energy,
    hamiltonian_array,
    potential_array,
)
from app.core.services.orthonormalization import lowdin_array
from app.core.services.spectral_grid import apply_fourier_multiplier, gram_array, integrate, k_squared
from app.core.use_cases.interfaces.iground_state_engine import (
    EngineOutcome,
    IGroundStateEngine,
    IterationObserver,
)

logger = logging.getLogger(__name__)

MIN_STEP = 1e-14


def _stack_energy(values: np.ndarray, orbitals: OrbitalSet, p: float) -> float:
    return energy(orbitals.with_values(values), p)


def _row_norms(values: np.ndarray, grid: Grid) -> np.ndarray:
    flat = values.reshape(values.shape[0], -1)
    return np.sqrt(grid.cell_volume * np.sum(flat * flat, axis=1))


def _project_out(values: np.ndarray, basis: np.ndarray, grid: Grid) -> np.ndarray:
    """Remove the components of every row of values along the orthonormal rows of basis."""
    coeffs = gram_array(values, basis, grid)
    flat = values.reshape(values.shape[0], -1) - coeffs @ basis.reshape(basis.shape[0], -1)
    return flat.reshape(values.shape)


def residuals(values: np.ndarray, occupations: np.ndarray, p: float, grid: Grid) -> Tuple[np.ndarray, np.ndarray]:
    """
    Residual block R = H U - Lambda U with Lambda_ij = <u_i, H u_j>.

    Returns:
        (R, Lambda)
    """
    rho = density_array(values, occupations)
    hu = hamiltonian_array(values, potential_array(rho, p), grid)
    lam = gram_array(values, hu, grid)
    lam = 0.5 * (lam + lam.T)
    flat = hu.reshape(hu.shape[0], -1) - lam @ values.reshape(values.shape[0], -1)
    return flat.reshape(values.shape), lam


class GradientFlowEngine(IGroundStateEngine):
    """Projected preconditioned gradient flow on the orthonormal frame."""

    name = "flow"

    def _ritz_rotate(self, values, velocity, orbitals, p, current_energy, slack):
        """
        Rotate the frame to Ritz vectors of H_gamma in its span, ascending, so the
        highest one carries the fractional occupation. Never raises the energy
        beyond slack; integer fillings leave rho unchanged.
        """
        grid = orbitals.grid
        _, lam = residuals(values, orbitals.occupations, p, grid)
        _, rotation = sla.eigh(lam)
        flat = rotation.T @ values.reshape(values.shape[0], -1)
        rotated = flat.reshape(values.shape)
        rotated_velocity = (rotation.T @ velocity.reshape(velocity.shape[0], -1)).reshape(velocity.shape)
        new_energy = _stack_energy(rotated, orbitals, p)
        if new_energy <= current_energy + slack:
            return rotated, rotated_velocity, new_energy
        return values, velocity, current_energy

    def minimise(
        self,
        start: OrbitalSet,
        p: float,
        config: SolverConfig,
        observer: Optional[IterationObserver] = None,
    ) -> EngineOutcome:
        grid = start.grid
        nu = start.occupations
        values, _ = lowdin_array(start.values, grid)
        current = _stack_energy(values, start, p)
        velocity = np.zeros_like(values)
        tau = config.step_size
        trace = [current]
        converged = False
        max_residual = np.inf
        previous = np.inf
        iteration = 0

        for iteration in range(1, config.max_iter + 1):
            if start.N > 1:
                values, velocity, current = self._ritz_rotate(
                    values, velocity, start, p, current, config.backtrack_slack
                )
            R, lam = residuals(values, nu, p, grid)
            max_residual = float(np.max(_row_norms(R, grid)))
            if max_residual < config.el_tol and abs(previous - current) <= config.energy_tol:
                converged = True
                break

            shift = max(config.precond_shift, -float(np.min(np.diag(lam))))
            Z = apply_fourier_multiplier(R, grid, 1.0 / (shift + k_squared(grid)))
            Z = _project_out(Z, values, grid)
            if config.momentum > 0:
                direction = _project_out(config.momentum * velocity + Z, values, grid)
            else:
                direction = Z

            previous = current
            accepted = False
            while tau >= MIN_STEP:
                trial, _ = lowdin_array(values - tau * direction, grid)
                trial_energy = _stack_energy(trial, start, p)
                if trial_energy <= current + config.backtrack_slack:
                    accepted = True
                    break
                if direction is not Z:
                    # drop the momentum before shrinking the step
                    direction = Z
                    continue
                tau *= 0.5
            if not accepted:
                logger.warning("Flow stalled at iteration %d (residual %.2e)", iteration, max_residual)
                break

            values, current = trial, trial_energy
            velocity = direction
            tau = min(1.1 * tau, config.max_step)
            trace.append(current)
            if observer is not None:
                observer(iteration, values, current)
            if iteration % 500 == 0:
                logger.debug("flow it=%d E=%.12f res=%.2e tau=%.3g", iteration, current, max_residual, tau)

        return EngineOutcome(
            orbitals=start.with_values(values),
            energy=current,
            iterations=iteration,
            converged=converged,
            max_residual=max_residual,
            energy_trace=trace,
        )


class SCFEngine(IGroundStateEngine):
    """Self-consistent field with aufbau refill and linear density mixing."""

    name = "scf"

    def minimise(
        self,
        start: OrbitalSet,
        p: float,
        config: SolverConfig,
        observer: Optional[IterationObserver] = None,
    ) -> EngineOutcome:
        grid = start.grid
        nu = start.occupations
        N = start.N
        rho_in = density_array(start.values, nu)
        values = start.values
        trace = []
        converged = False
        max_residual = np.inf
        current = energy(start, p)
        iteration = 0

        for iteration in range(1, config.scf_max_iter + 1):
            _, phi = eigenpairs_array(potential_array(rho_in, p), grid, N, config.eig_tol, guess=values)
            values = phi
            rho_out = density_array(values, nu)
            current = _stack_energy(values, start, p)
            trace.append(current)
            change = integrate(np.abs(rho_out - rho_in), grid)
            R, _ = residuals(values, nu, p, grid)
            max_residual = float(np.max(_row_norms(R, grid)))
            if observer is not None:
                observer(iteration, values, current)
            if max_residual < config.el_tol:
                converged = True
                break
            if change < config.scf_tol:
                logger.warning("SCF stalled at iteration %d: density change %.2e, residual %.2e", iteration, change, max_residual)
                break
            rho_in = (1.0 - config.mixing) * rho_in + config.mixing * rho_out
            if iteration % 50 == 0:
                logger.debug("scf it=%d E=%.12f drho=%.2e res=%.2e", iteration, current, change, max_residual)

        return EngineOutcome(
            orbitals=start.with_values(values),
            energy=current,
            iterations=iteration,
            converged=converged,
            max_residual=max_residual,
            energy_trace=trace,
        )


class FlowThenSCFEngine(IGroundStateEngine):
    """Flow to a loose residual, then SCF refinement."""

    name = "flow+scf"

    def minimise(
        self,
        start: OrbitalSet,
        p: float,
        config: SolverConfig,
        observer: Optional[IterationObserver] = None,
    ) -> EngineOutcome:
        loose = config.model_copy(update={"el_tol": max(config.el_tol, 1e-4)})
        flow = GradientFlowEngine().minimise(start, p, loose, observer)
        refined = SCFEngine().minimise(flow.orbitals, p, config, observer)
        refined.iterations += flow.iterations
        refined.energy_trace = flow.energy_trace + refined.energy_trace
        return refined


def make_engine(name: str) -> IGroundStateEngine:
    engines = {"flow": GradientFlowEngine, "scf": SCFEngine, "flow+scf": FlowThenSCFEngine}
    try:
        return engines[name]()
    except KeyError:
        raise ValueError(f"unknown engine '{name}'; choose from {sorted(engines)}") from None
