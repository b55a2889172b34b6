# File: app/core/services/scalar_nls.py
"""
Scalar NLS at mass one: the positive ground state Q, I(d, p, 1), mu, and the
exact scaling laws in the mass.
"""

import logging
from typing import Optional

import numpy as np

from app.config.solver_config import GridPolicy, SolverConfig
from app.core.entities.grid import Grid, GridFunction
from app.core.entities.model import ModelParams, OrbitalSet, check_exponent
from app.core.entities.results import GroundStateResult, ScalarGroundState
from app.core.errors import ParameterError
from app.core.services.box_policy import resolve_grid
from app.core.services.mean_field import hamiltonian_array
from app.core.services.spectral_grid import (
    apply_fourier_multiplier,
    coordinates,
    integrate,
    k_squared,
    kinetic_array,
)
from app.core.services.theory_bounds import scaling_exponent

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------------
# Scaling laws
# ----------------------------------------------------------------------------

def _check_mass(mass: float) -> None:
    if mass < 0:
        raise ParameterError(f"mass must be nonnegative, got {mass}")


def I_lambda(d: int, p: float, I1: float, mass: float) -> float:
    """I(d, p, lambda) = I1 lambda^(1 + (2/d)(p-1)/(1 + 2/d - p))."""
    exponent = 1.0 + scaling_exponent(d, p)
    _check_mass(mass)
    return 0.0 if mass == 0 else I1 * mass ** exponent


def mu_lambda(d: int, p: float, mu1: float, mass: float) -> float:
    """mu at mass lambda: mu1 lambda^((2/d)(p-1)/(1 + 2/d - p))."""
    exponent = scaling_exponent(d, p)
    _check_mass(mass)
    return 0.0 if mass == 0 else mu1 * mass ** exponent


# ----------------------------------------------------------------------------
# Normalised gradient flow
# ----------------------------------------------------------------------------

def _norm(u: np.ndarray, grid: Grid) -> float:
    return float(np.sqrt(grid.cell_volume * np.sum(u * u)))


def _energy(u: np.ndarray, grid: Grid, p: float) -> float:
    return float(kinetic_array(u, grid)) - integrate(np.abs(u) ** (2 * p), grid) / p


def solve_scalar(
    d: int,
    p: float,
    grid_policy: Optional[GridPolicy] = None,
    config: Optional[SolverConfig] = None,
    grid: Optional[Grid] = None,
) -> ScalarGroundState:
    """
    Minimise E(u) = int |grad u|^2 - (1/p) int |u|^(2p) over ||u|| = 1.

    Workflow:
      1. Resolve the grid from the policy (or use the given grid) and start
         from a centred Gaussian of width 1.
      2. Step u <- normalise(u - tau P r) with r = H u - mu u the projected
         gradient and P = (shift + |k|^2)^(-1); backtrack until the energy
         does not increase, grow tau after each accepted step.
      3. Stop when ||r|| < el_tol and the energy change is below energy_tol.
      4. Return |u| (the positive ground state), the energy and mu as the
         Rayleigh quotient.

    Raises:
        ParameterError: p outside (1, 1 + 2/d).
    """
    check_exponent(d, p)
    config = config or SolverConfig()
    if grid is None:
        grid = resolve_grid(grid_policy or config.grid_policy(), d, p, 1.0)
    h_d = grid.cell_volume

    r2 = sum(x ** 2 for x in coordinates(grid))
    u = np.exp(-r2 / 2.0)
    u /= _norm(u, grid)
    energy = _energy(u, grid, p)
    tau = config.step_size
    converged = False
    residual_norm = np.inf
    mu = 0.0
    iteration = 0

    for iteration in range(1, config.max_iter + 1):
        hu = hamiltonian_array(u, np.abs(u) ** (2 * p - 2), grid)
        mu = h_d * float(np.sum(u * hu))
        residual = hu - mu * u
        residual_norm = _norm(residual, grid)
        if iteration > 1 and residual_norm < config.el_tol and abs(energy - previous) <= config.energy_tol:
            converged = True
            break

        shift = max(config.precond_shift, -mu)
        direction = apply_fourier_multiplier(residual, grid, 1.0 / (shift + k_squared(grid)))
        direction -= h_d * float(np.sum(u * direction)) * u

        previous = energy
        while True:
            trial = u - tau * direction
            trial /= _norm(trial, grid)
            trial_energy = _energy(trial, grid, p)
            if trial_energy <= energy + config.backtrack_slack:
                u, energy = trial, trial_energy
                tau = min(1.25 * tau, config.max_step)
                break
            tau *= 0.5
            if tau < 1e-14:
                break
        if tau < 1e-14:
            logger.warning("Scalar flow stalled at iteration %d (residual %.2e)", iteration, residual_norm)
            break
        if iteration % 500 == 0:
            logger.debug("scalar d=%d p=%.3f it=%d E=%.12f res=%.2e", d, p, iteration, energy, residual_norm)

    if u.sum() < 0:
        u = -u
    profile = np.abs(u)
    kinetic = float(kinetic_array(profile, grid))
    interaction = integrate(profile ** (2 * p), grid)
    virial = abs(kinetic - d * (p - 1) / (2 * p) * interaction) / abs(kinetic)

    if not converged:
        logger.warning("Scalar solve d=%d p=%.4f did not converge (residual %.2e)", d, p, residual_norm)
    logger.info("Scalar ground state d=%d p=%.4f: I1=%.10f mu=%.8f (%d iterations)", d, p, energy, mu, iteration)
    return ScalarGroundState(
        d=d,
        p=p,
        I1=energy,
        mu1=mu,
        profile=GridFunction(grid, profile),
        decay_rate=float(np.sqrt(abs(mu))),
        iterations=iteration,
        converged=converged,
        el_residual=residual_norm,
        virial_residual=virial,
    )


def scalar_as_ground_state(state: ScalarGroundState) -> GroundStateResult:
    """View the mass-one scalar solution as a one-orbital ground state."""
    orbitals = OrbitalSet(state.grid, state.profile.values[None, ...], np.ones(1))
    return GroundStateResult(
        params=ModelParams(d=state.d, p=state.p, mass=1.0),
        energy=state.I1,
        orbitals=orbitals,
        mu=np.array([state.mu1]),
        density=GridFunction(state.grid, state.profile.values ** 2),
        grid=state.grid,
        iterations=state.iterations,
        converged=state.converged,
        engine="scalar-flow",
    )
