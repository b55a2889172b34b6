# File: app/core/entities/results.py
"""
Solver outputs: the scalar reference state, diagnostics and ground-state results.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.core.entities.grid import Grid, GridFunction
from app.core.entities.model import ModelParams, OrbitalSet


@dataclass(frozen=True, eq=False)
class ScalarGroundState:
    """
    Positive NLS ground state Q at mass 1.

    Attributes:
        d (int): Dimension.
        p (float): Exponent.
        I1 (float): I(d, p, 1) < 0.
        mu1 (float): Multiplier at mass 1 (< 0).
        profile (GridFunction): Q with ||Q||^2 = 1, Q > 0.
        decay_rate (float): sqrt(|mu1|).
        iterations (int): Flow iterations used.
        converged (bool): Residual and energy criteria met.
        el_residual (float): ||(-Delta - Q^(2p-2)) Q - mu Q||.
        virial_residual (float): Relative deviation in the virial identity.
    """

    d: int
    p: float
    I1: float
    mu1: float
    profile: GridFunction
    decay_rate: float
    iterations: int
    converged: bool
    el_residual: float
    virial_residual: float

    @property
    def grid(self) -> Grid:
        return self.profile.grid


class DiagnosticsReport(BaseModel):
    """
    Checks run on a ground state.

    Attributes:
        virial_residual: |T - d(p-1)/(2p) P| / |T| (inf for a flat density).
        virial_ok: virial_residual below the solver's virial_tol.
        trivial_state: Kinetic energy vanishes: the density is flat over the box.
        edge_density: Density on the far face of the torus relative to its maximum.
        el_residuals: ||H u_i - mu_i u_i|| per orbital, mu_i the Rayleigh quotient.
        orthonormality_error: max |<u_i, u_j> - delta_ij|.
        aufbau_verified: Occupied multipliers are the N lowest eigenvalues of H_gamma.
        aufbau_margin: mu_{N+1}(H_gamma) - mu_N.
        near_degenerate: |mu_N - mu_{N+1}| < 1e-8.
        mu_lower_bound: ((2p - d(p-1)) / (2 - d(p-1))) J / lambda.
        mu_upper_bound: J(1) (lambda - N + 1)^(2(p-1)/(d(1+2/d-p))), None without J(1).
        mu_bounds_ok: Both bounds and mu_N < 0 hold (None if not checked).
        decay_rate_fit: Fitted exponential rate of the density tail.
        decay_rate_target: 2 sqrt(|mu_N|).
        decay_fit_skipped: The box held no clean tail window.
        decay_window: (r1, r2) used for the fit.
        local_maxima: Number of strict local maxima of rho above 1e-3 max rho.
    """

    model_config = ConfigDict(from_attributes=True)

    virial_residual: float
    virial_ok: bool = True
    trivial_state: bool = False
    edge_density: float = 0.0
    el_residuals: List[float]
    orthonormality_error: float
    aufbau_verified: bool
    aufbau_margin: float
    near_degenerate: bool
    mu_lower_bound: float
    mu_upper_bound: Optional[float] = None
    mu_bounds_ok: Optional[bool] = None
    decay_rate_fit: Optional[float] = None
    decay_rate_target: float
    decay_fit_skipped: bool = False
    decay_window: Optional[Tuple[float, float]] = None
    local_maxima: int


class BoxCheck(BaseModel):
    """Outcome of re-solving in a larger box."""

    L: float
    n: int
    L_grown: float
    n_grown: int
    energy: float
    energy_grown: float
    relative_change: float
    accepted: bool


@dataclass(eq=False)
class GroundStateResult:
    """
    Converged (or best-so-far) minimiser for one ModelParams.

    Attributes:
        params (ModelParams): Problem instance.
        energy (float): J(lambda).
        orbitals (OrbitalSet): Occupied orbitals in aufbau order.
        mu (np.ndarray): Eigenvalues of H_gamma, N + 1 of them when computed.
        density (GridFunction): rho.
        diagnostics (Optional[DiagnosticsReport]): Filled by compute_diagnostics.
        grid (Grid): The grid of the solve.
        iterations (int): Inner iterations of the best restart.
        converged (bool): Residual criteria met.
        engine (str): Inner engine used.
        restart_energies (List[float]): Energy of every initialisation.
        box_check (Optional[BoxCheck]): Result of the larger-box re-solve.
        flags (List[str]): Warnings raised during the solve.
    """

    params: ModelParams
    energy: float
    orbitals: OrbitalSet
    mu: np.ndarray
    density: GridFunction
    grid: Grid
    iterations: int
    converged: bool
    engine: str = "flow"
    diagnostics: Optional[DiagnosticsReport] = None
    restart_energies: List[float] = field(default_factory=list)
    box_check: Optional[BoxCheck] = None
    flags: List[str] = field(default_factory=list)

    @property
    def N(self) -> int:
        return self.orbitals.N

    @property
    def mu_last(self) -> float:
        """mu_N, the last (possibly partially) filled level."""
        return float(self.mu[self.N - 1])
