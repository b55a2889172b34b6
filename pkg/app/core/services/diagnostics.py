# File: app/core/services/diagnostics.py
"""
Checks on a computed ground state: virial identity, Euler-Lagrange residuals,
aufbau filling, multiplier bounds, tail decay and density peaks.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from app.core.entities.grid import GridFunction
from app.core.entities.results import DiagnosticsReport, GroundStateResult
from app.core.services.mean_field import eigenpairs_array, energy_terms, hamiltonian_array, potential_array
from app.core.services.orthonormalization import orthonormality_error
from app.core.services.spectral_grid import circular_center, coordinates, gram_array, radius
from app.core.services.theory_bounds import mu_last_bounds

logger = logging.getLogger(__name__)

PEAK_THRESHOLD = 1e-3
DEGENERACY_TOL = 1e-8
# kinetic energy below this fraction of int rho^p / p marks a flat density
TRIVIAL_KINETIC = 1e-8


def count_local_maxima(rho: GridFunction, rel_threshold: float = PEAK_THRESHOLD) -> int:
    """
    Grid points strictly above all their (periodic, diagonal included) neighbours
    and above rel_threshold * max rho.
    """
    values = rho.values
    footprint = np.ones((3,) * rho.grid.d, dtype=bool)
    footprint[(1,) * rho.grid.d] = False
    neighbours = ndimage.maximum_filter(values, footprint=footprint, mode="wrap")
    peaks = (values > neighbours) & (values > rel_threshold * values.max())
    return int(np.count_nonzero(peaks))


def edge_density_ratio(rho: GridFunction, layers: int = 2) -> float:
    """
    Largest density on the face of the torus opposite the density centre
    (outer `layers` cells along any axis), relative to max rho.
    """
    grid = rho.grid
    center = circular_center(rho.values, grid)
    far = np.zeros(grid.shape, dtype=bool)
    for x, c in zip(coordinates(grid), center):
        dx = np.abs((x - c + grid.L / 2) % grid.L - grid.L / 2)
        far |= dx >= grid.L / 2 - layers * grid.h
    peak = float(rho.values.max())
    if peak <= 0:
        return 0.0
    return float(rho.values[far].max()) / peak


def radial_profile(rho: GridFunction) -> Tuple[np.ndarray, np.ndarray]:
    """
    Average of rho over shells of width h around its centre (symmetrised in 1D).

    Returns:
        (bin centres, averages)
    """
    grid = rho.grid
    center = circular_center(rho.values, grid)
    bins = np.floor(radius(grid, center) / grid.h).astype(int).ravel()
    counts = np.bincount(bins)
    sums = np.bincount(bins, weights=rho.values.ravel())
    filled = counts > 0
    r = (np.arange(counts.size) + 0.5) * grid.h
    return r[filled], sums[filled] / counts[filled]


def fit_decay_rate(
    rho: GridFunction,
    upper: float = 1e-4,
    lower: float = 1e-12,
    reach: float = 0.75,
    min_points: int = 5,
) -> Tuple[Optional[float], Optional[Tuple[float, float]]]:
    """
    Least-squares rate of the density tail.

    Fits log(avg * (1 + r)^(d-1)) against r over the first stretch beyond the
    peak where avg lies in [lower, upper] * max, and r stays within reach * L/2.

    Returns:
        (rate, window); (None, None) when no clean window exists.
    """
    grid = rho.grid
    r, avg = radial_profile(rho)
    peak = avg.max()
    start = int(np.argmax(avg))
    inside = (avg <= upper * peak) & (avg >= lower * peak) & (r <= reach * grid.L / 2)
    inside[:start] = False
    indices = np.flatnonzero(inside)
    if indices.size == 0:
        return None, None
    # first contiguous run
    breaks = np.flatnonzero(np.diff(indices) > 1)
    run = indices[: breaks[0] + 1] if breaks.size else indices
    if run.size < min_points:
        return None, None
    r_fit = r[run]
    y = np.log(avg[run] * (1.0 + r_fit) ** (grid.d - 1))
    slope, _ = np.polyfit(r_fit, y, 1)
    return float(-slope), (float(r_fit[0]), float(r_fit[-1]))


def el_residuals(state: GroundStateResult) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rayleigh quotients mu_i = <u_i, H u_i> and ||H u_i - mu_i u_i|| per orbital.
    """
    grid = state.grid
    values = state.orbitals.values
    hu = hamiltonian_array(values, potential_array(state.density.values, state.params.p), grid)
    mu = np.einsum("ii->i", gram_array(values, hu, grid))
    residual = hu - mu.reshape((-1,) + (1,) * grid.d) * values
    norms = np.sqrt(grid.cell_volume * np.sum(residual.reshape(len(mu), -1) ** 2, axis=1))
    return mu, norms


def compute_diagnostics(
    state: GroundStateResult,
    J1: Optional[float] = None,
    eig_tol: float = 1e-8,
    virial_tol: float = 1e-5,
) -> DiagnosticsReport:
    """
    Diagnostics of a converged or best-so-far state.

    Args:
        state: The ground state.
        J1: J(1) on the same grid, enables the upper multiplier bound.
        eig_tol: Tolerance for eigenpairs and the aufbau comparison.
        virial_tol: Largest accepted relative virial residual.

    Returns:
        DiagnosticsReport with every field filled; residuals are reported even
        for non-converged states.
    """
    params = state.params
    d, p, mass, N = params.d, params.p, params.mass, state.N

    kinetic, interaction = energy_terms(state.orbitals, p)
    trivial = kinetic <= TRIVIAL_KINETIC * abs(interaction) / p
    if trivial:
        logger.warning("State for d=%d p=%.3f mass=%.4g has no kinetic energy (flat density)", d, p, mass)
        virial = float("inf")
    else:
        virial = abs(kinetic - d * (p - 1) / (2 * p) * interaction) / abs(kinetic)

    quotients, residual_norms = el_residuals(state)
    occupied = np.sort(quotients)

    spectrum = np.asarray(state.mu, dtype=float)
    if spectrum.size < N + 1 and state.grid.M > N:
        spectrum, _ = eigenpairs_array(potential_array(state.density.values, p), state.grid, N + 1, eig_tol)
    match_tol = max(10 * eig_tol, 10 * float(np.max(residual_norms)))
    matches = bool(np.max(np.abs(occupied - spectrum[:N])) <= match_tol)
    mu_last = float(occupied[-1])
    if spectrum.size > N:
        margin = float(spectrum[N] - mu_last)
        near_degenerate = abs(spectrum[N] - spectrum[N - 1]) < DEGENERACY_TOL
    else:
        margin, near_degenerate = float("inf"), False
    aufbau = matches and margin >= -eig_tol
    if not aufbau:
        logger.warning("Aufbau check failed for d=%d p=%.3f mass=%.4g (margin %.3e)", d, p, mass, margin)

    lower, upper = mu_last_bounds(d, p, mass, state.energy, J1)
    slack = 1e-6 * abs(mu_last) + eig_tol
    bounds_ok = mu_last < 0 and mu_last >= lower - slack
    if upper is not None:
        bounds_ok = bounds_ok and mu_last <= upper + slack

    target = 2.0 * float(np.sqrt(abs(mu_last)))
    rate, window = fit_decay_rate(state.density)
    if rate is None:
        logger.info("Decay fit skipped: no clean tail window in a box of side %.1f", state.grid.L)

    return DiagnosticsReport(
        virial_residual=virial,
        virial_ok=bool(virial < virial_tol),
        trivial_state=bool(trivial),
        edge_density=edge_density_ratio(state.density),
        el_residuals=[float(x) for x in residual_norms],
        orthonormality_error=orthonormality_error(state.orbitals.values, state.grid),
        aufbau_verified=aufbau,
        aufbau_margin=margin,
        near_degenerate=near_degenerate,
        mu_lower_bound=lower,
        mu_upper_bound=upper,
        mu_bounds_ok=bool(bounds_ok),
        decay_rate_fit=rate,
        decay_rate_target=target,
        decay_fit_skipped=rate is None,
        decay_window=window,
        local_maxima=count_local_maxima(state.density),
    )
