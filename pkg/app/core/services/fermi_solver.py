# File: app/core/services/fermi_solver.py
"""
Ground states J(lambda) of the orthonormal NLS energy.

solve_ground_state picks the box, runs the configured engine from every
initialisation (oscillator ladder first, then seeded random frames), keeps the
lowest energy, diagonalises the final mean-field operator for the aufbau
check, computes diagnostics and optionally repeats the solve in a larger box.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from threading import RLock
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import hermite

from app.config.solver_config import SolverConfig
from app.core.entities.grid import Grid
from app.core.entities.model import ModelParams, OrbitalSet
from app.core.entities.results import BoxCheck, GroundStateResult
from app.core.errors import EigenSolverError
from app.core.services.box_policy import edge_growth_factor, grow_grid, refine_grid, resolve_grid
from app.core.services.diagnostics import compute_diagnostics
from app.core.services.ground_state_engines import make_engine
from app.core.services.mean_field import density, density_array, eigenpairs_array, potential_array
from app.core.services.orthonormalization import lowdin_array
from app.core.services.scalar_nls import solve_scalar
from app.core.services.spectral_grid import (
    apply_fourier_multiplier,
    circular_center,
    coordinates,
    k_squared,
    resample_array,
    translate_array,
)
from app.core.services.theory_bounds import tf_density
from app.core.use_cases.interfaces.iground_state_engine import EngineOutcome, IterationObserver

logger = logging.getLogger(__name__)

# virial residuals beyond this multiple of virial_tol reject the state
VIRIAL_REJECT_FACTOR = 1e3


# ----------------------------------------------------------------------------
# Initialisation
# ----------------------------------------------------------------------------

def ladder_width(grid: Grid, p: float, N: int) -> float:
    """Gaussian width that spreads an N-level oscillator ladder over a cluster at Thomas-Fermi density."""
    d = grid.d
    levels = 2.0 * N ** (1.0 / d) + 1.0
    cluster = 0.5 * (N / tf_density(d, p)) ** (1.0 / d)
    return min(max(1.0, cluster / math.sqrt(levels)), 0.35 * grid.L / math.sqrt(levels))


def ladder_orbitals(grid: Grid, N: int, width: float) -> np.ndarray:
    """
    Hermite functions prod_j H_{a_j}(x_j / w) exp(-x_j^2 / (2 w^2)) for the N lowest
    multi-indices (total degree, then lexicographic), Loewdin-orthonormalised.
    """
    d = grid.d
    top = int(math.ceil(N ** (1.0 / d))) + 1
    indices = sorted(product(range(top + 1), repeat=d), key=lambda a: (sum(a), a))[:N]
    xs = [x / width for x in coordinates(grid)]
    envelope = np.exp(-0.5 * sum(x ** 2 for x in xs))
    stack = np.empty((N,) + grid.shape)
    for i, alpha in enumerate(indices):
        value = envelope.copy()
        for x, degree in zip(xs, alpha):
            coeffs = np.zeros(degree + 1)
            coeffs[degree] = 1.0
            value *= hermite.hermval(x, coeffs)
        stack[i] = value
    values, _ = lowdin_array(stack, grid)
    return values


def random_orbitals(grid: Grid, N: int, width: float, rng: np.random.Generator) -> np.ndarray:
    """Smooth random fields under a Gaussian envelope, orthonormalised. No symmetry is imposed."""
    spread = width * math.sqrt(2.0 * N ** (1.0 / grid.d) + 1.0)
    envelope = np.exp(-0.5 * sum((x / spread) ** 2 for x in coordinates(grid)))
    noise = rng.standard_normal((N,) + grid.shape)
    smooth = apply_fourier_multiplier(noise, grid, np.exp(-k_squared(grid) * width ** 2 / 4))
    values, _ = lowdin_array(envelope * smooth, grid)
    return values


def initial_orbitals(params: ModelParams, grid: Grid, restart: int, seed: int) -> OrbitalSet:
    """Restart 0 is the oscillator ladder; later restarts draw from SeedSequence(seed).spawn."""
    N = params.N
    width = ladder_width(grid, params.p, N)
    if restart == 0:
        values = ladder_orbitals(grid, N, width)
    else:
        child = np.random.SeedSequence(seed).spawn(restart)[restart - 1]
        values = random_orbitals(grid, N, width, np.random.default_rng(child))
    return OrbitalSet(grid, values, params.occupations())


def transfer_orbitals(orbitals: OrbitalSet, grid: Grid) -> OrbitalSet:
    """
    Orbitals moved onto another grid: the density centre is translated to the
    origin, the frame is resampled (zero outside the old box) and re-orthonormalised.
    """
    source = orbitals.grid
    if source == grid:
        return orbitals
    center = circular_center(density_array(orbitals.values, orbitals.occupations), source)
    centred = translate_array(orbitals.values, source, -center)
    values, _ = lowdin_array(resample_array(centred, source, grid), grid)
    return OrbitalSet(grid, values, orbitals.occupations)


def extend_orbitals(orbitals: OrbitalSet, params: ModelParams, grid: Optional[Grid] = None) -> OrbitalSet:
    """Warm start for a new mass: keep the first orbitals, add ladder levels if N grew."""
    N = params.N
    if grid is not None:
        orbitals = transfer_orbitals(orbitals, grid)
    grid = orbitals.grid
    values = orbitals.values[:N]
    if N > orbitals.N:
        extra = ladder_orbitals(grid, N, ladder_width(grid, params.p, N))[orbitals.N:]
        values = np.concatenate([values, extra])
    values, _ = lowdin_array(values, grid)
    return OrbitalSet(grid, values, params.occupations())


# ----------------------------------------------------------------------------
# Reference J(1) for the multiplier bounds
# ----------------------------------------------------------------------------

_reference_lock = RLock()
_reference_energies: Dict[Tuple[Grid, float], float] = {}


def reference_J1(grid: Grid, p: float, config: SolverConfig) -> float:
    """J(1) on the given grid, memoised per (grid, p)."""
    key = (grid, p)
    with _reference_lock:
        if key not in _reference_energies:
            _reference_energies[key] = solve_scalar(grid.d, p, config=config, grid=grid).I1
        return _reference_energies[key]


# ----------------------------------------------------------------------------
# Solves
# ----------------------------------------------------------------------------

def _best_outcome(params: ModelParams, grid: Grid, config: SolverConfig,
                  initial: Optional[OrbitalSet], observer: Optional[IterationObserver]) -> Tuple[EngineOutcome, List[float]]:
    engine = make_engine(config.engine)

    def attempt(restart: int) -> EngineOutcome:
        if restart == 0 and initial is not None:
            start = initial
        else:
            start = initial_orbitals(params, grid, restart, config.seed)
        return engine.minimise(start, params.p, config, observer)

    restarts = range(config.n_restarts)
    if config.threads > 1 and config.n_restarts > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(attempt, restarts))
    else:
        outcomes = [attempt(r) for r in restarts]
    energies = [o.energy for o in outcomes]
    best = outcomes[int(np.argmin(energies))]
    if len(outcomes) > 1:
        logger.info("Restart energies for mass %.4g: %s", params.mass, ", ".join(f"{e:.10f}" for e in energies))
    return best, energies


def solve_on_grid(
    params: ModelParams,
    grid: Grid,
    config: SolverConfig,
    initial: Optional[OrbitalSet] = None,
    observer: Optional[IterationObserver] = None,
) -> GroundStateResult:
    """
    Minimise on a fixed grid without the box check.

    Workflow:
      1. Run the engine from every initialisation and keep the lowest energy.
      2. Compute N + 1 eigenpairs of the final H_gamma.
      3. Fill diagnostics (J(1) on the same grid when check_mu_bounds is set).
    """
    if initial is not None and initial.grid != grid:
        initial = transfer_orbitals(initial, grid)
    best, energies = _best_outcome(params, grid, config, initial, observer)
    orbitals = best.orbitals
    rho = density(orbitals)
    N = orbitals.N
    flags: List[str] = []

    k = min(N + 1, grid.M)
    try:
        mu, _ = eigenpairs_array(potential_array(rho.values, params.p), grid, k, config.eig_tol)
    except EigenSolverError as exc:
        logger.warning("Eigenpairs of the final mean-field operator failed: %s", exc)
        flags.append("eigensolver-failed")
        mu = np.full(k, np.nan)

    result = GroundStateResult(
        params=params,
        energy=best.energy,
        orbitals=orbitals,
        mu=mu,
        density=rho,
        grid=grid,
        iterations=best.iterations,
        converged=best.converged,
        engine=config.engine,
        restart_energies=energies,
        flags=flags,
    )
    if not np.all(np.isfinite(mu)):
        return result

    J1 = reference_J1(grid, params.p, config) if config.check_mu_bounds else None
    report = compute_diagnostics(result, J1=J1, eig_tol=config.eig_tol, virial_tol=config.virial_tol)
    result.diagnostics = report
    if not best.converged:
        flags.append("not-converged")
        logger.warning("Mass %.4g did not converge in %d iterations (residual %.2e)",
                       params.mass, best.iterations, best.max_residual)
    if report.trivial_state:
        flags.append("trivial-state")
        result.converged = False
        logger.error("Mass %.4g ended in a flat density on L=%.1f; rejected", params.mass, grid.L)
    elif not report.virial_ok:
        flags.append("virial-failed")
        if report.virial_residual > VIRIAL_REJECT_FACTOR * config.virial_tol:
            result.converged = False
        logger.warning("Virial residual %.2e above %.1e for mass %.4g on L=%.1f n=%d",
                       report.virial_residual, config.virial_tol, params.mass, grid.L, grid.n)
    if best.converged and not report.aufbau_verified:
        flags.append("aufbau-violation")
    if report.near_degenerate:
        flags.append("near-degenerate")
    logger.info("J(%.4g) = %.10f  d=%d p=%.3f L=%.1f n=%d  iterations=%d converged=%s",
                params.mass, best.energy, params.d, params.p, grid.L, grid.n, best.iterations, result.converged)
    return result


def solve_ground_state(
    params: ModelParams,
    config: Optional[SolverConfig] = None,
    initial: Optional[OrbitalSet] = None,
    grid: Optional[Grid] = None,
    observer: Optional[IterationObserver] = None,
) -> GroundStateResult:
    """
    J(lambda) with orbitals, multipliers and diagnostics.

    Never raises on non-convergence: the best state is returned with
    converged=False and the reason in flags.
    """
    config = config or SolverConfig()
    grid = grid or resolve_grid(config.grid_policy(), params.d, params.p, params.mass)
    result = solve_on_grid(params, grid, config, initial, observer)
    if initial is not None and "trivial-state" in result.flags:
        logger.warning("Warm start for mass %.4g collapsed to a flat density; starting afresh", params.mass)
        result = solve_on_grid(params, grid, config, None, observer)
    if not config.box_check:
        return result
    return _refine_box(params, result, config)


def _next_grid(result: GroundStateResult, config: SolverConfig) -> Tuple[Optional[Grid], str]:
    """
    Grid the measured state asks for, or None when the energy comparison is due.

    A density left on the far face grows the box by the decay of mu_N; a clean
    box whose converged state still misses the virial gets twice the points.
    """
    report = result.diagnostics
    grid = result.grid
    if report.edge_density > config.edge_tol:
        mu_last = float(result.mu[result.N - 1])
        factor = edge_growth_factor(grid, report.edge_density, config.edge_tol, mu_last, config.box_growth)
        return grow_grid(grid, factor), f"edge density {report.edge_density:.1e}"
    engine_converged = "not-converged" not in result.flags and not report.trivial_state
    if not report.virial_ok and engine_converged:
        finer = refine_grid(grid)
        if finer is not None:
            return finer, f"virial residual {report.virial_residual:.1e}"
    return None, ""


def _refine_box(params: ModelParams, result: GroundStateResult, config: SolverConfig) -> GroundStateResult:
    """
    Regrow or refine the grid from the measured state, then confirm the box by
    re-solving in a grown one. Every re-solve is warm-started from the current
    orbitals moved onto the new grid.
    """
    single = config.model_copy(update={"n_restarts": 1, "box_check": False})
    for _ in range(config.max_box_refinements + 1):
        if result.diagnostics is None:
            break
        target, reason = _next_grid(result, config)
        if target is not None:
            logger.warning("Mass %.4g on L=%.1f n=%d: %s; re-solving on L=%.1f n=%d",
                           params.mass, result.grid.L, result.grid.n, reason, target.L, target.n)
            candidate = solve_on_grid(params, target, single, initial=transfer_orbitals(result.orbitals, target))
            candidate.restart_energies = result.restart_energies + candidate.restart_energies
            result = candidate
            continue

        grown = grow_grid(result.grid, config.box_growth)
        larger = solve_on_grid(params, grown, single, initial=transfer_orbitals(result.orbitals, grown))
        change = abs(larger.energy - result.energy) / abs(result.energy)
        check = BoxCheck(
            L=result.grid.L, n=result.grid.n, L_grown=grown.L, n_grown=grown.n,
            energy=result.energy, energy_grown=larger.energy,
            relative_change=change, accepted=change < config.box_check_tol,
        )
        if check.accepted:
            result.box_check = check
            return result
        logger.warning("Box check failed at L=%.1f (relative change %.2e); growing the box", result.grid.L, change)
        larger.restart_energies = result.restart_energies + larger.restart_energies
        result = larger
        result.box_check = check
    result.flags.append("box-check-failed")
    return result


class MassSweep(list):
    """List of GroundStateResult with the masses that failed."""

    def __init__(self, results=(), failures: Optional[Dict[float, str]] = None):
        super().__init__(results)
        self.failures: Dict[float, str] = failures or {}


def sweep_mass(
    d: int,
    p: float,
    masses: Sequence[float],
    config: Optional[SolverConfig] = None,
    warm_start: bool = True,
) -> MassSweep:
    """
    Solve every mass starting from one common grid (sized for the largest mass).

    With warm_start the orbitals of each point seed the next one, so the masses
    run in order. A point whose box was grown moves the sweep onto the grown
    grid, and the seed is resampled onto it. Only converged states seed. Without
    warm_start the masses are spread over config.threads workers.
    Failures are recorded and the sweep continues.
    """
    config = config or SolverConfig()
    masses = list(masses)
    if any(b < a for a, b in zip(masses, masses[1:])):
        raise ValueError("masses must be ascending")
    start_grid = resolve_grid(config.grid_policy(), d, p, max(masses))
    failures: Dict[float, str] = {}

    def solve(mass: float, grid: Grid, initial: Optional[OrbitalSet]) -> Optional[GroundStateResult]:
        try:
            return solve_ground_state(ModelParams(d=d, p=p, mass=mass), config, initial=initial, grid=grid)
        except Exception as exc:
            logger.error("Sweep point mass=%.4g failed: %s", mass, exc)
            failures[mass] = str(exc)
            return None

    results: List[GroundStateResult] = []
    if warm_start:
        grid = start_grid
        seed: Optional[OrbitalSet] = None
        for mass in masses:
            params = ModelParams(d=d, p=p, mass=mass)
            initial = extend_orbitals(seed, params, grid) if seed is not None else None
            outcome = solve(mass, grid, initial)
            if outcome is None:
                continue
            results.append(outcome)
            if outcome.grid.L > grid.L or outcome.grid.n > grid.n:
                logger.info("Sweep continues on L=%.1f n=%d from mass %.4g", outcome.grid.L, outcome.grid.n, mass)
                grid = outcome.grid
            if outcome.converged:
                seed = outcome.orbitals
    else:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            for outcome in pool.map(lambda m: solve(m, start_grid, None), masses):
                if outcome is not None:
                    results.append(outcome)
    return MassSweep(results, failures)
