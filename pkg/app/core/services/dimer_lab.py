# File: app/core/services/dimer_lab.py
"""
Dimer trial states: two ground states placed R apart along e1, orthonormalised
together through S_R^(-1/2), and the interaction energy
E(frame) - E(left) - E(right) as a function of R.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, ndimage

from app.config.solver_config import SolverConfig
from app.core.entities.dimer import AttractionCondition, DimerTrial, GapPoint, InteractionCurve, InteractionPoint
from app.core.entities.grid import Grid
from app.core.entities.model import OrbitalSet, check_exponent
from app.core.entities.results import GroundStateResult
from app.core.errors import BoxTooSmallError, GridError, NLSLabError, ParameterError
from app.core.services.fermi_solver import sweep_mass
from app.core.services.mean_field import energy
from app.core.services.orthonormalization import gram_matrix, inverse_sqrt, lowdin_array, orthonormality_error
from app.core.services.spectral_grid import circular_center, translate_array

logger = logging.getLogger(__name__)

# relative quadrature noise of one energy evaluation
ENERGY_NOISE = 1e-13


# ----------------------------------------------------------------------------
# Placing clusters
# ----------------------------------------------------------------------------

def rotate_array(values: np.ndarray, grid: Grid, angle: float) -> np.ndarray:
    """
    Rotate every field of a stack by angle in the (x1, x2) plane about x = 0,
    periodic cubic interpolation. Identity in 1D or for angle 0.
    """
    if grid.d < 2 or angle == 0.0:
        return values
    c, s = math.cos(angle), math.sin(angle)
    matrix = np.eye(grid.d)
    matrix[:2, :2] = [[c, s], [-s, c]]
    center = np.full(grid.d, grid.n / 2)
    offset = center - matrix @ center
    return np.stack([
        ndimage.affine_transform(u, matrix, offset=offset, order=3, mode="grid-wrap") for u in values
    ])


def place_cluster(state: GroundStateResult, center: Sequence[float], rotation: float = 0.0) -> np.ndarray:
    """Orbitals of state moved so that its density centre sits at center."""
    grid = state.grid
    origin = circular_center(state.density.values, grid)
    values = translate_array(state.orbitals.values, grid, -origin)
    values = rotate_array(values, grid, rotation)
    if rotation != 0.0 and grid.d >= 2:
        values, _ = lowdin_array(values, grid)
    return translate_array(values, grid, np.asarray(center, dtype=float))


def _axis_shift(d: int, amount: float) -> np.ndarray:
    shift = np.zeros(d)
    shift[0] = amount
    return shift


def overlap_integral(left: np.ndarray, right: np.ndarray, grid: Grid) -> float:
    """e_R = max_ij int |u_i| |v_j|."""
    a = np.abs(left).reshape(left.shape[0], -1)
    b = np.abs(right).reshape(right.shape[0], -1)
    return float(grid.cell_volume * np.max(a @ b.T))


# ----------------------------------------------------------------------------
# Dimer
# ----------------------------------------------------------------------------

def build_dimer(left: GroundStateResult, right: GroundStateResult, R: float, rotation: float = 0.0) -> DimerTrial:
    """
    Trial frame for J(lambda + lambda') from two ground states.

    Workflow:
      1. Centre left at -R/2 e1 and right (rotated by rotation in d >= 2) at +R/2 e1.
      2. Build S_R on the concatenated orbitals and apply S_R^(-1/2).
      3. Evaluate E on the frame with the concatenated occupations.

    Raises:
        GridError: the two states live on different grids.
        BoxTooSmallError: R >= L/2, the periodic image would be closer than R.
        SingularGramError: S_R numerically singular.
    """
    grid = left.grid
    if right.grid != grid:
        raise GridError(f"dimer halves on different grids: {grid} vs {right.grid}")
    if left.params.p != right.params.p:
        raise ParameterError("dimer halves must share the exponent p")
    if R <= 0:
        raise ParameterError(f"separation must be positive, got {R}")
    if R >= grid.L / 2:
        raise BoxTooSmallError(f"separation {R} needs a box longer than {2 * R} (L = {grid.L})")

    p = left.params.p
    u = place_cluster(left, _axis_shift(grid.d, -R / 2))
    v = place_cluster(right, _axis_shift(grid.d, R / 2), rotation)
    nu_left, nu_right = left.orbitals.occupations, right.orbitals.occupations

    stack = np.concatenate([u, v])
    S = gram_matrix(stack, grid)
    root, condition = inverse_sqrt(S)
    frame = (root @ stack.reshape(stack.shape[0], -1)).reshape(stack.shape)
    if condition > 1e8:
        logger.warning("Gram matrix at R=%.3f is ill-conditioned (cond %.2e)", R, condition)

    orbitals = OrbitalSet(grid, frame, np.concatenate([nu_left, nu_right]))
    total = energy(orbitals, p)
    reference = energy(OrbitalSet(grid, u, nu_left), p) + energy(OrbitalSet(grid, v, nu_right), p)
    return DimerTrial(
        left=left,
        right=right,
        R=float(R),
        rotation=float(rotation),
        gram=S,
        gram_condition=condition,
        overlap=overlap_integral(u, v, grid),
        orbitals=orbitals,
        energy=total,
        reference_energy=reference,
        interaction=total - reference,
        orthonormality_error=orthonormality_error(frame, grid),
    )


def decay_rates(left: GroundStateResult, right: GroundStateResult) -> Tuple[float, float]:
    """(eps, eps') = sqrt(|mu_last|) of the two halves, eps >= eps'."""
    a = math.sqrt(abs(left.mu_last))
    b = math.sqrt(abs(right.mu_last))
    return max(a, b), min(a, b)


def attraction_condition(p: float, eps: float, eps_prime: float) -> AttractionCondition:
    """Sufficient condition for the dimer trial to bind: 1 < p < 1 + eps'/eps."""
    big, small = max(eps, eps_prime), min(eps, eps_prime)
    threshold = 1.0 + small / big
    return AttractionCondition(p=p, eps=big, eps_prime=small, threshold=threshold, holds=1.0 < p < threshold)


def _fit_rate(points: List[InteractionPoint], low: float, high: float) -> Tuple[Optional[float], Optional[Tuple[float, float]]]:
    usable = [pt for pt in points if pt.interaction is not None and low <= abs(pt.interaction) <= high]
    if len(usable) < 3:
        return None, None
    R = np.array([pt.R for pt in usable])
    y = np.log(np.abs([pt.interaction for pt in usable]))
    slope, _ = np.polyfit(R, y, 1)
    return float(-slope), (float(R[0]), float(R[-1]))


def interaction_curve(
    left: GroundStateResult,
    right: GroundStateResult,
    R_list: Sequence[float],
    workers: int = 1,
    rotation: float = 0.0,
) -> InteractionCurve:
    """
    Interaction energy for every R, the decay-rate markers and a fitted rate.

    The rate is fitted to log|interaction| over the points with
    |interaction| in [1e3 * noise, 1e-2 * |J|]. Points whose Gram matrix is
    singular (or that do not fit in the box) are kept with their error.
    """
    R_list = [float(R) for R in R_list]
    if any(b <= a for a, b in zip(R_list, R_list[1:])):
        raise ParameterError("separations must be strictly ascending")

    def evaluate(R: float) -> InteractionPoint:
        try:
            trial = build_dimer(left, right, R, rotation)
        except NLSLabError as exc:
            logger.warning("Dimer at R=%.3f failed: %s", R, exc)
            return InteractionPoint(R=R, error=str(exc))
        return InteractionPoint(
            R=R,
            interaction=trial.interaction,
            energy=trial.energy,
            gram_condition=trial.gram_condition,
            overlap=trial.overlap,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(evaluate, R_list))
    else:
        points = [evaluate(R) for R in R_list]

    p = left.params.p
    eps, eps_prime = decay_rates(left, right)
    J = max(abs(left.energy), abs(right.energy))
    noise = ENERGY_NOISE * max(1.0, J)
    fitted, window = _fit_rate(points, 1e3 * noise, 1e-2 * J)
    condition = attraction_condition(p, eps, eps_prime)
    if fitted is not None:
        logger.info("Dimer interaction decays at %.4f (attraction marker %.4f, orthogonalisation marker %.4f)",
                    fitted, 2 * p * eps * eps_prime / (eps + eps_prime), 2 * eps_prime)
    return InteractionCurve(
        points=points,
        eps=eps,
        eps_prime=eps_prime,
        rate_attract=2 * p * eps * eps_prime / (eps + eps_prime),
        rate_orth=2 * eps_prime,
        fitted_rate=fitted,
        fit_window=window,
        noise_floor=noise,
        condition=condition,
    )


# ----------------------------------------------------------------------------
# Exponential overlap integrals
# ----------------------------------------------------------------------------

TRANSVERSE_SPHERE = {2: 2.0, 3: 2.0 * math.pi}


def exponential_overlap_integral(eps: float, eps_prime: float, R: float, d: int) -> float:
    """int over R^d of exp(-eps |x|) exp(-eps' |x - R e1|) dx by quadrature."""
    if eps <= 0 or eps_prime <= 0:
        raise ParameterError("decay rates must be positive")
    slow = min(eps, eps_prime)
    reach = 60.0 / slow
    if d == 1:
        value, _ = integrate.quad(
            lambda x: math.exp(-eps * abs(x) - eps_prime * abs(x - R)),
            -reach, R + reach, points=[0.0, R], limit=400,
        )
        return value

    def integrand(rho: float, t: float) -> float:
        return rho ** (d - 2) * math.exp(-eps * math.hypot(t, rho) - eps_prime * math.hypot(t - R, rho))

    value, _ = integrate.dblquad(integrand, -reach, R + reach, 0.0, reach, epsabs=0.0, epsrel=1e-9)
    return TRANSVERSE_SPHERE[d] * value


def exponential_overlap_envelope(eps: float, eps_prime: float, R: float, d: int) -> float:
    """(1 + R^d) exp(-min(eps, eps') R): the shape the overlap integral is bounded by, up to a constant."""
    return (1.0 + R ** d) * math.exp(-min(eps, eps_prime) * R)


# ----------------------------------------------------------------------------
# J(2) - 2 J(1) against p
# ----------------------------------------------------------------------------

def binding_gap_vs_p(
    p_list: Sequence[float],
    N: int = 2,
    config: Optional[SolverConfig] = None,
    d: int = 1,
    workers: int = 1,
) -> List[GapPoint]:
    """
    J(N) - N J(1) for every p, one warm-started sweep per p starting on the grid sized for N.

    Raises:
        ParameterError: some p outside (1, 2) or outside the admissible range for d.
    """
    config = config or SolverConfig()
    for p in p_list:
        if not 1.0 < p < 2.0:
            raise ParameterError(f"p = {p} outside (1, 2)")
        check_exponent(d, p)

    def evaluate(p: float) -> GapPoint:
        sweep = sweep_mass(d, p, [1.0, float(N)], config)
        if sweep.failures or len(sweep) != 2:
            return GapPoint(p=p, N=N, error="; ".join(sweep.failures.values()) or "incomplete sweep")
        one, many = sweep
        gap = many.energy - N * one.energy
        logger.info("p=%.3f: J(%d) - %d J(1) = %.3e", p, N, N, gap)
        return GapPoint(p=p, N=N, J1=one.energy, JN=many.energy, gap=gap, converged=one.converged and many.converged)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(evaluate, p_list))
    return [evaluate(p) for p in p_list]


def gap_trend_violations(points: Sequence[GapPoint], slack: float = 1e-8) -> List[Tuple[float, float]]:
    """Consecutive p pairs where |gap| grows by more than slack as p increases."""
    valid = sorted((pt for pt in points if pt.gap is not None), key=lambda pt: pt.p)
    return [
        (a.p, b.p)
        for a, b in zip(valid, valid[1:])
        if abs(b.gap) > abs(a.gap) + slack
    ]
