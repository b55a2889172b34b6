# File: app/core/services/box_policy.py
"""
Choice and refinement of the periodic box.

    L = max(box_min, box_scale N^(1/d) + 2 decay_lengths / sqrt|mu|)

with |mu| the smaller of two estimates of |mu_N|: the multiplier lower bound
with J / mass replaced by e_LT, and the upper bound J(1) (mass - N + 1)^s with
the scalar energy. The second one governs nearly empty shells, whose last
orbital decays slowly. Points per axis follow the target spacing, rounded up
to a power of two and capped per dimension.

After a solve the measured state decides the next grid: a density still
visible on the far face of the torus grows the box by the decay of the
measured mu_N, a virial residual above tolerance on a clean box doubles the
points per axis.
"""

import logging
import math
from typing import Optional

from app.config.solver_config import GridPolicy
from app.core.entities.grid import Grid
from app.core.entities.model import orbital_count
from app.core.services.spectral_grid import build_grid
from app.core.services.theory_bounds import mu_estimate, mu_upper_estimate

logger = logging.getLogger(__name__)

MAX_POINTS_PER_AXIS = {1: 8192, 2: 256, 3: 64}
FINE_POINTS_LIMIT = {1: 16384, 2: 512, 3: 128}
MAX_GROWTH = 3.0


def decay_length(d: int, p: float, mass: float, c_lt: Optional[float] = None) -> float:
    """Largest of the estimated decay lengths 1/sqrt|mu_N|."""
    lower = abs(mu_estimate(d, p, c_lt))
    upper = abs(mu_upper_estimate(d, p, mass))
    return 1.0 / math.sqrt(min(lower, upper))


def box_length(policy: GridPolicy, d: int, p: float, mass: float) -> float:
    if policy.box_l is not None:
        return float(policy.box_l)
    N = max(1, orbital_count(mass))
    decay = decay_length(d, p, mass, policy.c_lt)
    return max(policy.box_min, policy.box_scale * N ** (1.0 / d) + 2.0 * policy.decay_lengths * decay)


def points_per_axis(policy: GridPolicy, d: int, L: float) -> int:
    if policy.grid_n is not None:
        return policy.grid_n
    wanted = max(8, 2 ** math.ceil(math.log2(L / policy.grid_spacing)))
    cap = MAX_POINTS_PER_AXIS[d]
    if wanted > cap:
        logger.warning("Grid spacing %.3g needs n=%d in d=%d; capping at %d", policy.grid_spacing, wanted, d, cap)
        return cap
    return wanted


def resolve_grid(policy: GridPolicy, d: int, p: float, mass: float) -> Grid:
    """Grid for a solve of (d, p, mass) under the policy."""
    L = box_length(policy, d, p, mass)
    return build_grid(d, L, points_per_axis(policy, d, L))


def grow_grid(grid: Grid, factor: float) -> Grid:
    """Box scaled by factor; n grows so the spacing does not increase, up to FINE_POINTS_LIMIT."""
    n = int(math.ceil(grid.n * factor))
    n += n % 2
    limit = FINE_POINTS_LIMIT[grid.d]
    if n > limit:
        logger.warning("Growing the box to L=%.1f needs n=%d in d=%d; using %d", grid.L * factor, n, grid.d, limit)
        n = max(grid.n, limit)
    return build_grid(grid.d, grid.L * factor, n)


def edge_growth_factor(grid: Grid, edge_density: float, edge_tol: float, mu: float, minimum: float) -> float:
    """
    Box factor that pushes the density on the far face below edge_tol,
    assuming rho decays like exp(-2 sqrt|mu| r). Clamped to [minimum, MAX_GROWTH].
    """
    if not (mu < 0 and math.isfinite(mu)):
        return MAX_GROWTH
    epsilon = math.sqrt(-mu)
    extra = math.log(edge_density / edge_tol) / (2.0 * epsilon)
    factor = (grid.L + 2.0 * extra) / grid.L
    return min(max(factor, minimum), MAX_GROWTH)


def refine_grid(grid: Grid) -> Optional[Grid]:
    """Same box with twice the points per axis; None beyond FINE_POINTS_LIMIT."""
    n = 2 * grid.n
    if n > FINE_POINTS_LIMIT[grid.d]:
        return None
    return build_grid(grid.d, grid.L, n)
