# File: app/core/services/theory_bounds.py
"""
Closed-form bounds for the orthonormal NLS problem.

    c_TF(d)    = 4 pi^2 d/(d+2) (d/|S^(d-1)|)^(2/d)
    e_C(d, p)  = -(1 + 2/d - p) (d/2p) (d(p-1)/(2p C))^((p-1)/(1+2/d-p))
    e_TF = e_C at C = c_TF,  e_LT = e_C at C = c_LT

and the derived quantities: the critical exponent p_c(d), the constant of the
rescaled inequality, the plane-wave trial energy, and the bound checks run on
solver output.
"""

import json
import logging
import math
from functools import lru_cache
from itertools import product
from threading import RLock
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate, optimize
from scipy.interpolate import PchipInterpolator

from app.config.settings import settings
from app.core.entities.ledger import BindingLedger
from app.core.entities.model import check_exponent
from app.core.errors import ConvergenceError, ParameterError
from app.core.services.soliton_oracle import SPHERE_AREA, radial_ground_state, soliton_ground_state_1d

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------------
# Constants
# ----------------------------------------------------------------------------

def c_TF(d: int) -> float:
    """Thomas-Fermi constant."""
    if d not in SPHERE_AREA:
        raise ParameterError(f"dimension must be 1, 2 or 3, got {d}")
    return 4 * math.pi ** 2 * d / (d + 2) * (d / SPHERE_AREA[d]) ** (2.0 / d)


class CLTDefault(BaseModel):
    """Shipped Lieb-Thirring constant with its provenance."""

    d: int
    ratio: float
    value: float
    source: str
    note: str = ""


@lru_cache(maxsize=4)
def _c_lt_table(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def default_c_lt(d: int) -> CLTDefault:
    """c_LT(d) = c_TF(d) ratio^(-2/d) from the shipped table."""
    entry = _c_lt_table(str(settings.C_LT_TABLE))["entries"][str(d)]
    ratio = float(entry["ratio"])
    return CLTDefault(
        d=d,
        ratio=ratio,
        value=c_TF(d) * ratio ** (-2.0 / d),
        source=entry["source"],
        note=entry.get("note", ""),
    )


def resolve_c_lt(d: int, c_lt: Optional[float]) -> Tuple[float, str]:
    """Explicit constant or the shipped default, with a provenance string."""
    if c_lt is not None:
        if c_lt <= 0:
            raise ParameterError(f"c_LT must be positive, got {c_lt}")
        return float(c_lt), "user-supplied"
    default = default_c_lt(d)
    return default.value, f"{default.source} (ratio {default.ratio})"


class BoundsContext(BaseModel):
    """
    Inputs of the bounds for one (d, p).

    Attributes:
        d: Dimension.
        p: Exponent.
        c_LT: Lieb-Thirring constant used.
        c_LT_source: Where c_LT came from.
        I1: I(d, p, 1) if known.
    """

    model_config = ConfigDict(frozen=True)

    d: int
    p: float
    c_LT: float = Field(gt=0)
    c_LT_source: str
    I1: Optional[float] = None

    @property
    def c_TF(self) -> float:
        return c_TF(self.d)

    @property
    def e_TF(self) -> float:
        return e_TF(self.d, self.p)

    @property
    def e_LT(self) -> float:
        return e_LT(self.d, self.p, self.c_LT)

    @property
    def e_LT_rigorous(self) -> bool:
        """False when c_LT is a calibrated value rather than a proven Lieb-Thirring constant."""
        return not self.c_LT_source.startswith("calibration")


def bounds_context(d: int, p: float, c_lt: Optional[float] = None, I1: Optional[float] = None) -> BoundsContext:
    check_exponent(d, p)
    value, source = resolve_c_lt(d, c_lt)
    return BoundsContext(d=d, p=p, c_LT=value, c_LT_source=source, I1=I1)


# ----------------------------------------------------------------------------
# Lieb-Thirring / Thomas-Fermi energies
# ----------------------------------------------------------------------------

def lt_min_value(C: float, d: int, p: float, N: float) -> float:
    """
    min over rho >= 0, int rho = N of C int rho^(1+2/d) - (1/p) int rho^p.

    Raises:
        ParameterError: C <= 0 or p outside (1, 1 + 2/d).
    """
    if C <= 0:
        raise ParameterError(f"constant must be positive, got {C}")
    check_exponent(d, p)
    gap = 1.0 + 2.0 / d - p
    return -N * gap * (d / (2 * p)) * (d * (p - 1) / (2 * p * C)) ** ((p - 1) / gap)


def lt_min_value_numeric(C: float, d: int, p: float, N: float) -> float:
    """
    Same minimum over the bang-bang family rho = rho_* 1_Omega, |Omega| = N / rho_*,
    i.e. min over rho_* of N (C rho_*^(2/d) - rho_*^(p-1) / p).
    """
    if N == 0:
        return 0.0

    def value(log_level: float) -> float:
        level = math.exp(log_level)
        return N * (C * level ** (2.0 / d) - level ** (p - 1) / p)

    result = optimize.minimize_scalar(value, bounds=(-60.0, 20.0), method="bounded",
                                      options={"xatol": 1e-12, "maxiter": 2000})
    return float(result.fun)


def e_TF(d: int, p: float) -> float:
    """Thomas-Fermi energy per particle."""
    return lt_min_value(c_TF(d), d, p, 1.0)


def e_LT(d: int, p: float, c_LT: float) -> float:
    """Lieb-Thirring lower bound per particle; e_LT <= e_TF when c_LT <= c_TF."""
    if c_LT <= 0:
        raise ParameterError(f"c_LT must be positive, got {c_LT}")
    return lt_min_value(c_LT, d, p, 1.0)


def tf_density(d: int, p: float, C: Optional[float] = None) -> float:
    """Level rho_* of the bang-bang minimiser."""
    C = c_TF(d) if C is None else C
    return (d * (p - 1) / (2 * p * C)) ** (1.0 / (1.0 + 2.0 / d - p))


def scaling_exponent(d: int, p: float) -> float:
    """(2/d)(p-1)/(1 + 2/d - p)."""
    gap = 1.0 + 2.0 / d - p
    if gap <= 0:
        raise ParameterError(f"1 + 2/d - p must be positive, got {gap} for d={d}, p={p}")
    return (2.0 / d) * (p - 1) / gap


def mu_last_bounds(d: int, p: float, mass: float, J: float, J1: Optional[float]) -> Tuple[float, Optional[float]]:
    """
    Bounds on the last filled multiplier mu_N of a minimiser:
        ((2p - d(p-1)) / (2 - d(p-1))) J / mass <= mu_N <= J(1) (mass - N + 1)^scaling_exponent.
    """
    a = d * (p - 1)
    lower = (2 * p - a) / (2 - a) * J / mass
    if J1 is None:
        return lower, None
    N = max(1, math.ceil(mass - 1e-12))
    return lower, J1 * (mass - N + 1) ** scaling_exponent(d, p)


def mu_estimate(d: int, p: float, c_lt: Optional[float] = None) -> float:
    """Most negative mu_N allowed by the lower bound, with J / mass replaced by e_LT."""
    value, _ = resolve_c_lt(d, c_lt)
    a = d * (p - 1)
    return (2 * p - a) / (2 - a) * e_LT(d, p, value)


@lru_cache(maxsize=64)
def scalar_energy(d: int, p: float) -> float:
    """I(d, p, 1) from the closed form in 1D, radial shooting otherwise."""
    if d == 1:
        return soliton_ground_state_1d(p).I1
    return radial_ground_state(d, p).I1


def mu_upper_estimate(d: int, p: float, mass: float, floor: float = 0.5) -> float:
    """
    Least negative mu_N allowed by the upper bound J(1) (mass - N + 1)^s, with
    J(1) = I(d, p, 1). The fractional part is floored so the estimate stays
    finite just above an integer.
    """
    N = max(1, math.ceil(mass - 1e-12))
    fraction = max(mass - N + 1, floor)
    return scalar_energy(d, p) * fraction ** scaling_exponent(d, p)


# ----------------------------------------------------------------------------
# Critical exponent
# ----------------------------------------------------------------------------

class ScalarEnergyTable:
    """
    Memoised I(d, p, 1) on a p-grid, interpolated with a monotone cubic.

    Nodes are evaluated on the first call. The provider defaults to the closed
    form in 1D and radial shooting otherwise; any callable p -> I(d, p, 1) works.
    """

    def __init__(
        self,
        d: int,
        provider: Optional[Callable[[float], float]] = None,
        nodes: Optional[Sequence[float]] = None,
        margin: float = 1e-3,
    ):
        self.d = d
        self.provider = provider or (lambda p: scalar_energy(d, p))
        upper = min(2.0, 1.0 + 2.0 / d)
        self.nodes = np.asarray(nodes if nodes is not None else np.linspace(1 + margin, upper - margin, 25))
        self._values: Dict[float, float] = {}
        self._interpolant: Optional[PchipInterpolator] = None
        self._lock = RLock()

    def value_at(self, p: float) -> float:
        """Direct provider value, memoised."""
        with self._lock:
            if p not in self._values:
                self._values[p] = float(self.provider(p))
            return self._values[p]

    def __call__(self, p: float) -> float:
        with self._lock:
            if self._interpolant is None:
                values = [self.value_at(float(q)) for q in self.nodes]
                self._interpolant = PchipInterpolator(self.nodes, values)
                logger.info("Tabulated I(%d, p, 1) at %d exponents", self.d, len(self.nodes))
            return float(self._interpolant(p))


class PCriticalResult(BaseModel):
    """
    First zero of p -> 1 + sqrt(|I(d,p,1)| / |e_LT(d,p)|) sqrt((2 - d(p-1)) / (2p - d(p-1))) - p.

    Attributes:
        d: Dimension.
        root: p_c(d).
        bracket: Interval of the sign change found by the scan.
        c_LT: Constant used.
        c_LT_source: Provenance of c_LT.
        samples: (p, f(p)) of the scan.
    """

    d: int
    root: float
    bracket: Tuple[float, float]
    c_LT: float
    c_LT_source: str
    samples: List[Tuple[float, float]]


def critical_function(d: int, p: float, c_lt: float, I1: float) -> float:
    a = d * (p - 1)
    ratio = abs(I1) / abs(e_LT(d, p, c_lt))
    return 1.0 + math.sqrt(ratio) * math.sqrt((2 - a) / (2 * p - a)) - p


def p_critical(
    d: int,
    c_lt: Optional[float] = None,
    I1_of_p: Optional[Callable[[float], float]] = None,
    scan_points: int = 60,
    margin: float = 1e-3,
    xtol: float = 1e-4,
) -> PCriticalResult:
    """
    First root of the critical function in (1, min(2, 1 + 2/d)).

    Workflow:
      1. Resolve c_LT (explicit or shipped default) and the I(d,p,1) provider.
      2. Scan (1 + margin, upper - margin) for the first sign change.
      3. Bisect the bracket to xtol.

    Raises:
        ConvergenceError: no sign change in the scan.
    """
    value, source = resolve_c_lt(d, c_lt)
    I1_of_p = I1_of_p or ScalarEnergyTable(d)
    upper = min(2.0, 1.0 + 2.0 / d)

    def f(p: float) -> float:
        return critical_function(d, p, value, I1_of_p(p))

    grid = np.linspace(1 + margin, upper - margin, scan_points)
    samples: List[Tuple[float, float]] = []
    bracket = None
    for p in grid:
        samples.append((float(p), f(float(p))))
        if len(samples) > 1 and samples[-2][1] > 0 >= samples[-1][1]:
            bracket = (samples[-2][0], samples[-1][0])
            break
    if bracket is None:
        raise ConvergenceError(f"no sign change of the critical function for d={d} in ({grid[0]}, {grid[-1]})")

    root = optimize.bisect(f, bracket[0], bracket[1], xtol=xtol)
    logger.info("p_c(%d) = %.4f with c_LT = %.5f (%s)", d, root, value, source)
    return PCriticalResult(d=d, root=float(root), bracket=bracket, c_LT=value, c_LT_source=source, samples=samples)


# ----------------------------------------------------------------------------
# Rescaled inequality
# ----------------------------------------------------------------------------

def rescaled_constant(d: int, p: float, N: float, J_N: float) -> float:
    """
    Best constant c(d,p,N) in N^(2/(d(p-1)) - 1) sum int |grad u|^2 >= c (int rho^p)^(2/(d(p-1))).

    Raises:
        ParameterError: J_N >= 0.
    """
    if J_N >= 0:
        raise ParameterError(f"J(N) must be negative, got {J_N}")
    gap = 1.0 + 2.0 / d - p
    return (
        (N / -J_N) ** (gap / (p - 1))
        * (d / (2 * p)) ** (2.0 / (d * (p - 1)))
        * (p - 1)
        * gap ** (gap / (p - 1))
    )


def optimal_dilation_energy(T: float, P: float, d: int, p: float) -> Tuple[float, float]:
    """
    min over alpha > 0 of alpha^2 T - alpha^(d(p-1)) P / p, the energy of the best
    dilation u -> alpha^(d/2) u(alpha x) of a state with kinetic T and int rho^p = P.

    Returns:
        (minimal energy, optimal alpha)
    """
    a = d * (p - 1)

    def value(log_alpha: float) -> float:
        alpha = math.exp(log_alpha)
        return alpha ** 2 * T - alpha ** a * P / p

    guess = math.log(a * P / (2 * p * T)) / (2 - a)
    result = optimize.minimize_scalar(value, bounds=(guess - 5, guess + 5), method="bounded",
                                      options={"xatol": 1e-12, "maxiter": 2000})
    return float(result.fun), math.exp(result.x)


# ----------------------------------------------------------------------------
# Plane-wave trial state
# ----------------------------------------------------------------------------

class PlaneWaveBound(BaseModel):
    """
    Energy per particle of N mollified plane waves in a cube of side L.

    Attributes:
        shell_kinetic: sum_j |k_j|^2.
        mollifier_kinetic: N int |grad sqrt(chi_L)|^2 / L^d.
        interaction: N^p L^(-dp) int chi_L^p / p.
        degenerate_shell: The N-th and (N+1)-th |k|^2 coincide.
    """

    d: int
    p: float
    N: int
    L: float
    mollifier_width: float
    energy_per_particle: float
    shell_kinetic: float
    mollifier_kinetic: float
    interaction: float
    degenerate_shell: bool


def _bump(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


@lru_cache(maxsize=1)
def _bump_norm() -> float:
    value, _ = integrate.quad(lambda t: float(_bump(np.array([t]))[0]), -1, 1, epsabs=0, epsrel=1e-13)
    return value


def _bump_cdf(t: float) -> float:
    if t <= -1:
        return 0.0
    if t >= 1:
        return 1.0
    value, _ = integrate.quad(lambda s: float(_bump(np.array([s]))[0]), -1, t, epsabs=0, epsrel=1e-12)
    return value / _bump_norm()


@lru_cache(maxsize=16)
def _edge_integrals(p: float) -> Tuple[float, float]:
    """int_{-1}^{1} G^p and int_{-1}^{1} g^2 / G for the normalised bump g with CDF G."""

    def power_term(t: float) -> float:
        return _bump_cdf(t) ** p

    def kinetic_term(t: float) -> float:
        G = _bump_cdf(t)
        if G <= 0:
            return 0.0
        g = float(_bump(np.array([t]))[0]) / _bump_norm()
        return g * g / G

    Gp, _ = integrate.quad(power_term, -1, 1, epsabs=1e-14, epsrel=1e-10, limit=200)
    K, _ = integrate.quad(kinetic_term, -1, 1, epsabs=1e-14, epsrel=1e-10, limit=200)
    return Gp, K


def fill_shells(d: int, N: int, L: float) -> Tuple[np.ndarray, bool]:
    """
    The N lowest wavevectors of (2 pi / L) Z^d, ordered by |k|^2 then lexicographically.

    Returns:
        (array of shape (N, d), whether the last filled shell is shared with an unfilled vector)
    """
    reach = int(math.ceil(N ** (1.0 / d))) + 2
    candidates = sorted(product(range(-reach, reach + 1), repeat=d), key=lambda m: (sum(x * x for x in m), m))
    chosen = np.array(candidates[:N], dtype=float)
    degenerate = sum(x * x for x in candidates[N - 1]) == sum(x * x for x in candidates[N])
    return chosen * (2 * math.pi / L), degenerate


def plane_wave_upper_bound(d: int, p: float, N: int, L: float, mollifier_width: float = 1.0) -> PlaneWaveBound:
    """
    Energy per particle of u_k = L^(-d/2) sqrt(chi_L) e^(i k x), chi_L = 1_{C_L} * chi.

    chi is a product of 1D bumps of half-width w, so chi_L is a product of
    profiles phi equal to 1 inside, 0 outside, with transitions of width 2w.
    The edge integrals are done by adaptive quadrature; nothing is dropped.

    Raises:
        ParameterError: N < 1 or L <= 2 w.
    """
    check_exponent(d, p)
    w = mollifier_width
    if N < 1:
        raise ParameterError(f"need at least one plane wave, got N={N}")
    if L <= 2 * w:
        raise ParameterError(f"box side {L} must exceed twice the mollifier width {w}")

    ks, degenerate = fill_shells(d, N, L)
    shell = float(np.sum(ks ** 2))
    Gp, K = _edge_integrals(p)
    # one axis: int phi = L, int phi^p, int ((sqrt phi)')^2
    phi_p = (L - 2 * w) + 2 * w * Gp
    sqrt_kinetic = K / (2 * w)
    mollifier = N * d * sqrt_kinetic * L ** (d - 1) / L ** d
    interaction = N ** p * L ** (-d * p) * phi_p ** d / p
    energy = (shell + mollifier - interaction) / N
    if degenerate:
        logger.debug("plane-wave shell at N=%d is degenerate; filled lexicographically", N)
    return PlaneWaveBound(
        d=d, p=p, N=N, L=L, mollifier_width=w,
        energy_per_particle=energy,
        shell_kinetic=shell,
        mollifier_kinetic=mollifier,
        interaction=interaction,
        degenerate_shell=degenerate,
    )


# ----------------------------------------------------------------------------
# Checks on solver output
# ----------------------------------------------------------------------------

class SandwichRow(BaseModel):
    mass: float
    J_over_mass: float
    e_LT: float
    I1: Optional[float]
    lower_ok: bool
    upper_ok: Optional[bool]


def sandwich_report(ledger: BindingLedger, context: BoundsContext, slack: float = 1e-6) -> List[SandwichRow]:
    """e_LT <= J(N)/N <= I(d,p,1) + slack for every integer mass in the ledger."""
    lower = context.e_LT
    rows = []
    for entry in ledger.entries:
        if abs(entry.mass - round(entry.mass)) > 1e-12:
            continue
        ratio = entry.J / entry.mass
        upper_ok = None if context.I1 is None else ratio <= context.I1 + slack * abs(context.I1)
        rows.append(SandwichRow(
            mass=entry.mass, J_over_mass=ratio, e_LT=lower, I1=context.I1,
            lower_ok=ratio >= lower - slack * abs(lower), upper_ok=upper_ok,
        ))
    return rows


def per_particle_monotone(ledger: BindingLedger, slack: float = 1e-6) -> List[Tuple[int, int]]:
    """Consecutive integers (N, N+1) where J(N+1)/(N+1) exceeds J(N)/N beyond slack."""
    integers = sorted(int(round(e.mass)) for e in ledger.entries if abs(e.mass - round(e.mass)) <= 1e-12)
    violations = []
    for N, M in zip(integers, integers[1:]):
        if M != N + 1:
            continue
        a, b = ledger.get(N) / N, ledger.get(M) / M
        if b > a + slack * abs(a):
            violations.append((N, M))
    return violations


def rescaled_constants(ledger: BindingLedger) -> Dict[int, float]:
    """c(d, p, N) for every integer N in the ledger."""
    out = {}
    for entry in ledger.entries:
        if abs(entry.mass - round(entry.mass)) <= 1e-12:
            N = int(round(entry.mass))
            out[N] = rescaled_constant(ledger.d, ledger.p, N, entry.J)
    return out


class ShapeVerdict(BaseModel):
    """
    Shape of lambda -> J(lambda) on a sampled mass grid.

    Attributes:
        strictly_decreasing: J drops between every pair of consecutive samples.
        increases: Consecutive (mass, next mass) pairs where J does not drop.
        concave_pieces: J lies above its chords within every interval [N-1, N].
        concavity_violations: (mass, excess) where a sample falls below the chord
            of its neighbours in the same interval by more than the slack.
        slack: Relative slack used for both checks.
    """

    strictly_decreasing: bool
    increases: List[Tuple[float, float]]
    concave_pieces: bool
    concavity_violations: List[Tuple[float, float]]
    slack: float


def energy_shape(points: Sequence[Tuple[float, float]], slack: float = 1e-6) -> ShapeVerdict:
    """
    Strict decrease and piecewise concavity of sampled (mass, J) pairs.

    Concavity is judged on the samples of each closed unit interval [N-1, N]
    (the integer endpoints belong to both neighbours): every interior sample
    must lie at or above the chord through its neighbours, up to slack |J|.
    """
    ordered = sorted(points)
    increases = [(a, b) for (a, ja), (b, jb) in zip(ordered, ordered[1:]) if not jb < ja]

    violations = []
    top = math.ceil(ordered[-1][0] - 1e-12) if ordered else 0
    for N in range(1, top + 1):
        piece = [(m, J) for m, J in ordered if N - 1 - 1e-12 <= m <= N + 1e-12]
        for (m1, j1), (m2, j2), (m3, j3) in zip(piece, piece[1:], piece[2:]):
            chord = ((m3 - m2) * j1 + (m2 - m1) * j3) / (m3 - m1)
            excess = chord - j2
            if excess > slack * abs(j2):
                violations.append((m2, excess))
    return ShapeVerdict(
        strictly_decreasing=not increases,
        increases=increases,
        concave_pieces=not violations,
        concavity_violations=violations,
        slack=slack,
    )
