# File: app/core/services/soliton_oracle.py
"""
Grid-independent reference values for the scalar problem.

soliton_ground_state_1d uses the explicit 1D soliton
    Q(x) = p^(s/2) sech^s((p-1) x),  s = 1/(p-1),  mu = -1
with masses and energies from adaptive quadrature. radial_ground_state shoots
the radial ODE Q'' + (d-1)/r Q' - Q + Q^(2p-1) = 0 (mu = -1) in any dimension.
Both rescale to unit mass with the exact scaling laws.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gamma

logger = logging.getLogger(__name__)

SPHERE_AREA = {1: 2.0, 2: 2.0 * np.pi, 3: 4.0 * np.pi}


@dataclass(frozen=True)
class ScalarReference:
    """I(d,p,1) and mu at mass 1, with the unscaled mass and energy they came from."""

    d: int
    p: float
    I1: float
    mu1: float
    raw_mass: float
    raw_energy: float
    raw_mu: float


def _energy_exponent(d: int, p: float) -> float:
    return 1.0 + (2.0 / d) * (p - 1.0) / (1.0 + 2.0 / d - p)


def _rescale(d: int, p: float, mass: float, energy: float, mu: float) -> ScalarReference:
    e = _energy_exponent(d, p)
    return ScalarReference(
        d=d,
        p=p,
        I1=energy * mass ** (-e),
        mu1=mu * mass ** (-(e - 1.0)),
        raw_mass=mass,
        raw_energy=energy,
        raw_mu=mu,
    )


def _sech_power_integral(a: float) -> float:
    """int_R sech(x)^a dx by adaptive quadrature."""

    def integrand(x):
        with np.errstate(over="ignore"):
            return np.cosh(x) ** (-a)

    value, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    return 2.0 * value


def soliton_ground_state_1d(p: float) -> ScalarReference:
    """
    Closed-form soliton in d = 1, rescaled to mass 1.

    With A = int sech^(2s) and A2 = int sech^(2s+2), the profile
    Q(x) = p^(s/2) sech^s((p-1) x) has
        mass = p^s s A,  int Q'^2 = p^s s (A - A2),  int Q^(2p) = p^(s p) s A2.

    Args:
        p: Exponent in (1, 3).
    """
    s = 1.0 / (p - 1.0)
    A = _sech_power_integral(2 * s)
    A2 = _sech_power_integral(2 * s + 2)
    amplitude2 = p ** s
    mass = amplitude2 * s * A
    energy = amplitude2 * s * (A - A2) - amplitude2 ** p * s * A2 / p
    return _rescale(1, p, mass, energy, -1.0)


def sech_power_integral_exact(a: float) -> float:
    """sqrt(pi) Gamma(a/2) / Gamma((a+1)/2); used to cross-check the quadrature."""
    return float(np.sqrt(np.pi) * gamma(a / 2) / gamma((a + 1) / 2))


def _shoot(d: int, p: float, a: float, r_max: float, rtol: float):
    """Integrate from Q(0)=a. Returns (+1 overshoot | -1 undershoot | 0 neither, solution)."""
    q = 2 * p - 1

    def rhs(r, y):
        Q, dQ, _, _, _ = y
        Qp = abs(Q) ** (q - 1) * Q
        ddQ = Q - Qp - (d - 1) / r * dQ
        w = SPHERE_AREA[d] * r ** (d - 1)
        return [dQ, ddQ, w * Q * Q, w * dQ * dQ, w * abs(Q) ** (2 * p)]

    def crosses_zero(r, y):
        return y[0]

    crosses_zero.terminal = True
    crosses_zero.direction = -1

    def turns_up(r, y):
        return y[1]

    turns_up.terminal = True
    turns_up.direction = 1

    r0 = 1e-8
    curvature = (a - a ** q) / d
    y0 = [a + 0.5 * curvature * r0 ** 2, curvature * r0, 0.0, 0.0, 0.0]
    sol = integrate.solve_ivp(
        rhs, (r0, r_max), y0, method="DOP853", rtol=rtol, atol=1e-14 * max(1.0, a),
        events=(crosses_zero, turns_up),
    )
    if sol.t_events[0].size:
        return 1, sol
    if sol.t_events[1].size:
        return -1, sol
    return 0, sol


def radial_ground_state(d: int, p: float, r_max: float = 80.0, rtol: float = 1e-11) -> ScalarReference:
    """
    Positive radial ground state by shooting on Q(0), rescaled to mass 1.

    The integrals are carried as extra ODE components and read off where the
    best undershooting trajectory turns, which is far in the exponential tail.
    """
    lo, hi = 1.0, 2.0
    while _shoot(d, p, hi, r_max, 1e-8)[0] != 1:
        lo, hi = hi, 2.0 * hi
        if hi > 1e8:
            raise RuntimeError(f"no overshoot found for d={d}, p={p}")

    sol = None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        verdict, trial = _shoot(d, p, mid, r_max, rtol)
        if verdict == 1:
            hi = mid
        else:
            lo, sol = mid, trial
            if verdict == 0:
                break
    if sol is None:
        sol = _shoot(d, p, lo, r_max, rtol)[1]

    # stop at the minimum of Q, where the trajectory leaves the decaying branch
    Q = sol.y[0]
    stop = int(np.argmin(np.where(Q > 0, Q, np.inf)))
    mass, kinetic, interaction = sol.y[2, stop], sol.y[3, stop], sol.y[4, stop]
    logger.debug("radial shooting d=%d p=%.4f Q(0)=%.12g r_stop=%.2f", d, p, lo, sol.t[stop])
    return _rescale(d, p, mass, kinetic - interaction / p, -1.0)
