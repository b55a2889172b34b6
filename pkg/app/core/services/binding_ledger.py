# File: app/core/services/binding_ledger.py
"""
Binding inequalities over a ledger of J values.

Strict inequalities cannot be certified in floating point; every verdict
carries the margins and the slack it was judged with.
"""

import logging
from collections import Counter
from typing import Dict, List, Optional

from pydantic import BaseModel

from app.core.entities.ledger import BindingLedger, BindingVerdict, Decomposition, LedgerEntry
from app.core.errors import LedgerError, LedgerIncompleteError

logger = logging.getLogger(__name__)

DEFAULT_SLACK = 1e-6


def record(
    ledger: BindingLedger,
    mass: float,
    J: float,
    provenance: str = "",
    e_lt: Optional[float] = None,
    tol: float = 1e-6,
) -> BindingLedger:
    """
    Return a new ledger with J(mass) recorded; an existing entry is replaced only by a lower J.

    Raises:
        LedgerError: J >= 0, or J / mass below e_lt - tol.
    """
    if not J < 0:
        raise LedgerError(f"refusing J({mass}) = {J}: ground-state energies are negative")
    if e_lt is not None and J / mass < e_lt - tol * abs(e_lt):
        raise LedgerError(f"refusing J({mass}) = {J}: J/mass = {J / mass} is below e_LT = {e_lt}")

    current = ledger.find(mass)
    if current is not None and current.J <= J:
        return ledger
    entries = [e for e in ledger.entries if e is not current]
    entries.append(LedgerEntry(mass=mass, J=J, provenance=provenance))
    entries.sort(key=lambda e: e.mass)
    return ledger.model_copy(update={"entries": entries})


def _require(ledger: BindingLedger, masses) -> None:
    missing = [m for m in masses if not ledger.has(m)]
    if missing:
        raise LedgerIncompleteError(missing)


def binding_check(ledger: BindingLedger, N: int, slack_rel: float = DEFAULT_SLACK) -> BindingVerdict:
    """
    margin_K = J(K) + J(N-K) - J(N) for K = 1..N-1; binding holds iff all margins > slack.

    Raises:
        LedgerIncompleteError: some J(K), 1 <= K <= N, is missing.
    """
    _require(ledger, range(1, N + 1))
    J_N = ledger.get(N)
    slack = slack_rel * abs(J_N)
    margins = {K: ledger.get(K) + ledger.get(N - K) - J_N for K in range(1, N)}
    holds = all(m > slack for m in margins.values())
    return BindingVerdict(N=N, margins=margins, slack=slack, holds=holds)


def verdicts(ledger: BindingLedger, slack_rel: float = DEFAULT_SLACK) -> List[BindingVerdict]:
    """Verdicts for every N whose sub-masses 1..N are all in the ledger."""
    out = []
    N = 1
    while ledger.has(N):
        out.append(binding_check(ledger, N, slack_rel))
        N += 1
    return out


def binding_set(ledger: BindingLedger, slack_rel: float = DEFAULT_SLACK) -> List[int]:
    return [v.N for v in verdicts(ledger, slack_rel) if v.holds]


def binding_set_decompose(ledger: BindingLedger, N: int, slack_rel: float = DEFAULT_SLACK) -> Decomposition:
    """
    Split J(N) into binding-set members.

    Workflow:
      1. If every binding inequality holds at N, return {N: 1}.
      2. Otherwise split at the K with the smallest margin and decompose K and N-K.
      3. Sum the parts, flag members used twice and decompositions below J(N).
    """
    _require(ledger, range(1, N + 1))
    cache: Dict[int, Counter] = {}

    def split(M: int) -> Counter:
        if M in cache:
            return cache[M]
        verdict = binding_check(ledger, M, slack_rel)
        if verdict.holds:
            parts = Counter({M: 1})
        else:
            K = min(verdict.margins, key=lambda k: (verdict.margins[k], k))
            parts = split(K) + split(M - K)
        cache[M] = parts
        return parts

    parts = split(N)
    energy = sum(k * ledger.get(n) for n, k in parts.items())
    J_N = ledger.get(N)
    alarm = energy < J_N - slack_rel * abs(J_N)
    repeated = sorted(n for n, k in parts.items() if k >= 2)
    if alarm:
        logger.warning("Ledger inconsistency at N=%d: decomposition energy %.10g < J(N) = %.10g", N, energy, J_N)
    if repeated:
        logger.warning("Decomposition of N=%d repeats members %s", N, repeated)
    return Decomposition(N=N, parts=dict(sorted(parts.items())), energy=energy,
                         repeated_members=repeated, accuracy_alarm=alarm)


class FractionalVerdict(BaseModel):
    """J(N + a) < J(k) + J(N - k + a) for k = 1..N."""

    mass: float
    margins: Dict[int, float]
    slack: float
    holds: bool


def binding_check_fractional(ledger: BindingLedger, mass: float, slack_rel: float = DEFAULT_SLACK) -> FractionalVerdict:
    """Binding inequalities at a non-integer mass N + a, 0 < a < 1."""
    N = int(mass)
    alpha = mass - N
    if not 0 < alpha < 1:
        raise ValueError(f"mass {mass} is an integer; use binding_check")
    needed = [mass] + [k for k in range(1, N + 1)] + [N - k + alpha for k in range(1, N + 1)]
    _require(ledger, needed)
    J = ledger.get(mass)
    slack = slack_rel * abs(J)
    margins = {k: ledger.get(k) + ledger.get(N - k + alpha) - J for k in range(1, N + 1)}
    return FractionalVerdict(mass=mass, margins=margins, slack=slack,
                             holds=all(m > slack for m in margins.values()))


def one_sided_derivative_gap(J_minus: float, J: float, mu_last: float, t: float) -> float:
    """J(lambda - t) - (J(lambda) - mu_N t); nonpositive up to o(t) at a minimiser."""
    return J_minus - (J - mu_last * t)
