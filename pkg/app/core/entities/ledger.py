# File: app/core/entities/ledger.py
"""
Binding ledger: best known J values over masses for one (d, p).

Verdicts are never stored; they are recomputed from the entries by
app.core.services.binding_ledger.
"""

from datetime import datetime, timezone
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

# two masses closer than this are the same ledger key
MASS_KEY_TOL = 1e-9


class LedgerEntry(BaseModel):
    """
    Attributes:
        mass: lambda.
        J: Best known J(lambda) (< 0).
        provenance: Run id or description of the solve that produced J.
        recorded_at: UTC timestamp of the record.
    """

    model_config = ConfigDict(from_attributes=True)

    mass: float = Field(gt=0)
    J: float
    provenance: str = ""
    recorded_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))


class BindingVerdict(BaseModel):
    """
    Binding inequalities J(N) < J(K) + J(N-K) for K = 1..N-1.

    Attributes:
        N: Particle number checked.
        margins: K -> J(K) + J(N-K) - J(N).
        slack: Margin a check must exceed to count as binding.
        holds: All margins exceed slack.
    """

    N: int
    margins: Dict[int, float]
    slack: float
    holds: bool


class Decomposition(BaseModel):
    """
    J(N) written as sum_n k_n J(n) over members of the binding set.

    Attributes:
        N: Particle number decomposed.
        parts: n -> k_n.
        energy: sum_n k_n J(n).
        repeated_members: n with k_n >= 2 (never expected at minimisers).
        accuracy_alarm: The decomposition energy lies below J(N) beyond slack.
    """

    N: int
    parts: Dict[int, int]
    energy: float
    repeated_members: List[int] = Field(default_factory=list)
    accuracy_alarm: bool = False


class BindingLedger(BaseModel):
    """J values over masses for one (d, p), single writer."""

    d: int
    p: float
    entries: List[LedgerEntry] = Field(default_factory=list)

    def find(self, mass: float) -> Optional[LedgerEntry]:
        for entry in self.entries:
            if abs(entry.mass - mass) <= MASS_KEY_TOL:
                return entry
        return None

    def get(self, mass: float) -> float:
        entry = self.find(mass)
        if entry is None:
            raise KeyError(mass)
        return entry.J

    def has(self, mass: float) -> bool:
        return self.find(mass) is not None

    def masses(self) -> List[float]:
        return sorted(e.mass for e in self.entries)
