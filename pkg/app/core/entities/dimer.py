# File: app/core/entities/dimer.py

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.core.entities.model import OrbitalSet
from app.core.entities.results import GroundStateResult


@dataclass(eq=False)
class DimerTrial:
    """
    Two ground states placed R apart along e1 and orthonormalised together.

    Attributes:
        left (GroundStateResult): Cluster centred at -R/2 e1.
        right (GroundStateResult): Cluster centred at +R/2 e1 (optionally rotated).
        R (float): Separation of the cluster centres.
        rotation (float): Angle of the right cluster in the (x1, x2) plane.
        gram (np.ndarray): Overlap matrix S_R of the concatenated orbitals.
        gram_condition (float): Condition number of S_R.
        overlap (float): e_R = max_ij int |u_i| |v_j,R|.
        orbitals (OrbitalSet): S_R^(-1/2) applied to the concatenated frame.
        energy (float): E of the orthonormal frame.
        reference_energy (float): E of the two placed clusters taken separately.
        interaction (float): energy - reference_energy.
        orthonormality_error (float): max |<psi_i, psi_j> - delta_ij| of the frame.
    """

    left: GroundStateResult
    right: GroundStateResult
    R: float
    rotation: float
    gram: np.ndarray
    gram_condition: float
    overlap: float
    orbitals: OrbitalSet
    energy: float
    reference_energy: float
    interaction: float
    orthonormality_error: float


class InteractionPoint(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    R: float
    interaction: Optional[float] = None
    energy: Optional[float] = None
    gram_condition: Optional[float] = None
    overlap: Optional[float] = None
    error: Optional[str] = None


class AttractionCondition(BaseModel):
    """1 < p < 1 + sqrt(min(|mu|, |mu'|) / max(|mu|, |mu'|)) for the dimer pair."""

    p: float
    eps: float
    eps_prime: float
    threshold: float
    holds: bool


class InteractionCurve(BaseModel):
    """
    Interaction energy against separation with the decay-rate markers.

    eps >= eps_prime are the decay rates sqrt(|mu_last|) of the two clusters;
    rate_attract = 2 p eps eps' / (eps + eps') and rate_orth = 2 eps'.
    """

    points: List[InteractionPoint] = Field(default_factory=list)
    eps: float
    eps_prime: float
    rate_attract: float
    rate_orth: float
    fitted_rate: Optional[float] = None
    fit_window: Optional[Tuple[float, float]] = None
    noise_floor: float
    condition: AttractionCondition

    @property
    def failures(self) -> List[InteractionPoint]:
        return [pt for pt in self.points if pt.error is not None]

    def rows(self) -> List[dict]:
        return [
            {
                "R": pt.R,
                "interaction": pt.interaction,
                "fitted_rate": self.fitted_rate,
                "theory_rate_attract": self.rate_attract,
                "theory_rate_orth": self.rate_orth,
                "gram_condition": pt.gram_condition,
            }
            for pt in self.points
        ]


class GapPoint(BaseModel):
    """J(N) - N J(1) at one exponent."""

    p: float
    J1: Optional[float] = None
    N: int = 2
    JN: Optional[float] = None
    gap: Optional[float] = None
    converged: bool = False
    error: Optional[str] = None
