# File: app/core/use_cases/interfaces/iground_state_engine.py
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from app.config.solver_config import SolverConfig
from app.core.entities.model import OrbitalSet

# called after every accepted iteration with (iteration, orbital stack, energy)
IterationObserver = Callable[[int, np.ndarray, float], None]


@dataclass
class EngineOutcome:
    """
    Result of one inner minimisation.

    Attributes:
        orbitals (OrbitalSet): Final orbitals, orthonormal.
        energy (float): Final energy.
        iterations (int): Iterations performed.
        converged (bool): Residual and energy criteria met.
        max_residual (float): Largest Euler-Lagrange residual at exit.
        energy_trace (List[float]): Energy after every iteration.
    """

    orbitals: OrbitalSet
    energy: float
    iterations: int
    converged: bool
    max_residual: float
    energy_trace: List[float] = field(default_factory=list)


class IGroundStateEngine(ABC):
    """
    Interface for the inner minimisers of the orthonormal NLS energy.

    Engines differ in how they move; convergence is judged the same way by all
    of them (per-orbital residual below el_tol).
    """

    name: str = "engine"

    @abstractmethod
    def minimise(
        self,
        start: OrbitalSet,
        p: float,
        config: SolverConfig,
        observer: Optional[IterationObserver] = None,
    ) -> EngineOutcome:
        """
        Minimise the energy from the given orbitals, keeping occupations fixed.
        """
        pass
