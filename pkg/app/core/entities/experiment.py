# File: app/core/entities/experiment.py

from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator

from app.config.settings import settings
from app.config.solver_config import SolverConfig
from app.core.entities.model import check_exponent

SCHEMA_VERSION = 1

ExperimentKind = Literal[
    "solve",
    "sweep-lambda",
    "binding-table",
    "bounds-report",
    "dimer-curve",
    "figure1",
    "figure2",
    "figure3",
    "figure4",
    "gap-vs-p",
]

# (d, p, mass) used by a figure run when the config leaves them unset
FIGURE_DEFAULTS: Dict[str, Dict[str, float]] = {
    "figure1": {"dim": 1, "p": 1.3, "mass": 15.0},
    "figure2": {"dim": 2, "p": 1.5},
    "figure3": {"dim": 2, "p": 1.5},
    "figure4": {"dim": 1, "p": 1.3},
}


class ExperimentSpec(BaseModel):
    """
    One experiment: what to run, on which model, with which solver settings.

    Attributes:
        kind: Experiment to run.
        dim: Space dimension d.
        p: Nonlinearity exponent, 1 < p < 1 + 2/d.
        mass: lambda for single solves and dimer halves.
        masses: lambda grid for sweeps (figure4 defaults to 0.25..3 in steps of 0.25).
        n_max: Largest integer mass for binding tables and the 2D figures.
        p_list: Exponents for gap-vs-p.
        r_list: Separations for dimer curves.
        rotation: Angle of the right dimer cluster (d >= 2).
        output: Output directory.
        seed: Seed of random restarts (copied into the solver config).
        threads: Worker threads (copied into the solver config).
        solver: Solver settings.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: ExperimentKind
    dim: int = Field(1, ge=1, le=3)
    p: float = 1.3
    mass: float = Field(1.0, gt=0)
    masses: Optional[List[float]] = None
    n_max: int = Field(4, ge=1)
    p_list: Optional[List[float]] = None
    r_list: Optional[List[float]] = None
    rotation: float = 0.0
    output: Path = Field(default_factory=lambda: settings.OUTPUT_DIR)
    seed: int = 0
    threads: int = Field(default_factory=lambda: settings.THREADS, ge=1)
    solver: SolverConfig = Field(default_factory=SolverConfig)

    @field_validator("masses")
    @classmethod
    def _positive_ascending(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is None:
            return value
        if not value or any(m <= 0 for m in value):
            raise ValueError("masses must be a nonempty list of positive numbers")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("masses must be strictly ascending")
        return value

    @field_validator("r_list")
    @classmethod
    def _ascending_separations(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None and any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("r_list must be strictly ascending")
        return value

    @field_validator("p")
    @classmethod
    def _admissible_p(cls, value: float, info: ValidationInfo) -> float:
        if "dim" in info.data:
            check_exponent(info.data["dim"], value)
        return value

    @field_validator("p_list")
    @classmethod
    def _admissible_p_list(cls, value: Optional[List[float]], info: ValidationInfo) -> Optional[List[float]]:
        for p in value or []:
            if not 1.0 < p < 2.0:
                raise ValueError(f"p = {p} outside (1, 2)")
            if "dim" in info.data:
                check_exponent(info.data["dim"], p)
        return value

    def solver_config(self) -> SolverConfig:
        """Solver settings with the run-level seed and thread count applied."""
        return self.solver.model_copy(update={"seed": self.seed, "threads": self.threads})


class RunRecord(BaseModel):
    """
    Self-describing result of one experiment.

    Attributes:
        schema_version: Layout version of this record.
        code_version: Package version that produced it.
        spec: Snapshot of the experiment.
        results: Kind-specific payload (plain JSON values only).
        files: Relative paths of the CSV and binary files written next to the record.
        converged: Per-solve convergence flags, keyed by a label such as "mass=2".
        wall_time: Seconds spent in run().
        created_at: UTC timestamp.
    """

    model_config = ConfigDict(ser_json_inf_nan="constants")

    schema_version: int = SCHEMA_VERSION
    code_version: str = Field(default_factory=lambda: settings.CODE_VERSION)
    spec: ExperimentSpec
    results: Dict[str, Any] = Field(default_factory=dict)
    files: List[str] = Field(default_factory=list)
    converged: Dict[str, bool] = Field(default_factory=dict)
    wall_time: float = 0.0
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))

    @property
    def all_converged(self) -> bool:
        return all(self.converged.values())
