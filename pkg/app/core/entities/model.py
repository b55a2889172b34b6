# File: app/core/entities/model.py
"""
Problem instance (d, p, mass) and the orbital representation of a density matrix.
"""

import math
from dataclasses import dataclass
from typing import List, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.entities.grid import Grid, GridFunction
from app.core.errors import GridError, ParameterError

# masses within this distance of an integer are treated as that integer
MASS_TOL = 1e-12


def check_exponent(d: int, p: float) -> None:
    upper = 1.0 + 2.0 / d
    if not (1.0 < p < upper):
        raise ParameterError(
            f"exponent p={p} outside the admissible open range (1, {upper:g}) for d={d}"
        )


def orbital_count(mass: float) -> int:
    """N = smallest integer with N >= mass."""
    if mass <= MASS_TOL:
        return 0
    return max(1, math.ceil(mass - MASS_TOL))


def occupations_for_mass(mass: float) -> np.ndarray:
    """nu_i = 1 for i < N and nu_N = mass - N + 1 in (0, 1]."""
    N = orbital_count(mass)
    nu = np.ones(N)
    if N:
        nu[-1] = min(1.0, mass - (N - 1))
    return nu


class ModelParams(BaseModel):
    """
    One mathematical problem instance.

    Attributes:
        d: Space dimension.
        p: Nonlinearity exponent, 1 < p < 1 + 2/d.
        mass: Total mass lambda > 0 (number of particles, possibly fractional).
    """

    model_config = ConfigDict(frozen=True, from_attributes=True)

    d: Literal[1, 2, 3]
    p: float
    mass: float = Field(gt=0)

    @model_validator(mode="after")
    def _admissible(self) -> "ModelParams":
        check_exponent(self.d, self.p)
        return self

    @property
    def N(self) -> int:
        return orbital_count(self.mass)

    def occupations(self) -> np.ndarray:
        return occupations_for_mass(self.mass)


@dataclass(frozen=True, eq=False)
class OrbitalSet:
    """
    Orbitals u_1..u_N with occupations nu_1..nu_N.

    Attributes:
        grid (Grid): Common grid.
        values (np.ndarray): Stacked samples, shape (N, *grid.shape).
        occupations (np.ndarray): nu_i, shape (N,).
    """

    grid: Grid
    values: np.ndarray
    occupations: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        nu = np.array(self.occupations, dtype=np.float64).reshape(-1)
        if values.size == 0:
            values = values.reshape((0,) + self.grid.shape)
        if values.shape[1:] != self.grid.shape or values.shape[0] != nu.size:
            raise GridError(
                f"orbital array {values.shape} does not match {nu.size} occupations on {self.grid.shape}"
            )
        if np.any(nu < 0) or np.any(nu > 1 + MASS_TOL):
            raise ParameterError("occupations must lie in [0, 1]")
        values.setflags(write=False)
        nu.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "occupations", nu)

    @classmethod
    def from_functions(cls, functions: List[GridFunction], occupations) -> "OrbitalSet":
        grid = functions[0].grid
        return cls(grid, np.stack([f.values for f in functions]), occupations)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def mass(self) -> float:
        return float(self.occupations.sum())

    @property
    def orbitals(self) -> List[GridFunction]:
        return [GridFunction(self.grid, u) for u in self.values]

    def with_values(self, values: np.ndarray) -> "OrbitalSet":
        return OrbitalSet(self.grid, values, self.occupations)
