# File: app/core/entities/grid.py
"""
Periodic box discretisation of R^d.

A Grid is the value object (d, L, n). A GridFunction pairs a grid with a
read-only array of real samples of shape (n,)*d.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from app.core.errors import GridError


def check_grid_parameters(d: int, L: float, n: int) -> None:
    if d not in (1, 2, 3):
        raise GridError(f"dimension must be 1, 2 or 3, got {d}")
    if not (L > 0 and np.isfinite(L)):
        raise GridError(f"box length must be positive, got {L}")
    if n < 8:
        raise GridError(f"need at least 8 points per axis, got {n}")
    if n % 2:
        raise GridError(f"points per axis must be even, got {n}")


class Grid(BaseModel):
    """Uniform periodic grid on [-L/2, L/2)^d."""

    model_config = ConfigDict(frozen=True)

    d: int
    L: float
    n: int

    @model_validator(mode="after")
    def _validate(self) -> "Grid":
        check_grid_parameters(self.d, self.L, self.n)
        return self

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def M(self) -> int:
        return self.n ** self.d

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.h ** self.d

    def axis(self) -> np.ndarray:
        """Coordinates x_j = -L/2 + j*h, j = 0..n-1."""
        return -self.L / 2 + self.h * np.arange(self.n)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """
    Real samples of a function on a Grid.

    Attributes:
        grid (Grid): The grid the samples live on.
        values (np.ndarray): Samples, shape grid.shape, finite, read-only.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != self.grid.shape:
            if values.size != self.grid.M:
                raise GridError(
                    f"expected {self.grid.M} values for grid {self.grid.shape}, got {values.size}"
                )
            values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise GridError("grid function has non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        require_same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        require_same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "GridFunction":
        return GridFunction(self.grid, self.values * float(scalar))

    __rmul__ = __mul__


def require_same_grid(*functions: GridFunction) -> Grid:
    grid = functions[0].grid
    for f in functions[1:]:
        if f.grid != grid:
            raise GridError(f"grid mismatch: {grid} vs {f.grid}")
    return grid
