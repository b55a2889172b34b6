# File: app/core/services/spectral_grid.py
"""
Spectral operations on the periodic grid.

Real fields are stored on the grid and moved to Fourier space only inside the
transforms (scipy.fft real transforms over the trailing d axes). Every function
here is pure; the cached wavenumber tables are read-only, so the module is safe
to use from several threads.

Conventions:
    f_hat = rfftn(f)                          (unnormalised)
    <f, g> = h^d * sum f g                    (midpoint rule)
    int |grad f|^2 = h^d / M * sum |k|^2 |f_hat|^2
"""

from functools import lru_cache
from typing import Callable, Sequence, Tuple, Union

import numpy as np
from scipy import fft as sfft
from scipy import ndimage

from app.core.entities.grid import Grid, GridFunction, check_grid_parameters, require_same_grid

Shift = Union[float, Sequence[float]]


def build_grid(d: int, L: float, n: int) -> Grid:
    """
    Build the grid x_j = -L/2 + j*h on each axis, h = L/n, periodic.

    Raises:
        GridError: odd n, n < 8, nonpositive L, or d outside {1, 2, 3}.
    """
    check_grid_parameters(d, L, n)
    return Grid(d=d, L=float(L), n=int(n))


# ----------------------------------------------------------------------------
# Wavenumber tables
# ----------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _rfft_tables(grid: Grid) -> Tuple[Tuple[np.ndarray, ...], np.ndarray, np.ndarray]:
    """Axis wavenumbers, |k|^2 and Parseval weights on the rfft half-spectrum."""
    n, h, d = grid.n, grid.h, grid.d
    full = 2 * np.pi * sfft.fftfreq(n, h)
    half = 2 * np.pi * sfft.rfftfreq(n, h)
    axes = [full] * (d - 1) + [half]
    mesh = np.meshgrid(*axes, indexing="ij")
    k2 = sum(k ** 2 for k in mesh)
    # interior rfft columns stand for two modes of the full spectrum
    weight_axis = np.full(half.size, 2.0)
    weight_axis[0] = 1.0
    weight_axis[-1] = 1.0
    weights = np.broadcast_to(weight_axis, k2.shape).copy()
    for arr in (*mesh, k2, weights):
        arr.setflags(write=False)
    return tuple(mesh), k2, weights


def wavenumbers(grid: Grid) -> Tuple[np.ndarray, ...]:
    """Per-axis wavenumber meshes on the rfft half-spectrum."""
    return _rfft_tables(grid)[0]


def k_squared(grid: Grid) -> np.ndarray:
    return _rfft_tables(grid)[1]


def axis_frequencies(grid: Grid) -> np.ndarray:
    """The frequency set {2 pi k / L : k = -n/2..n/2-1}, ascending."""
    return np.sort(2 * np.pi * sfft.fftfreq(grid.n, grid.h))


@lru_cache(maxsize=32)
def _coordinates(grid: Grid) -> Tuple[np.ndarray, ...]:
    mesh = np.meshgrid(*([grid.axis()] * grid.d), indexing="ij")
    for arr in mesh:
        arr.setflags(write=False)
    return tuple(mesh)


def coordinates(grid: Grid) -> Tuple[np.ndarray, ...]:
    """Coordinate meshes x_1..x_d, each of shape grid.shape."""
    return _coordinates(grid)


def radius(grid: Grid, center: Sequence[float] = None) -> np.ndarray:
    """Periodic distance to center (minimum image)."""
    center = np.zeros(grid.d) if center is None else np.atleast_1d(center)
    r2 = np.zeros(grid.shape)
    for x, c in zip(coordinates(grid), center):
        dx = (x - c + grid.L / 2) % grid.L - grid.L / 2
        r2 = r2 + dx ** 2
    return np.sqrt(r2)


# ----------------------------------------------------------------------------
# Array kernels (trailing d axes are space, leading axes are batch)
# ----------------------------------------------------------------------------

def _space_axes(grid: Grid) -> Tuple[int, ...]:
    return tuple(range(-grid.d, 0))


def forward(values: np.ndarray, grid: Grid) -> np.ndarray:
    return sfft.rfftn(values, axes=_space_axes(grid))


def backward(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    return sfft.irfftn(coeffs, s=grid.shape, axes=_space_axes(grid))


def apply_fourier_multiplier(values: np.ndarray, grid: Grid, multiplier: np.ndarray) -> np.ndarray:
    """Multiply the spectrum of (a batch of) real fields by a real multiplier on the half-spectrum."""
    return backward(forward(values, grid) * multiplier, grid)


def laplacian_array(values: np.ndarray, grid: Grid) -> np.ndarray:
    """-Delta applied to a batch of fields."""
    return apply_fourier_multiplier(values, grid, k_squared(grid))


def kinetic_array(values: np.ndarray, grid: Grid) -> np.ndarray:
    """int |grad u|^2 for each field of a batch."""
    _, k2, weights = _rfft_tables(grid)
    coeffs = forward(values, grid)
    spectral = (weights * k2) * np.abs(coeffs) ** 2
    return grid.cell_volume / grid.M * spectral.sum(axis=_space_axes(grid))


def gram_array(left: np.ndarray, right: np.ndarray, grid: Grid) -> np.ndarray:
    """Matrix of inner products <left_i, right_j> for two stacks of fields."""
    a = left.reshape(left.shape[0], -1)
    b = right.reshape(right.shape[0], -1)
    return grid.cell_volume * (a @ b.T)


def integrate(values: np.ndarray, grid: Grid) -> float:
    return float(grid.cell_volume * np.sum(values))


# ----------------------------------------------------------------------------
# GridFunction operations
# ----------------------------------------------------------------------------

def grid_function(grid: Grid, values) -> GridFunction:
    return GridFunction(grid, values)


def sample(grid: Grid, fn: Callable[..., np.ndarray]) -> GridFunction:
    """Evaluate fn(x_1, ..., x_d) on the grid coordinates."""
    return GridFunction(grid, fn(*coordinates(grid)))


def inner_product(f: GridFunction, g: GridFunction) -> float:
    """
    h^d * sum f g.

    Raises:
        GridError: f and g live on different grids.
    """
    grid = require_same_grid(f, g)
    return float(grid.cell_volume * np.vdot(f.values, g.values))


def norm(f: GridFunction) -> float:
    return float(np.sqrt(inner_product(f, f)))


def fourier_norm_squared(f: GridFunction) -> float:
    """Parseval side of <f, f>: h^d / M * sum |f_hat|^2."""
    grid = f.grid
    weights = _rfft_tables(grid)[2]
    coeffs = forward(f.values, grid)
    return float(grid.cell_volume / grid.M * np.sum(weights * np.abs(coeffs) ** 2))


def laplacian_apply(f: GridFunction) -> GridFunction:
    """-Delta f with Fourier coefficients multiplied by |k|^2 (positive semidefinite)."""
    return GridFunction(f.grid, laplacian_array(f.values, f.grid))


def kinetic_energy(f: GridFunction) -> float:
    """int |grad f|^2 through Parseval; nonnegative."""
    return float(kinetic_array(f.values, f.grid))


def translate_array(values: np.ndarray, grid: Grid, shift: Shift) -> np.ndarray:
    s = np.broadcast_to(np.asarray(shift, dtype=float), (grid.d,))
    phase = np.zeros(k_squared(grid).shape)
    for k, sa in zip(wavenumbers(grid), s):
        phase = phase + k * sa
    return backward(forward(values, grid) * np.exp(-1j * phase), grid)


def translate(f: GridFunction, shift: Shift) -> GridFunction:
    """f(x - shift) by a Fourier phase; exact for band-limited data, periodic."""
    return GridFunction(f.grid, translate_array(f.values, f.grid, shift))


def power(f: GridFunction, exponent: float) -> GridFunction:
    """Pointwise |f|^exponent."""
    return GridFunction(f.grid, np.abs(f.values) ** exponent)


def circular_center(values: np.ndarray, grid: Grid) -> np.ndarray:
    """
    Centre of a nonnegative field on the torus, one coordinate per axis.

    Uses the argument of the first Fourier moment, so clusters straddling the
    periodic boundary are located correctly.
    """
    center = np.empty(grid.d)
    for axis_index, x in enumerate(coordinates(grid)):
        theta = 2 * np.pi * (x + grid.L / 2) / grid.L
        moment = np.sum(values * np.exp(1j * theta))
        center[axis_index] = (np.angle(moment) % (2 * np.pi)) * grid.L / (2 * np.pi) - grid.L / 2
    return center


def resample_array(values: np.ndarray, source: Grid, target: Grid, order: int = 3) -> np.ndarray:
    """
    Move fields from source onto target by cubic spline interpolation.

    Leading axes are batch. Points of target outside the source box are set to
    zero, so a grown box sees the source field padded with vacuum.
    """
    if source == target:
        return np.array(values, copy=True)
    if source.d != target.d:
        raise ValueError(f"cannot resample from d={source.d} to d={target.d}")
    mesh = coordinates(target)
    index = np.stack([(x + source.L / 2) / source.h for x in mesh])
    inside = np.ones(target.shape, dtype=bool)
    for x in mesh:
        inside &= np.abs(x) < source.L / 2
    batch = values.shape[: values.ndim - source.d]
    flat = values.reshape((-1,) + source.shape)
    out = np.empty((flat.shape[0],) + target.shape)
    for row, field in enumerate(flat):
        out[row] = ndimage.map_coordinates(field, index, order=order, mode="grid-wrap") * inside
    return out.reshape(batch + target.shape)
