# File: app/core/services/mean_field.py
"""
Energy functional and mean-field operator of an orbital set.

    E(gamma) = sum_i nu_i int |grad u_i|^2 - (1/p) int rho^p,   rho = sum_i nu_i u_i^2
    H_gamma  = -Delta - rho^(p-1)

lowest_eigenpairs diagonalises H_gamma: dense (scipy.linalg.eigh) on small
grids, LOBPCG with a kinetic preconditioner on large ones, Lanczos (eigsh) as
fallback.
"""

import logging
import warnings
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg as sla
from scipy import fft as sfft
from scipy.sparse.linalg import LinearOperator, eigsh, lobpcg

from app.core.entities.grid import Grid, GridFunction, require_same_grid
from app.core.entities.model import OrbitalSet
from app.core.errors import EigenSolverError
from app.core.services.spectral_grid import (
    apply_fourier_multiplier,
    integrate,
    k_squared,
    kinetic_array,
    laplacian_array,
)

logger = logging.getLogger(__name__)

# largest number of grid points diagonalised with a dense solver
DENSE_LIMIT = 2048


def density_array(values: np.ndarray, occupations: np.ndarray) -> np.ndarray:
    return np.einsum("i,i...->...", occupations, values ** 2)


def potential_array(rho: np.ndarray, p: float) -> np.ndarray:
    """rho^(p-1), with rho clipped at zero."""
    return np.maximum(rho, 0.0) ** (p - 1.0)


def hamiltonian_array(values: np.ndarray, potential: np.ndarray, grid: Grid) -> np.ndarray:
    """H u = -Delta u - V u for a batch of fields."""
    return laplacian_array(values, grid) - potential * values


def energy_terms(orbitals: OrbitalSet, p: float) -> Tuple[float, float]:
    """
    Kinetic and interaction parts of the energy.

    Returns:
        (T, P) with T = sum_i nu_i int |grad u_i|^2 and P = int rho^p.
    """
    if orbitals.N == 0:
        return 0.0, 0.0
    kinetic = float(np.dot(orbitals.occupations, kinetic_array(orbitals.values, orbitals.grid)))
    rho = density_array(orbitals.values, orbitals.occupations)
    return kinetic, integrate(np.maximum(rho, 0.0) ** p, orbitals.grid)


def energy(orbitals: OrbitalSet, p: float) -> float:
    """E = T - P/p; zero for an empty orbital set."""
    kinetic, interaction = energy_terms(orbitals, p)
    return kinetic - interaction / p


def density(orbitals: OrbitalSet) -> GridFunction:
    """rho = sum_i nu_i u_i^2."""
    return GridFunction(orbitals.grid, density_array(orbitals.values, orbitals.occupations))


def mean_field_apply(rho: GridFunction, p: float, u: GridFunction) -> GridFunction:
    """-Delta u - rho^(p-1) u."""
    grid = require_same_grid(rho, u)
    return GridFunction(grid, hamiltonian_array(u.values, potential_array(rho.values, p), grid))


def energy_gradient(orbitals: OrbitalSet, p: float) -> np.ndarray:
    """L2 gradient of E with respect to each orbital: 2 nu_i H_gamma u_i."""
    rho = density_array(orbitals.values, orbitals.occupations)
    hu = hamiltonian_array(orbitals.values, potential_array(rho, p), orbitals.grid)
    return 2.0 * orbitals.occupations.reshape((-1,) + (1,) * orbitals.grid.d) * hu


# ----------------------------------------------------------------------------
# Eigenpairs
# ----------------------------------------------------------------------------

def _dense_kinetic_matrix(grid: Grid) -> np.ndarray:
    """-Delta as a dense M x M matrix: Kronecker sum of 1D spectral circulants."""
    k_full = 2 * np.pi * sfft.fftfreq(grid.n, grid.h)
    one_d = sla.circulant(sfft.ifft(k_full ** 2).real)
    eye = np.eye(grid.n)
    total = np.zeros((grid.M, grid.M))
    for axis in range(grid.d):
        factors = [eye] * grid.d
        factors[axis] = one_d
        term = factors[0]
        for factor in factors[1:]:
            term = np.kron(term, factor)
        total += term
    return total


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of every column positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _residual_norms(potential: np.ndarray, grid: Grid, mu: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """||H phi_i - mu_i phi_i|| in the grid norm; phi has shape (k, *grid.shape)."""
    residual = hamiltonian_array(phi, potential, grid) - mu.reshape((-1,) + (1,) * grid.d) * phi
    return np.sqrt(grid.cell_volume * np.sum(residual.reshape(len(mu), -1) ** 2, axis=1))


def _dense_eigenpairs(potential: np.ndarray, grid: Grid, k: int) -> Tuple[np.ndarray, np.ndarray]:
    matrix = _dense_kinetic_matrix(grid)
    matrix[np.diag_indices_from(matrix)] -= potential.ravel()
    matrix = 0.5 * (matrix + matrix.T)
    mu, vectors = sla.eigh(matrix, subset_by_index=[0, k - 1])
    return mu, vectors


def _iterative_eigenpairs(
    potential: np.ndarray, grid: Grid, k: int, eig_tol: float, guess: Optional[np.ndarray]
) -> Tuple[np.ndarray, np.ndarray]:
    shape, M = grid.shape, grid.M
    flat_potential = potential.ravel()

    def matmat(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        batch = x.reshape(M, -1).T.reshape((-1,) + shape)
        out = laplacian_array(batch, grid).reshape(batch.shape[0], M).T
        return out - flat_potential[:, None] * x.reshape(M, -1)

    operator = LinearOperator(
        (M, M), matvec=lambda x: matmat(x).ravel(), matmat=matmat, dtype=np.float64
    )
    shift = max(1.0, float(flat_potential.max()))
    multiplier = 1.0 / (shift + k_squared(grid))

    def precondition(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        batch = x.reshape(M, -1).T.reshape((-1,) + shape)
        return apply_fourier_multiplier(batch, grid, multiplier).reshape(batch.shape[0], M).T.reshape(x.shape)

    preconditioner = LinearOperator((M, M), matvec=precondition, matmat=precondition, dtype=np.float64)

    if guess is None or guess.shape != (M, k):
        rng = np.random.default_rng(12345)
        guess = rng.standard_normal((M, k))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mu, vectors = lobpcg(
            operator, guess, M=preconditioner, tol=eig_tol, maxiter=1000, largest=False
        )
    order = np.argsort(mu)
    mu, vectors = mu[order], vectors[:, order]
    vectors, _ = np.linalg.qr(vectors)
    phi = vectors.T.reshape((k,) + shape) / np.sqrt(grid.cell_volume)
    if np.max(_residual_norms(potential, grid, mu, phi)) <= eig_tol:
        return mu, vectors

    logger.debug("LOBPCG missed eig_tol=%.1e for k=%d; falling back to eigsh", eig_tol, k)
    try:
        mu, vectors = eigsh(operator, k=k, which="SA", v0=guess[:, 0], tol=0)
    except Exception as exc:
        raise EigenSolverError(f"Lanczos fallback failed: {exc}") from exc
    order = np.argsort(mu)
    return mu[order], vectors[:, order]


def eigenpairs_array(
    potential: np.ndarray,
    grid: Grid,
    k: int,
    eig_tol: float = 1e-8,
    guess: Optional[np.ndarray] = None,
    dense_limit: int = DENSE_LIMIT,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    k lowest eigenpairs of -Delta - potential.

    Args:
        potential: V on the grid.
        grid: The grid.
        k: Number of eigenpairs.
        eig_tol: Accepted residual per pair.
        guess: Optional start block, shape (k, *grid.shape).
        dense_limit: Largest M handled by the dense solver.

    Returns:
        (mu, phi): ascending eigenvalues and orthonormal eigenfunctions, phi of shape (k, *grid.shape).

    Raises:
        EigenSolverError: no eigensolver reached eig_tol.
    """
    if k < 1 or k > grid.M:
        raise ValueError(f"cannot compute {k} eigenpairs on {grid.M} points")
    if grid.M <= dense_limit or 5 * k >= grid.M:
        mu, vectors = _dense_eigenpairs(potential, grid, k)
    else:
        start = None if guess is None else guess.reshape(k, -1).T
        mu, vectors = _iterative_eigenpairs(potential, grid, k, eig_tol, start)

    vectors = _fix_signs(vectors)
    phi = vectors.T.reshape((k,) + grid.shape) / np.sqrt(grid.cell_volume)
    residuals = _residual_norms(potential, grid, mu, phi)
    if np.max(residuals) > eig_tol:
        raise EigenSolverError(
            f"eigenpair residual {np.max(residuals):.2e} above eig_tol={eig_tol:.1e}"
        )
    return mu, phi


def lowest_eigenpairs(
    rho: GridFunction, p: float, k: int, eig_tol: float = 1e-8
) -> List[Tuple[float, GridFunction]]:
    """
    The k lowest eigenpairs of -Delta - rho^(p-1) on the periodic box.

    Eigenvalues ascending, eigenfunctions orthonormal in the grid inner product.
    """
    mu, phi = eigenpairs_array(potential_array(rho.values, p), rho.grid, k, eig_tol)
    return [(float(m), GridFunction(rho.grid, f)) for m, f in zip(mu, phi)]
