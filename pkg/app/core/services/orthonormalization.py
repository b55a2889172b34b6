# File: app/core/services/orthonormalization.py
"""
Loewdin (symmetric) orthonormalisation: Psi = S^(-1/2) U with S the Gram matrix.
"""

from typing import Tuple

import numpy as np
from scipy import linalg as sla

from app.core.entities.grid import Grid
from app.core.entities.model import OrbitalSet
from app.core.errors import SingularGramError
from app.core.services.spectral_grid import gram_array

# Gram eigenvalues below this are treated as singular
GRAM_FLOOR = 1e-12


def gram_matrix(values: np.ndarray, grid: Grid) -> np.ndarray:
    """S_ij = <u_i, u_j>, symmetrised."""
    S = gram_array(values, values, grid)
    return 0.5 * (S + S.T)


def inverse_sqrt(S: np.ndarray, floor: float = GRAM_FLOOR) -> Tuple[np.ndarray, float]:
    """
    S^(-1/2) through the symmetric eigendecomposition.

    Returns:
        (S^(-1/2), condition number of S)

    Raises:
        SingularGramError: smallest eigenvalue below floor.
    """
    w, v = sla.eigh(S)
    if w[0] < floor:
        raise SingularGramError(float(w[0]), floor)
    root = (v / np.sqrt(w)) @ v.T
    return 0.5 * (root + root.T), float(w[-1] / w[0])


def lowdin_array(values: np.ndarray, grid: Grid, floor: float = GRAM_FLOOR) -> Tuple[np.ndarray, float]:
    """Orthonormalised stack and the Gram condition number of the input."""
    if values.shape[0] == 0:
        return values, 1.0
    root, condition = inverse_sqrt(gram_matrix(values, grid), floor)
    flat = values.reshape(values.shape[0], -1)
    return (root @ flat).reshape(values.shape), condition


def lowdin_orthonormalize(orbitals: OrbitalSet, floor: float = GRAM_FLOOR) -> OrbitalSet:
    values, _ = lowdin_array(orbitals.values, orbitals.grid, floor)
    return orbitals.with_values(values)


def orthonormality_error(values: np.ndarray, grid: Grid) -> float:
    """max_ij |<u_i, u_j> - delta_ij|."""
    if values.shape[0] == 0:
        return 0.0
    S = gram_matrix(values, grid)
    return float(np.max(np.abs(S - np.eye(S.shape[0]))))


def mix_orbitals(orbitals: OrbitalSet, rotation: np.ndarray) -> OrbitalSet:
    """u'_i = sum_j R_ij u_j; occupations unchanged."""
    flat = orbitals.values.reshape(orbitals.N, -1)
    return orbitals.with_values((rotation @ flat).reshape(orbitals.values.shape))
