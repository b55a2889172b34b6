# fermi-nls-lab/tests/unit/test_orthonormalization.py
import numpy as np
import pytest

from app.core.entities.model import OrbitalSet
from app.core.errors import SingularGramError
from app.core.services.orthonormalization import (
    gram_matrix,
    inverse_sqrt,
    lowdin_array,
    lowdin_orthonormalize,
    orthonormality_error,
)
from app.core.services.spectral_grid import build_grid


@pytest.fixture
def shifted_gaussians():
    grid = build_grid(1, 40.0, 512)
    x = grid.axis()
    values = np.stack([np.exp(-(x - c) ** 2 / 2) for c in (-1.0, 0.0, 1.5)])
    return grid, values


@pytest.mark.unit
def test_lowdin_produces_an_orthonormal_set(shifted_gaussians):
    grid, values = shifted_gaussians
    orthonormal, condition = lowdin_array(values, grid)
    assert condition > 1
    assert orthonormality_error(orthonormal, grid) < 1e-12


@pytest.mark.unit
def test_lowdin_is_the_closest_orthonormal_set(shifted_gaussians):
    grid, values = shifted_gaussians
    S = gram_matrix(values, grid)
    normalised = values / np.sqrt(np.diag(S))[:, None]
    orthonormal, _ = lowdin_array(normalised, grid)
    # symmetric orthonormalisation keeps the Gram overlap with the input symmetric
    cross = grid.h * orthonormal @ normalised.T
    np.testing.assert_allclose(cross, cross.T, atol=1e-12)


@pytest.mark.unit
def test_orthonormal_input_is_unchanged():
    grid = build_grid(1, 10.0, 64)
    x = grid.axis()
    values = np.stack([np.sin(2 * np.pi * x / grid.L), np.cos(2 * np.pi * x / grid.L)]) * np.sqrt(2 / grid.L)
    result = lowdin_orthonormalize(OrbitalSet(grid, values, np.ones(2)))
    np.testing.assert_allclose(result.values, values, atol=1e-13)


@pytest.mark.unit
def test_linearly_dependent_orbitals_are_rejected(shifted_gaussians):
    grid, values = shifted_gaussians
    dependent = np.stack([values[0], values[1], values[0] + values[1]])
    with pytest.raises(SingularGramError):
        lowdin_array(dependent, grid)


@pytest.mark.unit
def test_inverse_square_root():
    S = np.array([[2.0, 0.5], [0.5, 1.0]])
    root, condition = inverse_sqrt(S)
    np.testing.assert_allclose(root @ S @ root, np.eye(2), atol=1e-13)
    eigenvalues = np.linalg.eigvalsh(S)
    assert condition == pytest.approx(eigenvalues[-1] / eigenvalues[0])
