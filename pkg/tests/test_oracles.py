"""
Test the exact reference solvers
"""

import math

import numpy as np
import pytest

from dskca import errors
from dskca.component_analysis import (
    kernel_features,
    oracles
)


# ----- dense oracles -----

def test_dense_topk_eig_sorts_and_fixes_signs():
    values, vectors = oracles.dense_topk_eig(np.diag([3.0, 1.0, 2.0]), 2)

    np.testing.assert_allclose(values, [3.0, 2.0])
    np.testing.assert_allclose(np.abs(vectors), [[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]], atol=1e-12)
    assert np.all(vectors[[0, 2], [0, 1]] > 0)


def test_dense_topk_eig_checks_inputs():
    with pytest.raises(errors.OracleError):
        oracles.dense_topk_eig(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)
    with pytest.raises(errors.OracleError):
        oracles.dense_topk_eig(np.eye(2), 3)


def test_covariance_matrix(rng):
    X = rng.standard_normal((30, 4))
    covariance = oracles.CovarianceMatrix.from_samples(X)

    assert covariance.dim == 4
    np.testing.assert_allclose(covariance.matrix, X.T @ X / 30, rtol=1e-12)

    with pytest.raises(errors.OracleError):
        oracles.CovarianceMatrix(np.diag([1.0, -1.0]))


def test_dense_svd_topk(rng):
    M = rng.standard_normal((6, 4))
    U, sigma, V = oracles.dense_svd_topk(M, 3)

    np.testing.assert_allclose(sigma, np.linalg.svd(M, compute_uv=False)[:3], rtol=1e-12)
    np.testing.assert_allclose(M @ V, U * sigma, atol=1e-10)
    np.testing.assert_allclose(U.T @ U, np.eye(3), atol=1e-12)


def test_block_operator_spectrum(rng):
    M = rng.standard_normal((3, 2))
    values = np.sort(np.linalg.eigvalsh(oracles.block_operator(M)))
    sigma = np.linalg.svd(M, compute_uv=False)

    np.testing.assert_allclose(values[[0, 1, -2, -1]], [-sigma[0], -sigma[1], sigma[1], sigma[0]], atol=1e-12)


def test_dense_cca_diagonal_case():
    correlations, directions_x, directions_y = oracles.dense_cca(np.eye(2), np.eye(3), [[0.0, 0.5, 0.0], [0.9, 0.0, 0.0]], 2)

    np.testing.assert_allclose(correlations, [0.9, 0.5], atol=1e-12)
    np.testing.assert_allclose(np.abs(directions_x), [[0.0, 1.0], [1.0, 0.0]], atol=1e-12)
    np.testing.assert_allclose(np.abs(directions_y), [[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]], atol=1e-12)


def test_dense_cca_normalizes_directions(rng):
    X = rng.standard_normal((500, 3))
    Y = X[:, :2] @ rng.standard_normal((2, 2)) + 0.5 * rng.standard_normal((500, 2))
    Cxx, Cyy, Cxy = X.T @ X / 500, Y.T @ Y / 500, X.T @ Y / 500

    correlations, directions_x, directions_y = oracles.dense_cca(Cxx, Cyy, Cxy, 2)

    assert np.all((correlations >= 0) & (correlations <= 1))
    assert correlations[0] >= correlations[1]
    np.testing.assert_allclose(directions_x.T @ Cxx @ directions_x, np.eye(2), atol=1e-10)
    np.testing.assert_allclose(directions_y.T @ Cyy @ directions_y, np.eye(2), atol=1e-10)
    np.testing.assert_allclose(np.diag(directions_x.T @ Cxy @ directions_y), correlations, atol=1e-10)


def test_dense_cca_rejects_singular_or_inconsistent_covariances():
    with pytest.raises(errors.OracleError):
        oracles.dense_cca(np.zeros((2, 2)), np.eye(2), np.zeros((2, 2)), 1)
    with pytest.raises(errors.OracleError):
        oracles.dense_cca(np.eye(2), np.eye(2), 2.0 * np.eye(2), 1)


# ----- dual kernel PCA -----

def test_dual_kpca_linear_kernel_matches_primal(linear_spec, rng):
    X = rng.standard_normal((50, 3)) * [3.0, 1.0, 0.3]
    solution = oracles.dual_kpca(X, linear_spec(3), 2)
    primal_values, primal_vectors = oracles.dense_topk_eig(oracles.CovarianceMatrix.from_samples(X), 2)

    np.testing.assert_allclose(solution.eigenvalues, primal_values, rtol=1e-10)
    # eigenfunctions of the linear kernel are x -> x'v with v the primal eigenvectors
    weights = X.T @ solution.coeffs
    np.testing.assert_allclose(np.abs(weights), np.abs(primal_vectors), atol=1e-8)


def test_dual_kpca_has_unit_rkhs_norm(gaussian_1d, rng):
    solution = oracles.dual_kpca(rng.standard_normal((80, 1)), gaussian_1d, 4)

    assert solution.k == 4
    assert np.all(np.diff(solution.eigenvalues) <= 0)
    np.testing.assert_allclose(solution.coeffs.T @ solution.gram @ solution.coeffs, np.eye(4), atol=1e-8)
    np.testing.assert_allclose(solution.evaluate(solution.points), solution.gram @ solution.coeffs, atol=1e-12)


def test_dual_kpca_checks_k(gaussian_1d):
    with pytest.raises(errors.OracleError):
        oracles.dual_kpca(np.zeros((3, 1)) + np.arange(3).reshape(-1, 1), gaussian_1d, 4)


# ----- quadrature -----

def test_quadrature_matches_gaussian_closed_form(gaussian_1d):
    solution = oracles.quadrature_operator_eig(gaussian_1d, oracles.GaussianDensity(0.0, 1.0), 400, 3)

    # unit bandwidth under N(0, 1): lambda_j = (1 / golden ratio) ** (2 j + 1)
    inverse_golden = (math.sqrt(5.0) - 1.0) / 2.0
    np.testing.assert_allclose(solution.eigenvalues, [inverse_golden, inverse_golden ** 3, inverse_golden ** 5], rtol=1e-6)


def test_quadrature_eigenfunctions(gaussian_1d):
    solution = oracles.quadrature_operator_eig(gaussian_1d, oracles.GaussianDensity(0.5, 1.2), 300, 2)

    gram_norms = solution.values.T @ (solution.weights[:, None] * solution.values)
    np.testing.assert_allclose(gram_norms, np.eye(2), atol=1e-10)
    np.testing.assert_allclose(solution.evaluate(solution.grid), solution.values, rtol=1e-6, atol=1e-8)


def test_quadrature_checks_inputs(gaussian_1d, gaussian_3d):
    density = oracles.GaussianDensity()

    with pytest.raises(errors.KernelSpecError):
        oracles.quadrature_operator_eig(gaussian_3d, density, 400, 2)
    with pytest.raises(errors.ConfigurationError):
        oracles.quadrature_operator_eig(gaussian_1d, density, 100, 2)
    with pytest.raises(errors.ConfigurationError):
        oracles.GaussianDensity(0.0, 0.0)


def test_gaussian_density_sampling(rng):
    samples = oracles.GaussianDensity(2.0, 0.5).sample(rng, 20_000)

    assert samples.shape == (20_000, 1)
    assert np.mean(samples) == pytest.approx(2.0, abs=0.02)


# ----- orthogonalized reference step -----

def test_reference_orthogonalized_step(rng):
    F, _ = np.linalg.qr(rng.standard_normal((5, 2)))
    A = rng.standard_normal((5, 5))
    A = A @ A.T

    stepped = oracles.reference_orthogonalized_step(F, A, 0.1)
    np.testing.assert_allclose(stepped.T @ stepped, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(oracles.reference_orthogonalized_step(F, A, 0.0), F, atol=1e-12)


def test_reference_orthogonalized_step_rank_deficient():
    F = np.zeros((3, 2))
    F[0, 0] = 1.0

    with pytest.raises(errors.RankDeficiencyError):
        oracles.reference_orthogonalized_step(F, np.eye(3), 0.1)


def test_gram_matrix_of_oracle_points_is_used(gaussian_1d, rng):
    points = rng.standard_normal((20, 1))
    solution = oracles.dual_kpca(points, gaussian_1d, 1)

    np.testing.assert_allclose(solution.gram, kernel_features.gram_matrix(gaussian_1d, points), atol=1e-12)
