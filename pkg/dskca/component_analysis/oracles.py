"""
Contains exact desk-scale references for the stochastic solvers.

.. class:: CovarianceMatrix
    Symmetric PSD matrix (covariance A or mini-batch covariance A_t)
.. class:: DualEigenSolution
    Exact kernel PCA solution expanded over the data points
.. class:: GaussianDensity
    One dimensional N(mean, std^2) data density
.. class:: QuadratureEigenSolution
    Eigenfunctions of the covariance operator on a quadrature grid

.. function:: dual_kpca(data: numpy.ndarray, spec: KernelSpec, k: int) -> DualEigenSolution
    Return the top-k eigenpairs of (1/n)K
.. function:: dense_topk_eig(C: numpy.ndarray, k: int) -> tuple[numpy.ndarray, numpy.ndarray]
    Return descending eigenvalues and orthonormal eigenvectors
.. function:: dense_svd_topk(M: numpy.ndarray, k: int) -> tuple[numpy.ndarray, numpy.ndarray, numpy.ndarray]
    Return the top-k singular triplets
.. function:: dense_cca(Cxx: numpy.ndarray, Cyy: numpy.ndarray, Cxy: numpy.ndarray, k: int)
        -> tuple[numpy.ndarray, numpy.ndarray, numpy.ndarray]
    Return canonical correlations and directions
.. function:: quadrature_operator_eig(spec: KernelSpec, density: GaussianDensity, grid_size: int, k: int)
        -> QuadratureEigenSolution
    Return eigenpairs of the covariance operator discretized on a grid
.. function:: reference_orthogonalized_step(F: numpy.ndarray, A_t: numpy.ndarray, eta: float) -> numpy.ndarray
    Return the gradient step followed by symmetric orthogonalization
"""

from __future__ import annotations

import dataclasses
import logging
from typing import (
    Any,
    Union
)

import numpy as np
import scipy.linalg
from scipy import stats

from . import (
    kernel_features,
    settings
)
from .kernel_features import KernelSpec
from .. import errors


logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-12
PSD_TOLERANCE = 1e-10
CONSISTENCY_TOLERANCE = 1e-8
DENSE_LIMIT = 5000


def _sign_fixed(vectors: np.ndarray) -> np.ndarray:
    """ Flip columns so that the first entry of largest absolute value is positive """
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.where(vectors[pivots, np.arange(vectors.shape[1])] < 0, -1.0, 1.0)

    return vectors * signs


def _check_k(k: int, limit: int) -> None:
    if not 1 <= k <= limit:
        raise errors.OracleError(f'k must be in [1, {limit}], got {k}')


def _symmetric(C: Any, name: str = 'C') -> np.ndarray:
    C = np.asarray(C.matrix if isinstance(C, CovarianceMatrix) else C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise errors.DimensionMismatchError(f'{name} must be square, got shape {C.shape}')
    if not np.all(np.isfinite(C)):
        raise errors.NonFiniteError(f'{name} contains non-finite values')
    if np.max(np.abs(C - C.T), initial=0.0) > SYMMETRY_TOLERANCE * max(1.0, np.max(np.abs(C), initial=0.0)):
        raise errors.OracleError(f'{name} is not symmetric')

    return C


@dataclasses.dataclass(frozen=True)
class CovarianceMatrix:
    """ Implements a symmetric PSD matrix (population covariance A or mini-batch covariance A_t) """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        matrix = _symmetric(self.matrix, 'covariance')
        smallest = scipy.linalg.eigvalsh(matrix, subset_by_index=[0, 0])[0] if matrix.size else 0.0
        if smallest < -PSD_TOLERANCE * max(1.0, np.max(np.abs(matrix), initial=0.0)):
            raise errors.OracleError(f'covariance is not PSD (min eigenvalue {smallest:.3g})')

        object.__setattr__(self, 'matrix', matrix)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_samples(cls, X: Any) -> CovarianceMatrix:
        """ Return the uncentered empirical covariance X'X / n of the rows of X """
        X = np.asarray(X, dtype=np.float64)
        product = X.T @ X / X.shape[0]

        return cls((product + product.T) / 2.0)


# ----- KERNEL PCA -----

@dataclasses.dataclass(frozen=True)
class DualEigenSolution:
    """
    Implements exact kernel PCA over `points`: v_i(.) = sum_j coeffs[j, i] k(points[j], .).

    `eigenvalues` are those of (1/n)K, i.e. of the empirical covariance operator; columns have unit
    RKHS norm (coeffs' gram coeffs = I) unless their eigenvalue is numerically zero.
    """

    spec: KernelSpec
    points: np.ndarray
    coeffs: np.ndarray
    eigenvalues: np.ndarray
    gram: np.ndarray

    @property
    def k(self) -> int:
        return self.coeffs.shape[1]

    def evaluate(self, X: Any) -> np.ndarray:
        """ Evaluate the eigenfunctions on the rows of X, matrix [m x k] """
        return kernel_features.gram_matrix(self.spec, X, self.points) @ self.coeffs


def dual_kpca(data: Any, spec: KernelSpec, k: int) -> DualEigenSolution:
    """
    Return the top-k eigenpairs of the empirical covariance operator via the n x n Gram matrix.

    Solves (1/n) K alpha = lambda alpha and rescales alpha = u / sqrt(n lambda) so that
    alpha' K alpha = 1.

    :param data: matrix [n x dim], n <= 5000
    :type data: numpy.ndarray
    :param spec: kernel specification
    :type spec: KernelSpec
    :param k: number of eigenpairs
    :type k: int

    :return: dual solution, eigenvalues descending
    :rtype: DualEigenSolution

    :raises errors.OracleError: k > n, n too large for a dense solve, or K not PSD
    """

    points = kernel_features.as_points(data, spec.dim, 'data')
    n_points = points.shape[0]
    if n_points > DENSE_LIMIT:
        raise errors.OracleError(f'dense dual solve is limited to {DENSE_LIMIT} points, got {n_points}')
    _check_k(k, n_points)

    gram = kernel_features.gram_matrix(spec, points)
    gram = (gram + gram.T) / 2.0

    smallest = scipy.linalg.eigvalsh(gram, subset_by_index=[0, 0])[0]
    if smallest < -settings.GRAM_PSD_TOLERANCE * n_points:
        raise errors.OracleError(f'gram matrix is not PSD (min eigenvalue {smallest:.3g})')

    values, vectors = scipy.linalg.eigh(gram / n_points, subset_by_index=[n_points - k, n_points - 1])
    values, vectors = values[::-1], vectors[:, ::-1]

    coeffs = vectors.copy()
    largest = max(values[0], 0.0)
    for column, value in enumerate(values):
        if value > settings.ZERO_EIGENVALUE_TOLERANCE * largest:
            coeffs[:, column] /= np.sqrt(n_points * value)
        else:
            logger.warning('eigenvalue %d is numerically zero (%.3g); its coefficients keep unit euclidean norm',
                           column, value)

    return DualEigenSolution(spec=spec, points=points, coeffs=_sign_fixed(coeffs), eigenvalues=values, gram=gram)


# ----- DENSE FINITE DIMENSIONAL ORACLES -----

def dense_topk_eig(C: Union[CovarianceMatrix, Any], k: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Return the top-k eigenpairs of a symmetric matrix.

    :param C: symmetric matrix [d x d]
    :type C: Union[CovarianceMatrix, numpy.ndarray]
    :param k: number of eigenpairs
    :type k: int

    :return: eigenvalues (descending) and orthonormal eigenvectors [d x k]
    :rtype: tuple[numpy.ndarray, numpy.ndarray]

    :raises errors.OracleError: C is not symmetric
    """

    C = _symmetric(C)
    _check_k(k, C.shape[0])

    values, vectors = np.linalg.eigh(C)
    order = np.argsort(values, kind='stable')[::-1][:k]

    return values[order], _sign_fixed(vectors[:, order])


def block_operator(M: Any) -> np.ndarray:
    """ Return the symmetric matrix [[0, M'], [M, 0]] whose eigenvalues are +- the singular values of M """
    M = np.asarray(M, dtype=np.float64)
    rows, cols = M.shape

    return np.block([[np.zeros((cols, cols)), M.T], [M, np.zeros((rows, rows))]])


def dense_svd_topk(M: Any, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Return the top-k singular triplets of M.

    The triplets are checked against the top eigenvalues of :func:`block_operator`.

    :param M: matrix [m x n]
    :type M: numpy.ndarray
    :param k: number of triplets
    :type k: int

    :return: U [m x k], singular values (descending), V [n x k]
    :rtype: tuple[numpy.ndarray, numpy.ndarray, numpy.ndarray]

    :raises errors.OracleError: the block operator check fails
    """

    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise errors.DimensionMismatchError(f'M must be a matrix, got shape {M.shape}')
    _check_k(k, min(M.shape))

    U, sigma, Vt = np.linalg.svd(M, full_matrices=False)
    U, sigma, V = U[:, :k], sigma[:k], Vt[:k].T

    pivots = np.argmax(np.abs(U), axis=0)
    signs = np.where(U[pivots, np.arange(k)] < 0, -1.0, 1.0)
    U, V = U * signs, V * signs

    block_values = np.linalg.eigvalsh(block_operator(M))[::-1][:k]
    if np.max(np.abs(block_values - sigma)) > CONSISTENCY_TOLERANCE * max(1.0, sigma[0]):
        raise errors.OracleError('singular values disagree with the block operator eigenvalues')

    return U, sigma, V


def _cholesky(C: np.ndarray, name: str) -> np.ndarray:
    try:
        return scipy.linalg.cholesky(C, lower=True)
    except np.linalg.LinAlgError as error:
        raise errors.OracleError(f'{name} is singular or not PD; add a ridge') from error


def dense_cca(Cxx: Any, Cyy: Any, Cxy: Any, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Return the top-k canonical correlations and directions of two views.

    Whitens both views with Cholesky factors and takes the SVD of Lx^-1 Cxy Ly^-T. The result is
    checked against the pencil ([[Cxx, Cxy], [Cyx, Cyy]], diag(Cxx, Cyy)) whose top generalized
    eigenvalues are 1 + sigma_i.

    :param Cxx: left covariance [dx x dx], PD
    :type Cxx: numpy.ndarray
    :param Cyy: right covariance [dy x dy], PD
    :type Cyy: numpy.ndarray
    :param Cxy: cross covariance [dx x dy]
    :type Cxy: numpy.ndarray
    :param k: number of pairs
    :type k: int

    :return: correlations (descending, in [0, 1]), directions_x [dx x k], directions_y [dy x k]
        normalized so that g' C g = 1
    :rtype: tuple[numpy.ndarray, numpy.ndarray, numpy.ndarray]

    :raises errors.OracleError: Cxx or Cyy singular, or the pencil check fails
    """

    Cxx, Cyy = _symmetric(Cxx, 'Cxx'), _symmetric(Cyy, 'Cyy')
    Cxy = np.asarray(Cxy, dtype=np.float64)
    if Cxy.shape != (Cxx.shape[0], Cyy.shape[0]):
        raise errors.DimensionMismatchError(f'Cxy must have shape {(Cxx.shape[0], Cyy.shape[0])}, got {Cxy.shape}')
    _check_k(k, min(Cxy.shape))

    Lx, Ly = _cholesky(Cxx, 'Cxx'), _cholesky(Cyy, 'Cyy')
    whitened = scipy.linalg.solve_triangular(Ly, scipy.linalg.solve_triangular(Lx, Cxy, lower=True).T, lower=True).T

    U, sigma, Vt = np.linalg.svd(whitened)
    correlations = sigma[:k]
    if np.any(correlations > 1.0 + CONSISTENCY_TOLERANCE):
        raise errors.OracleError(f'canonical correlations exceed 1 ({correlations.max():.6g}): inconsistent covariances')
    correlations = np.clip(correlations, 0.0, 1.0)

    directions_x = scipy.linalg.solve_triangular(Lx.T, U[:, :k], lower=False)
    directions_y = scipy.linalg.solve_triangular(Ly.T, Vt[:k].T, lower=False)

    pivots = np.argmax(np.abs(directions_x), axis=0)
    signs = np.where(directions_x[pivots, np.arange(k)] < 0, -1.0, 1.0)

    pencil = np.block([[Cxx, Cxy], [Cxy.T, Cyy]])
    pencil_values = scipy.linalg.eigh(pencil, scipy.linalg.block_diag(Cxx, Cyy), eigvals_only=True)[::-1][:k]
    if np.max(np.abs(pencil_values - (1.0 + correlations))) > CONSISTENCY_TOLERANCE:
        raise errors.OracleError('canonical correlations disagree with the generalized eigenvalues of the pencil')

    return correlations, directions_x * signs, directions_y * signs


# ----- COVARIANCE OPERATOR BY QUADRATURE -----

@dataclasses.dataclass(frozen=True)
class GaussianDensity:
    mean: float = 0.0
    std: float = 1.0

    def __post_init__(self) -> None:
        if not self.std > 0:
            raise errors.ConfigurationError(f'density std must be positive, got {self.std}')

    def pdf(self, x: np.ndarray) -> np.ndarray:
        return stats.norm.pdf(x, loc=self.mean, scale=self.std)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.normal(self.mean, self.std, size=(n, 1))


@dataclasses.dataclass(frozen=True)
class QuadratureEigenSolution:
    """
    Implements eigenfunctions of A f = E[f(x) k(x, .)] discretized on a grid.

    `values[:, i]` are the eigenfunction values on `grid`, normalized so that
    sum_j weights[j] f(grid[j])^2 = 1 (unit L2 norm under the density).
    """

    spec: KernelSpec
    density: GaussianDensity
    grid: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    eigenvalues: np.ndarray

    @property
    def k(self) -> int:
        return self.values.shape[1]

    def evaluate(self, X: Any) -> np.ndarray:
        """ Extend the eigenfunctions to the rows of X with the eigen equation f(x) = E[k(x, y) f(y)] / lambda """
        kernel_values = kernel_features.gram_matrix(self.spec, X, self.grid.reshape(-1, 1))

        return kernel_values @ (self.weights[:, None] * self.values) / self.eigenvalues


def _quadrature_eigh(spec: KernelSpec, density: GaussianDensity, grid_size: int,
                     k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    half_width = settings.QUADRATURE_HALF_WIDTH * density.std
    grid = np.linspace(density.mean - half_width, density.mean + half_width, grid_size)

    trapezoid = np.full(grid_size, grid[1] - grid[0])
    trapezoid[[0, -1]] /= 2.0
    weights = trapezoid * density.pdf(grid)
    root = np.sqrt(weights)

    gram = kernel_features.gram_matrix(spec, grid.reshape(-1, 1))
    operator = root[:, None] * gram * root[None, :]
    values, vectors = scipy.linalg.eigh((operator + operator.T) / 2.0, subset_by_index=[grid_size - k, grid_size - 1])

    return grid, weights, values[::-1], _sign_fixed(vectors[:, ::-1]) / root[:, None]


def quadrature_operator_eig(spec: KernelSpec, density: GaussianDensity, grid_size: int, k: int,
                            check_refinement: bool = True) -> QuadratureEigenSolution:
    """
    Return the top-k eigenpairs of the population covariance operator of a 1-D density.

    Discretizes A f = lambda f with the trapezoid rule on mean +- 6 std and solves the symmetric
    problem W^1/2 K W^1/2 u = lambda u; eigenfunction values on the grid are W^-1/2 u.

    :param spec: kernel specification (dim 1)
    :type spec: KernelSpec
    :param density: data density
    :type density: GaussianDensity
    :param grid_size: number of grid points, at least 200
    :type grid_size: int
    :param k: number of eigenpairs
    :type k: int
    :param check_refinement: also solve on a doubled grid and compare the eigenvalues
    :type check_refinement: bool

    :return: grid eigenfunctions, eigenvalues descending
    :rtype: QuadratureEigenSolution

    :raises errors.OracleError: doubling the grid moves a top-k eigenvalue by more than 1%
    """

    if spec.dim != 1:
        raise errors.KernelSpecError(f'quadrature oracle needs a 1-D kernel, got dim {spec.dim}')
    if grid_size < settings.QUADRATURE_MIN_GRID:
        raise errors.ConfigurationError(f'grid_size must be >= {settings.QUADRATURE_MIN_GRID}, got {grid_size}')
    _check_k(k, grid_size)

    grid, weights, eigenvalues, values = _quadrature_eigh(spec, density, grid_size, k)

    if check_refinement:
        refined = _quadrature_eigh(spec, density, 2 * grid_size, k)[2]
        shift = np.max(np.abs(refined - eigenvalues) / np.abs(refined))
        if shift > settings.GRID_REFINEMENT_TOLERANCE:
            raise errors.OracleError(f'grid too coarse: doubling it moves the eigenvalues by {shift:.2%}; use a larger grid')

    return QuadratureEigenSolution(spec=spec, density=density, grid=grid, weights=weights,
                                   values=values, eigenvalues=eigenvalues)


# ----- ORTHOGONALIZED REFERENCE UPDATE -----

def reference_orthogonalized_step(F: Any, A_t: Union[CovarianceMatrix, Any], eta: float) -> np.ndarray:
    """
    Return F' = F~ (F~'F~)^-1/2 with F~ = F + eta A_t F (gradient step then symmetric orthogonalization).

    :param F: matrix [d x k]
    :type F: numpy.ndarray
    :param A_t: symmetric matrix [d x d]
    :type A_t: Union[CovarianceMatrix, numpy.ndarray]
    :param eta: step size
    :type eta: float

    :return: matrix [d x k] with orthonormal columns
    :rtype: numpy.ndarray

    :raises errors.RankDeficiencyError: F~ is numerically rank deficient
    """

    A_t = _symmetric(A_t, 'A_t')
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] != A_t.shape[0]:
        raise errors.DimensionMismatchError(f'F must have {A_t.shape[0]} rows, got shape {F.shape}')

    stepped = F + eta * (A_t @ F)
    values, vectors = np.linalg.eigh(stepped.T @ stepped)
    if values[0] <= settings.ZERO_EIGENVALUE_TOLERANCE * values[-1]:
        raise errors.RankDeficiencyError('stepped basis is rank deficient')

    return stepped @ (vectors / np.sqrt(values)) @ vectors.T
