"""
Contains kernels and their seeded random Fourier features.

Shift-invariant kernels are factorized through Bochner's theorem,
k(x, y) = E[phi_w(x) phi_w(y)] with phi_w(x) = sqrt(2) cos(w'x + b), w ~ p(w), b ~ U[0, 2 pi).
The linear kernel uses the identity feature map instead.

.. class:: KernelFamily(str, enum.Enum)
    Supported kernel families
.. class:: FeatureForm(str, enum.Enum)
    Phase form sqrt(2) cos(w'x + b) or stacked cos/sin pairs
.. class:: KernelSpec
    Kernel family, parameters and input dimension
.. class:: FeatureBlock
    One mini-batch of random features, regenerable from (seed, block index)

.. function:: kernel_eval(spec: KernelSpec, x: numpy.ndarray, y: numpy.ndarray) -> float
    Return the closed-form kernel value
.. function:: gram_matrix(spec: KernelSpec, X: numpy.ndarray, Y: Optional[numpy.ndarray] = None) -> numpy.ndarray
    Return the matrix of kernel values between rows of X and Y
.. function:: median_bandwidth(data: numpy.ndarray, subsample: int = MEDIAN_SUBSAMPLE, seed: int = 0) -> float
    Return the median pairwise distance of a seeded subsample
.. function:: sample_feature_block(spec: KernelSpec, seed: int, block_index: int, count: int) -> FeatureBlock
    Sample a block of random Fourier features
.. function:: make_feature_block(spec: KernelSpec, seed: int, block_index: int, count: int) -> FeatureBlock
    Sample a Fourier block or build the identity block of the linear family
.. function:: block_size(spec: KernelSpec, requested: int) -> int
    Return the number of features per block for the family
.. function:: feature_matrix(block: FeatureBlock, X: numpy.ndarray) -> numpy.ndarray
    Evaluate the block's features on the rows of X
"""

from __future__ import annotations

import dataclasses
import enum
import math
from typing import (
    Any,
    Optional
)

import numpy as np
from scipy import special
from scipy.spatial import distance

from . import (
    random_streams,
    settings
)
from .. import errors


SQRT2 = math.sqrt(2.0)


class KernelFamily(str, enum.Enum):
    """ Implements supported kernel families """

    GAUSSIAN = 'gaussian'
    LAPLACIAN = 'laplacian'
    CAUCHY = 'cauchy'
    LINEAR = 'linear'

    @property
    def is_fourier(self) -> bool:
        return self is not KernelFamily.LINEAR


class FeatureForm(str, enum.Enum):
    """ Implements random feature forms (phase form is the default single code path) """

    PHASE = 'phase'
    SINCOS = 'sincos'


@dataclasses.dataclass(frozen=True)
class KernelSpec:
    """
    Implements kernel specification.

    `bandwidth` is sigma for the gaussian family and the length scale for laplacian/cauchy;
    it is ignored by the linear family.
    """

    family: KernelFamily
    bandwidth: float = 1.0
    dim: int = 1
    feature_form: FeatureForm = FeatureForm.PHASE

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, 'family', KernelFamily(self.family))
            object.__setattr__(self, 'feature_form', FeatureForm(self.feature_form))
        except ValueError as error:
            raise errors.KernelSpecError(str(error)) from error

        object.__setattr__(self, 'bandwidth', float(self.bandwidth))
        object.__setattr__(self, 'dim', int(self.dim))

        if self.dim < 1:
            raise errors.KernelSpecError(f'kernel dim must be >= 1, got {self.dim}')
        if self.family.is_fourier and not (math.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise errors.KernelSpecError(f'{self.family.value} kernel needs a positive bandwidth, got {self.bandwidth}')

    @property
    def kappa_bound(self) -> float:
        """ Return sup_x k(x, x) """
        return 1.0 if self.family.is_fourier else math.inf

    def to_dict(self) -> dict[str, Any]:
        return {
            'family': self.family.value,
            'bandwidth': self.bandwidth,
            'dim': self.dim,
            'feature_form': self.feature_form.value
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> KernelSpec:
        return cls(
            family=data['family'],
            bandwidth=data['bandwidth'],
            dim=data['dim'],
            feature_form=data.get('feature_form', FeatureForm.PHASE.value)
        )


@dataclasses.dataclass(frozen=True, eq=False)
class FeatureBlock:
    """
    Implements one mini-batch of random features.

    Rows of `frequencies` are the w vectors, `phases` the b offsets. For the sincos form each
    frequency yields a cos and a sin column (`count` = 2 * number of frequencies).
    `scale` folds the 1/sqrt(B) normalization so that row inner products of
    :func:`feature_matrix` approximate the kernel.
    """

    block_index: int
    seed: int
    count: int
    frequencies: np.ndarray
    phases: np.ndarray
    family: KernelFamily
    scale: float
    feature_form: FeatureForm = FeatureForm.PHASE

    @property
    def dim(self) -> int:
        return self.frequencies.shape[1]

    def same_as(self, other: FeatureBlock) -> bool:
        """ Return True if both blocks hold bit-identical features """
        return (
            self.block_index == other.block_index
            and self.count == other.count
            and self.family is other.family
            and self.feature_form is other.feature_form
            and self.scale == other.scale
            and np.array_equal(self.frequencies, other.frequencies)
            and np.array_equal(self.phases, other.phases)
        )


def as_points(X: Any, dim: int, name: str = 'X') -> np.ndarray:
    """
    Return `X` as a finite float64 matrix with `dim` columns.

    :raises errors.DimensionMismatchError: wrong number of columns
    :raises errors.NonFiniteError: NaN/Inf entries
    """

    points = np.asarray(X, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(1, -1) if dim > 1 or points.size == 1 else points.reshape(-1, 1)
    if points.ndim != 2 or points.shape[1] != dim:
        raise errors.DimensionMismatchError(f'{name} must have {dim} columns, got shape {np.shape(X)}')
    if not np.all(np.isfinite(points)):
        raise errors.NonFiniteError(f'{name} contains non-finite values')

    return points


def kernel_eval(spec: KernelSpec, x: Any, y: Any) -> float:
    """
    Return the closed-form kernel value k(x, y).

    :param spec: kernel specification
    :type spec: KernelSpec
    :param x: first point (length `spec.dim`)
    :type x: numpy.ndarray
    :param y: second point (length `spec.dim`)
    :type y: numpy.ndarray

    :return: kernel value
    :rtype: float

    :raises errors.DimensionMismatchError: a point is not of length `spec.dim`
    :raises errors.NonFiniteError: a point has non-finite entries
    """

    for name, point in (('x', x), ('y', y)):
        if np.ndim(point) != 1 or np.size(point) != spec.dim:
            raise errors.DimensionMismatchError(f'{name} must be a vector of length {spec.dim}, got shape {np.shape(point)}')

    return float(gram_matrix(spec, np.reshape(x, (1, -1)), np.reshape(y, (1, -1)))[0, 0])


def gram_matrix(spec: KernelSpec, X: Any, Y: Optional[Any] = None) -> np.ndarray:
    """
    Return the matrix of kernel values K[i, j] = k(X[i], Y[j]).

    :param spec: kernel specification
    :type spec: KernelSpec
    :param X: matrix [n x dim]
    :type X: numpy.ndarray
    :param Y: matrix [m x dim]; `X` itself if omitted
    :type Y: Optional[numpy.ndarray]

    :return: matrix [n x m]
    :rtype: numpy.ndarray
    """

    X = as_points(X, spec.dim, 'X')
    Y = X if Y is None else as_points(Y, spec.dim, 'Y')

    if spec.family is KernelFamily.GAUSSIAN:
        return np.exp(-distance.cdist(X, Y, 'sqeuclidean') / (2.0 * spec.bandwidth ** 2))
    if spec.family is KernelFamily.LAPLACIAN:
        return np.exp(-distance.cdist(X, Y, 'cityblock') / spec.bandwidth)
    if spec.family is KernelFamily.CAUCHY:
        gram = np.ones((X.shape[0], Y.shape[0]))
        for column in range(spec.dim):
            difference = (X[:, column, None] - Y[None, :, column]) / spec.bandwidth
            gram /= 1.0 + difference ** 2
        return gram

    return X @ Y.T


def median_bandwidth(data: Any, subsample: int = settings.MEDIAN_SUBSAMPLE, seed: int = 0) -> float:
    """
    Return the median pairwise Euclidean distance over a seeded subsample (the median trick).

    :param data: matrix [n x dim], n >= 2
    :type data: numpy.ndarray
    :param subsample: number of rows used, at least 2
    :type subsample: int
    :param seed: seed of the row subsample
    :type seed: int

    :return: positive bandwidth
    :rtype: float

    :raises errors.KernelSpecError: all sampled points coincide
    """

    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 1:
        data = data.reshape(-1, 1)
    data = as_points(data, data.shape[1], 'data')

    n_rows = data.shape[0]
    if n_rows < 2 or subsample < 2:
        raise errors.ConfigurationError(f'median trick needs n >= 2 and subsample >= 2, got n={n_rows}, subsample={subsample}')

    if n_rows > subsample:
        rows = np.sort(np.random.default_rng(seed).choice(n_rows, size=subsample, replace=False))
        data = data[rows]

    median = float(np.median(distance.pdist(data, 'euclidean')))
    if median <= 0.0:
        raise errors.KernelSpecError('median pairwise distance is zero: all sampled points are identical')

    return median


def _inverse_cdf(family: KernelFamily, uniform: np.ndarray, bandwidth: float) -> np.ndarray:
    """ Map uniform draws to the spectral density of the family """
    if family is KernelFamily.GAUSSIAN:
        return special.ndtri(uniform) / bandwidth

    centered = uniform - 0.5
    if family is KernelFamily.LAPLACIAN:
        # standard Cauchy
        return np.tan(np.pi * centered) / bandwidth

    # Laplace(0, 1)
    return -np.sign(centered) * np.log1p(-2.0 * np.abs(centered)) / bandwidth


def sample_feature_block(spec: KernelSpec, seed: int, block_index: int, count: int) -> FeatureBlock:
    """
    Sample a block of random Fourier features.

    The Philox stream is keyed by (seed, block_index) only, so the block does not depend on
    which blocks were sampled before it. Frequencies are drawn by inverse CDF:
    gaussian -> N(0, sigma^-2 I), laplacian -> Cauchy(0, 1/scale), cauchy -> Laplace(0, 1/scale);
    phases are uniform on [0, 2 pi).

    :param spec: kernel specification (Fourier family)
    :type spec: KernelSpec
    :param seed: global run seed
    :type seed: int
    :param block_index: index of the block in the model
    :type block_index: int
    :param count: number of features B_w (even for the sincos form)
    :type count: int

    :return: feature block
    :rtype: FeatureBlock

    :raises errors.KernelSpecError: linear family (identity features, see :func:`make_feature_block`)
    """

    if not spec.family.is_fourier:
        raise errors.KernelSpecError('linear kernel has no random features; use make_feature_block for identity features')
    if count < 1 or block_index < 0:
        raise errors.ConfigurationError(f'need count >= 1 and block_index >= 0, got {count}, {block_index}')

    n_frequencies = count
    if spec.feature_form is FeatureForm.SINCOS:
        if count % 2:
            raise errors.ConfigurationError(f'sincos features need an even count, got {count}')
        n_frequencies = count // 2

    generator = random_streams.stream(seed, settings.FEATURE_STREAM, block_index)
    uniform = np.clip(generator.random((n_frequencies, spec.dim)), settings.UNIFORM_EPSILON, 1.0 - settings.UNIFORM_EPSILON)
    frequencies = _inverse_cdf(spec.family, uniform, spec.bandwidth)

    if spec.feature_form is FeatureForm.SINCOS:
        phases = np.zeros(n_frequencies)
    else:
        phases = 2.0 * np.pi * generator.random(n_frequencies)

    return FeatureBlock(
        block_index=block_index,
        seed=seed,
        count=count,
        frequencies=frequencies,
        phases=phases,
        family=spec.family,
        scale=1.0 / math.sqrt(n_frequencies),
        feature_form=spec.feature_form
    )


def block_size(spec: KernelSpec, requested: int) -> int:
    """ Return the number of features per block (the linear family always uses `dim` identity features) """
    return spec.dim if spec.family is KernelFamily.LINEAR else int(requested)


def make_feature_block(spec: KernelSpec, seed: int, block_index: int, count: int) -> FeatureBlock:
    """ Sample a Fourier block or build the identity block of the linear family """
    if spec.family.is_fourier:
        return sample_feature_block(spec, seed, block_index, count)

    return FeatureBlock(
        block_index=block_index,
        seed=seed,
        count=spec.dim,
        frequencies=np.eye(spec.dim),
        phases=np.zeros(spec.dim),
        family=spec.family,
        scale=1.0
    )


def feature_matrix(block: FeatureBlock, X: Any) -> np.ndarray:
    """
    Evaluate the block's features on the rows of X.

    Entry (r, c) is scale * sqrt(2) * cos(w_c'x_r + b_c) for the phase form,
    scale * [cos(w'x_r), sin(w'x_r)] for the sincos form, and X itself for the linear family.

    :param block: feature block
    :type block: FeatureBlock
    :param X: matrix [m x dim]
    :type X: numpy.ndarray

    :return: matrix [m x count]
    :rtype: numpy.ndarray
    """

    X = as_points(X, block.dim, 'X')

    if block.family is KernelFamily.LINEAR:
        return X.copy()

    projections = X @ block.frequencies.T
    if block.feature_form is FeatureForm.SINCOS:
        return block.scale * np.hstack((np.cos(projections), np.sin(projections)))

    return (block.scale * SQRT2) * np.cos(projections + block.phases)
