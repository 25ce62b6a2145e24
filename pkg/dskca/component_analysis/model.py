"""
Contains the coefficient model: k functions in the random-feature span,
H(.) = sum_i phi_i(.) alpha_i', stored as ordered (feature block, alpha matrix) pairs.

.. class:: CoefficientModel
    Implements the k-column function list over regenerable feature blocks
.. class:: PairedModel
    Implements the left/right function pair used by the two-view solvers

.. function:: init_model(spec: KernelSpec, k: int, feature_batch: int, seed: int,
        store_frequencies: bool = False) -> CoefficientModel
    Return a model holding one seeded block with orthonormal coefficients
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import logging
from typing import (
    Any,
    Iterator,
    Optional
)

import numpy as np

from . import (
    kernel_features,
    random_streams,
    settings
)
from .kernel_features import (
    FeatureBlock,
    KernelSpec
)
from .. import errors
from .. import settings as package_settings


logger = logging.getLogger(__name__)


class CoefficientModel:
    """
    Implements the coefficient model.

    Block `i` is a :class:`FeatureBlock` regenerated on demand from (run_seed, i) unless
    `store_frequencies` is set, in which case the blocks are kept in memory.
    The model is single-writer: mutations happen in place and return the model itself.
    """

    def __init__(self, spec: KernelSpec, k: int, run_seed: int, block_size: int,
                 store_frequencies: bool = False) -> None:
        """
        Init an empty model (evaluates to zero).

        :param spec: kernel of the feature blocks
        :type spec: KernelSpec
        :param k: number of component functions
        :type k: int
        :param run_seed: seed the blocks are regenerated from
        :type run_seed: int
        :param block_size: features per block (B_w)
        :type block_size: int
        :param store_frequencies: keep blocks in memory instead of regenerating them
        :type store_frequencies: bool
        """

        if k < 1 or block_size < 1:
            raise errors.ModelError(f'need k >= 1 and block_size >= 1, got k={k}, block_size={block_size}')

        self.spec = spec
        self.k = int(k)
        self.run_seed = int(run_seed)
        self.block_size = int(block_size)
        self.store_frequencies = bool(store_frequencies)

        self._alphas: list[np.ndarray] = []
        self._blocks: dict[int, FeatureBlock] = {}

    def __repr__(self) -> str:
        return (f'{self.__class__.__name__}(family={self.spec.family.value}, k={self.k}, '
                f'blocks={self.n_blocks}, block_size={self.block_size})')

    @property
    def n_blocks(self) -> int:
        return len(self._alphas)

    @property
    def n_features(self) -> int:
        return self.n_blocks * self.block_size

    @property
    def alphas(self) -> tuple[np.ndarray, ...]:
        return tuple(self._alphas)

    def alpha(self, index: int) -> np.ndarray:
        return self._alphas[index]

    def block(self, index: int) -> FeatureBlock:
        """ Return the feature block `index` (cached or regenerated from the run seed) """
        if not 0 <= index < self.n_blocks:
            raise errors.ModelError(f'block index {index} out of range [0, {self.n_blocks})')

        cached = self._blocks.get(index)
        if cached is not None:
            return cached

        return kernel_features.make_feature_block(self.spec, self.run_seed, index, self.block_size)

    def iter_blocks(self) -> Iterator[tuple[FeatureBlock, np.ndarray]]:
        for index, alpha in enumerate(self._alphas):
            yield self.block(index), alpha

    @property
    def coefficients(self) -> np.ndarray:
        """ All alphas stacked in block order [n_features x k] """
        if not self._alphas:
            return np.zeros((0, self.k))

        return np.vstack(self._alphas)

    # - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - -
    # evaluation

    def features(self, X: Any) -> np.ndarray:
        """
        Return the features of every block on the rows of X, side by side in block order.

        evaluate(X) equals features(X) @ coefficients up to rounding.

        :param X: matrix [m x dim]
        :type X: numpy.ndarray

        :return: matrix [m x n_features]
        :rtype: numpy.ndarray
        """

        X = kernel_features.as_points(X, self.spec.dim, 'X')
        result = np.empty((X.shape[0], self.n_features))

        for index, (block, _) in enumerate(self.iter_blocks()):
            result[:, index * self.block_size:(index + 1) * self.block_size] = kernel_features.feature_matrix(block, X)

        return result

    def _contribution(self, index: int, X: np.ndarray) -> np.ndarray:
        return kernel_features.feature_matrix(self.block(index), X) @ self._alphas[index]

    def evaluate(self, X: Any, threads: Optional[int] = None) -> np.ndarray:
        """
        Evaluate the k functions on the rows of X.

        Block contributions may be computed in parallel, but they are always added in
        ascending block order, so the result does not depend on `threads`.

        :param X: matrix [m x dim]
        :type X: numpy.ndarray
        :param threads: worker threads (env `DSKCA_THREADS`, all cores if omitted)
        :type threads: Optional[int]

        :return: matrix [m x k]
        :rtype: numpy.ndarray

        :raises errors.NonFiniteError: accumulation became non-finite (names the first offending block)
        """

        X = kernel_features.as_points(X, self.spec.dim, 'X')
        result = np.zeros((X.shape[0], self.k))

        threads = package_settings.threads() if threads is None else max(1, int(threads))
        indices = range(self.n_blocks)

        if threads > 1 and self.n_blocks >= settings.PARALLEL_MIN_BLOCKS:
            with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
                contributions = list(pool.map(lambda index: self._contribution(index, X), indices))
        else:
            contributions = (self._contribution(index, X) for index in indices)

        for index, contribution in zip(indices, contributions):
            result += contribution
            if not np.all(np.isfinite(result)):
                raise errors.NonFiniteError(f'evaluation became non-finite at block {index}')

        return result

    # - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - -
    # mutation

    def _checked_alpha(self, alpha: Any, rows: int) -> np.ndarray:
        alpha = np.array(alpha, dtype=np.float64)
        if alpha.shape != (rows, self.k):
            raise errors.ModelError(f'alpha must have shape {(rows, self.k)}, got {alpha.shape}')
        if not np.all(np.isfinite(alpha)):
            raise errors.NonFiniteError('alpha contains non-finite values')

        return alpha

    def append_block(self, block: FeatureBlock, alpha: Any) -> CoefficientModel:
        """
        Append a block with its coefficients; prior blocks are untouched.

        :raises errors.ModelError: block index is not `n_blocks`, or shapes disagree
        """

        if block.block_index != self.n_blocks:
            raise errors.ModelError(f'block index must be {self.n_blocks} (contiguous), got {block.block_index}')
        if block.count != self.block_size or block.dim != self.spec.dim:
            raise errors.ModelError(f'block must hold {self.block_size} features of dim {self.spec.dim}, '
                                    f'got {block.count} of dim {block.dim}')

        self._alphas.append(self._checked_alpha(alpha, block.count))
        if self.store_frequencies:
            self._blocks[block.block_index] = block

        return self

    def add_to_block(self, index: int, alpha: Any) -> CoefficientModel:
        """ Add `alpha` into the coefficients of an existing block (revisit mode) """
        if not 0 <= index < self.n_blocks:
            raise errors.ModelError(f'block index {index} out of range [0, {self.n_blocks})')

        self._alphas[index] = self._alphas[index] + self._checked_alpha(alpha, self.block_size)

        return self

    def scale_all(self, M: Any) -> CoefficientModel:
        """
        Right-multiply every alpha by the k x k matrix M, so evaluate() becomes evaluate() @ M.

        :raises errors.ModelError: M is not k x k
        """

        M = np.asarray(M, dtype=np.float64)
        if M.shape != (self.k, self.k):
            raise errors.ModelError(f'M must be {self.k} x {self.k}, got {M.shape}')
        if not np.all(np.isfinite(M)):
            raise errors.NonFiniteError('M contains non-finite values')

        self._alphas = [alpha @ M for alpha in self._alphas]

        return self

    # - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - -

    def set_store_frequencies(self, store: bool) -> CoefficientModel:
        """ Switch between cached blocks and regeneration (evaluations are bit-identical either way) """
        if store and not self.store_frequencies:
            self._blocks = {index: self.block(index) for index in range(self.n_blocks)}
        elif not store:
            self._blocks = {}
        self.store_frequencies = bool(store)

        return self

    def copy(self) -> CoefficientModel:
        clone = CoefficientModel(self.spec, self.k, self.run_seed, self.block_size, self.store_frequencies)
        clone._alphas = [alpha.copy() for alpha in self._alphas]
        clone._blocks = dict(self._blocks)

        return clone


@dataclasses.dataclass
class PairedModel:
    """ Implements the left/right function pair (U/V for kernel SVD, G^X/G^Y for kernel CCA) """

    left: CoefficientModel
    right: CoefficientModel

    def __post_init__(self) -> None:
        if self.left.k != self.right.k:
            raise errors.ModelError(f'paired models need the same k, got {self.left.k} and {self.right.k}')

    @property
    def k(self) -> int:
        return self.left.k

    def copy(self) -> PairedModel:
        return PairedModel(self.left.copy(), self.right.copy())

    def swapped(self) -> PairedModel:
        return PairedModel(self.right, self.left)


def init_model(spec: KernelSpec, k: int, feature_batch: int, seed: int,
               store_frequencies: bool = False) -> CoefficientModel:
    """
    Return a model holding block 0 with seeded orthonormal coefficients.

    The coefficients are the Q factor (positive R diagonal) of an i.i.d. N(0, 1) matrix, divided
    by the block scale so that the initial functions have evaluations of order one.
    Columns are drawn one after another, so column j does not depend on k.

    :param spec: kernel of the feature blocks
    :type spec: KernelSpec
    :param k: number of component functions
    :type k: int
    :param feature_batch: features per block B_w (`dim` for the linear family)
    :type feature_batch: int
    :param seed: run seed
    :type seed: int
    :param store_frequencies: keep blocks in memory
    :type store_frequencies: bool

    :return: initialized model
    :rtype: CoefficientModel

    :raises errors.ModelError: fewer features than components
    """

    count = kernel_features.block_size(spec, feature_batch)
    if k < 1 or count < k:
        raise errors.ModelError(f'cannot build {k} independent columns from {count} features')

    gaussian = random_streams.stream(seed, settings.INIT_STREAM).standard_normal((k, count)).T
    q, r = np.linalg.qr(gaussian)
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)

    block = kernel_features.make_feature_block(spec, seed, 0, count)
    model = CoefficientModel(spec, k, seed, count, store_frequencies)
    model.append_block(block, (q * signs) / block.scale)

    logger.debug('initialized %r', model)

    return model
