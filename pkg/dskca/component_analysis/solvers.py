"""
Contains the doubly stochastic solvers and the training loop.

Every step draws a data mini-batch and one block of random features, evaluates the current
functions on the batch and updates the coefficient model in place:
    kernel PCA (Oja form)  H <- H (I - eta C) + eta phi(.) h'
    GHA                    C replaced by its upper triangle
    kernel SVD / CCA       two coupled models driven by W = (U'V + V'U) / B

____________________________________________________________________________________________________________
Important notation: the iterate is never renormalized or clamped; a non-finite evaluation raises
errors.DivergenceError with the iteration index.
____________________________________________________________________________________________________________

.. class:: StepSchedule
    Step size schedule eta_i = theta0 / (1 + theta1 * i)
.. class:: Task(str, enum.Enum)
.. class:: Revisit(str, enum.Enum)
.. class:: Sampling(str, enum.Enum)
.. class:: TrainConfig
    Training configuration
.. class:: StepState
    Iteration counter and current iterate of a running fit
.. class:: DataSource
    Base class of mini-batch sources
.. class:: ArraySource(DataSource)
    Mini-batches of a finite dataset
.. class:: DistributionSource(DataSource)
    Mini-batches drawn from a seeded sampler
.. class:: FitResult

.. function:: step_size(schedule: StepSchedule, i: int) -> float
.. function:: kpca_step(model: CoefficientModel, X_batch: numpy.ndarray, block: FeatureBlock, eta: float,
        iteration: Optional[int] = None) -> CoefficientModel
.. function:: gha_step(model: CoefficientModel, X_batch: numpy.ndarray, block: FeatureBlock, eta: float,
        iteration: Optional[int] = None) -> CoefficientModel
.. function:: ksvd_step(pair: PairedModel, X_batch: numpy.ndarray, Y_batch: numpy.ndarray,
        block_x: FeatureBlock, block_y: FeatureBlock, eta: float, iteration: Optional[int] = None) -> PairedModel
.. function:: kcca_step(pair: PairedModel, X_batch: numpy.ndarray, Y_batch: numpy.ndarray,
        block_x: FeatureBlock, block_y: FeatureBlock, eta: float, ridge: float = 0.0,
        iteration: Optional[int] = None) -> PairedModel
.. function:: fit(task: Task, data_source: DataSource, config: TrainConfig, kernel: KernelSpec,
        kernel_y: Optional[KernelSpec] = None, monitor: Optional[Callable] = None, timing: bool = True) -> FitResult
    Run the training loop
"""

from __future__ import annotations

import abc
import dataclasses
import enum
import logging
import math
import time
from typing import (
    Any,
    Callable,
    Iterator,
    Optional,
    Union
)

import numpy as np

from . import (
    diagnostics,
    kernel_features,
    random_streams,
    settings
)
from .kernel_features import (
    FeatureBlock,
    KernelSpec
)
from .model import (
    CoefficientModel,
    PairedModel,
    init_model
)
from .. import errors


logger = logging.getLogger(__name__)

Batch = tuple[np.ndarray, Optional[np.ndarray]]
Iterate = Union[CoefficientModel, PairedModel]


# ----- SCHEDULE / CONFIGURATION -----

@dataclasses.dataclass(frozen=True)
class StepSchedule:
    """ Implements the step size schedule eta_i = theta0 / (1 + theta1 * i) """

    theta0: float
    theta1: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.theta0) and self.theta0 > 0):
            raise errors.ConfigurationError(f'theta0 must be positive, got {self.theta0}')
        if not (math.isfinite(self.theta1) and self.theta1 >= 0):
            raise errors.ConfigurationError(f'theta1 must be non-negative, got {self.theta1}')


def step_size(schedule: StepSchedule, i: int) -> float:
    """
    Return the step size of iteration `i`.

    :param schedule: step size schedule
    :type schedule: StepSchedule
    :param i: iteration (1-based)
    :type i: int

    :return: theta0 / (1 + theta1 * i)
    :rtype: float

    :raises errors.ConfigurationError: i < 1
    """

    if i < 1:
        raise errors.ConfigurationError(f'iterations are counted from 1, got {i}')

    return schedule.theta0 / (1.0 + schedule.theta1 * i)


class Task(str, enum.Enum):
    KPCA = 'kpca'
    GHA = 'gha'
    KSVD = 'ksvd'
    KCCA = 'kcca'

    @property
    def is_paired(self) -> bool:
        return self in (Task.KSVD, Task.KCCA)


class Revisit(str, enum.Enum):
    """ What happens once the feature budget is exhausted """

    CYCLE = 'cycle'
    NONE = 'none'


class Sampling(str, enum.Enum):
    WITH_REPLACEMENT = 'with_replacement'
    EPOCH_SHUFFLE = 'epoch_shuffle'


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    """
    Implements training configuration.

    The feature budget `total_features` counts training features only; the initial block 0
    of :func:`init_model` is outside it.
    """

    k: int
    iterations: int
    data_batch: int
    feature_batch: int
    total_features: int
    schedule: StepSchedule
    seed: int = 0
    revisit: Revisit = Revisit.CYCLE
    sampling: Sampling = Sampling.EPOCH_SHUFFLE
    ridge: float = 0.0
    trace_stride: int = settings.DEFAULT_TRACE_STRIDE
    store_frequencies: bool = False

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, 'revisit', Revisit(self.revisit))
            object.__setattr__(self, 'sampling', Sampling(self.sampling))
        except ValueError as error:
            raise errors.ConfigurationError(str(error)) from error

        if self.k < 1:
            raise errors.ConfigurationError(f'k must be >= 1, got {self.k}')
        if self.iterations < 0:
            raise errors.ConfigurationError(f'iterations must be >= 0, got {self.iterations}')
        if self.data_batch < 1 or self.feature_batch < 1:
            raise errors.ConfigurationError(f'batch sizes must be >= 1, got B_x={self.data_batch}, B_w={self.feature_batch}')
        if self.total_features < self.feature_batch:
            raise errors.ConfigurationError(f'total_features ({self.total_features}) must be >= feature_batch ({self.feature_batch})')
        if self.revisit is Revisit.NONE and self.iterations * self.feature_batch > self.total_features:
            raise errors.ConfigurationError(f'revisit=none needs iterations * feature_batch <= total_features, '
                                            f'got {self.iterations} * {self.feature_batch} > {self.total_features}')
        if self.ridge < 0 or not math.isfinite(self.ridge):
            raise errors.ConfigurationError(f'ridge must be >= 0, got {self.ridge}')
        if self.trace_stride < 1:
            raise errors.ConfigurationError(f'trace_stride must be >= 1, got {self.trace_stride}')
        if self.seed < 0:
            raise errors.ConfigurationError(f'seed must be non-negative, got {self.seed}')

    @property
    def training_blocks(self) -> int:
        """ Number of fresh blocks drawn during training, ceil(min(T * B_w, total_features) / B_w) """
        budget = min(self.iterations * self.feature_batch, self.total_features)
        return -(-budget // self.feature_batch)

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> TrainConfig:
        """
        Build a configuration from a flat mapping (e.g. a YAML file).

        `theta0`/`theta1` keys build the schedule; unknown keys are rejected.

        :raises errors.ConfigurationError: unknown or missing keys
        """

        data = dict(data)
        fields = {field.name for field in dataclasses.fields(cls)}
        if 'schedule' not in data:
            try:
                data['schedule'] = StepSchedule(float(data.pop('theta0')), float(data.pop('theta1', 0.0)))
            except KeyError as error:
                raise errors.ConfigurationError('configuration needs theta0') from error

        unknown = set(data) - fields
        if unknown:
            raise errors.ConfigurationError(f'unknown configuration keys: {", ".join(sorted(unknown))}')

        try:
            return cls(**data)
        except TypeError as error:
            raise errors.ConfigurationError(str(error)) from error


@dataclasses.dataclass
class StepState:
    """ Implements the state of a running fit (`t` grows by exactly 1 per step) """

    model: Iterate
    t: int = 0
    trace: diagnostics.DiagnosticsTrace = dataclasses.field(default_factory=diagnostics.DiagnosticsTrace)

    def advance(self) -> int:
        self.t += 1
        return self.t


# ----- DATA SOURCES -----

class DataSource(abc.ABC):
    """ Implements base class of the mini-batch sources (single view or paired views) """

    dim_x: int
    dim_y: Optional[int] = None

    @property
    def paired(self) -> bool:
        return self.dim_y is not None

    @abc.abstractmethod
    def iter_batches(self, rng: np.random.Generator, batch_size: int, sampling: Sampling) -> Iterator[Batch]:
        """ Yield (X_batch, Y_batch or None) forever """


class ArraySource(DataSource):
    """
    Implements mini-batches of a finite dataset.

    `epoch_shuffle` walks through a fresh permutation per epoch (a batch may straddle two epochs);
    `with_replacement` draws i.i.d. row indices.
    """

    def __init__(self, X: Any, Y: Optional[Any] = None) -> None:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.shape[0] == 0:
            raise errors.ConfigurationError('data source is empty')

        self.X = kernel_features.as_points(X, X.shape[1], 'X')
        self.dim_x = self.X.shape[1]
        self.Y = None

        if Y is not None:
            Y = np.asarray(Y, dtype=np.float64)
            if Y.ndim == 1:
                Y = Y.reshape(-1, 1)
            if Y.shape[0] != self.X.shape[0]:
                raise errors.DimensionMismatchError(f'paired views need the same rows, got {self.X.shape[0]} and {Y.shape[0]}')
            self.Y = kernel_features.as_points(Y, Y.shape[1], 'Y')
            self.dim_y = self.Y.shape[1]

    def __len__(self) -> int:
        return self.X.shape[0]

    def _epoch_indices(self, rng: np.random.Generator, batch_size: int) -> Iterator[np.ndarray]:
        n_rows = len(self)
        order = rng.permutation(n_rows)
        position = 0

        while True:
            parts = []
            needed = batch_size
            while needed:
                if position == n_rows:
                    order = rng.permutation(n_rows)
                    position = 0
                take = min(needed, n_rows - position)
                parts.append(order[position:position + take])
                position += take
                needed -= take
            yield np.concatenate(parts)

    def _drawn_indices(self, rng: np.random.Generator, batch_size: int) -> Iterator[np.ndarray]:
        while True:
            yield rng.integers(0, len(self), size=batch_size)

    def iter_batches(self, rng: np.random.Generator, batch_size: int, sampling: Sampling) -> Iterator[Batch]:
        if Sampling(sampling) is Sampling.EPOCH_SHUFFLE:
            indices = self._epoch_indices(rng, batch_size)
        else:
            indices = self._drawn_indices(rng, batch_size)

        for rows in indices:
            yield self.X[rows], None if self.Y is None else self.Y[rows]


class DistributionSource(DataSource):
    """
    Implements mini-batches drawn from a seeded sampler.

    `sampler(rng, n)` returns X [n x dim_x] or a pair (X, Y); sampling policy is irrelevant here.
    """

    def __init__(self, sampler: Callable[[np.random.Generator, int], Any], dim_x: int, dim_y: Optional[int] = None) -> None:
        self.sampler = sampler
        self.dim_x = int(dim_x)
        self.dim_y = None if dim_y is None else int(dim_y)

    def iter_batches(self, rng: np.random.Generator, batch_size: int, sampling: Sampling) -> Iterator[Batch]:
        while True:
            drawn = self.sampler(rng, batch_size)
            if self.paired:
                X, Y = drawn
                yield (kernel_features.as_points(X, self.dim_x, 'X'),
                       kernel_features.as_points(Y, self.dim_y, 'Y'))
            else:
                yield kernel_features.as_points(drawn, self.dim_x, 'X'), None


# ----- STEPS -----

def _evaluate_iterate(model: CoefficientModel, batch: np.ndarray, iteration: Optional[int]) -> np.ndarray:
    try:
        return model.evaluate(batch)
    except errors.NonFiniteError as error:
        raise errors.DivergenceError(f'iterate diverged at iteration {iteration}: {error}',
                                     iteration=iteration, max_abs_h=math.inf) from error


def _check_products(products: np.ndarray, iteration: Optional[int], *evaluations: np.ndarray) -> None:
    if not np.all(np.isfinite(products)):
        max_abs_h = max(float(np.max(np.abs(values), initial=0.0)) for values in evaluations)
        raise errors.DivergenceError(f'iterate diverged at iteration {iteration}: max |h| = {max_abs_h:.3g}',
                                     iteration=iteration, max_abs_h=max_abs_h)


def _apply_block(model: CoefficientModel, block: FeatureBlock, alpha: np.ndarray) -> None:
    """ Append a fresh block or add into a revisited one """
    if block.block_index < model.n_blocks:
        model.add_to_block(block.block_index, alpha)
    else:
        model.append_block(block, alpha)


def _oja_step(model: CoefficientModel, X_batch: Any, block: FeatureBlock, eta: float,
              iteration: Optional[int], upper_triangular: bool) -> CoefficientModel:
    X_batch = kernel_features.as_points(X_batch, model.spec.dim, 'X_batch')
    batch_size = X_batch.shape[0]

    H = _evaluate_iterate(model, X_batch, iteration)
    C = H.T @ H / batch_size
    _check_products(C, iteration, H)
    if upper_triangular:
        C = np.triu(C)

    alpha = eta * (kernel_features.feature_matrix(block, X_batch).T @ H) / batch_size

    model.scale_all(np.eye(model.k) - eta * C)
    _apply_block(model, block, alpha)

    return model


def kpca_step(model: CoefficientModel, X_batch: Any, block: FeatureBlock, eta: float,
              iteration: Optional[int] = None) -> CoefficientModel:
    """
    Apply one doubly stochastic kernel PCA (Oja) step in place.

    With H the evaluations of the model on the batch, C = H'H / B and Phi the features of `block`
    on the batch, the old coefficients are right-multiplied by (I - eta C) and eta Phi'H / B is
    appended as the coefficients of `block` (added into them if the block is already in the model).

    :param model: current iterate
    :type model: CoefficientModel
    :param X_batch: data mini-batch [B x dim]
    :type X_batch: numpy.ndarray
    :param block: fresh block (index `model.n_blocks`) or an existing block (revisit)
    :type block: FeatureBlock
    :param eta: step size
    :type eta: float
    :param iteration: iteration index reported on divergence
    :type iteration: Optional[int]

    :return: the updated model
    :rtype: CoefficientModel

    :raises errors.DivergenceError: evaluations of the iterate are not finite
    """

    return _oja_step(model, X_batch, block, eta, iteration, upper_triangular=False)


def gha_step(model: CoefficientModel, X_batch: Any, block: FeatureBlock, eta: float,
             iteration: Optional[int] = None) -> CoefficientModel:
    """
    Apply one generalized Hebbian step in place: :func:`kpca_step` with C replaced by its upper triangle.

    Column j only sees columns 1..j, so the leading columns converge to individual eigenfunctions.
    """

    return _oja_step(model, X_batch, block, eta, iteration, upper_triangular=True)


def _paired_evaluations(pair: PairedModel, X_batch: Any, Y_batch: Any,
                        iteration: Optional[int]) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    X_batch = kernel_features.as_points(X_batch, pair.left.spec.dim, 'X_batch')
    Y_batch = kernel_features.as_points(Y_batch, pair.right.spec.dim, 'Y_batch')
    if X_batch.shape[0] != Y_batch.shape[0]:
        raise errors.DimensionMismatchError(f'paired batches need the same size, got {X_batch.shape[0]} and {Y_batch.shape[0]}')

    U = _evaluate_iterate(pair.left, X_batch, iteration)
    V = _evaluate_iterate(pair.right, Y_batch, iteration)
    W = (U.T @ V + V.T @ U) / X_batch.shape[0]
    _check_products(W, iteration, U, V)

    return X_batch, Y_batch, U, V, W


def ksvd_step(pair: PairedModel, X_batch: Any, Y_batch: Any, block_x: FeatureBlock, block_y: FeatureBlock,
              eta: float, iteration: Optional[int] = None) -> PairedModel:
    """
    Apply one doubly stochastic kernel SVD step in place.

    With U, V the evaluations of the left/right functions and W = (U'V + V'U) / B,
    the left model gets eta Phi_x'V / B and (I - eta W); the right one eta Phi_y'U / B and (I - eta W).

    :param pair: current left/right iterate
    :type pair: PairedModel
    :param X_batch: left view mini-batch [B x dim_x]
    :type X_batch: numpy.ndarray
    :param Y_batch: right view mini-batch [B x dim_y], rows paired with `X_batch`
    :type Y_batch: numpy.ndarray
    :param block_x: left feature block
    :type block_x: FeatureBlock
    :param block_y: right feature block
    :type block_y: FeatureBlock
    :param eta: step size
    :type eta: float
    :param iteration: iteration index reported on divergence
    :type iteration: Optional[int]

    :return: the updated pair
    :rtype: PairedModel

    :raises errors.DivergenceError: evaluations of the iterate are not finite
    """

    X_batch, Y_batch, U, V, W = _paired_evaluations(pair, X_batch, Y_batch, iteration)
    batch_size = X_batch.shape[0]

    alpha_x = eta * (kernel_features.feature_matrix(block_x, X_batch).T @ V) / batch_size
    alpha_y = eta * (kernel_features.feature_matrix(block_y, Y_batch).T @ U) / batch_size

    shrink = np.eye(pair.k) - eta * W
    for model, block, alpha in ((pair.left, block_x, alpha_x), (pair.right, block_y, alpha_y)):
        model.scale_all(shrink)
        _apply_block(model, block, alpha)

    return pair


def kcca_step(pair: PairedModel, X_batch: Any, Y_batch: Any, block_x: FeatureBlock, block_y: FeatureBlock,
              eta: float, ridge: float = 0.0, iteration: Optional[int] = None) -> PairedModel:
    """
    Apply one doubly stochastic kernel CCA step in place.

    The left model gets eta Phi_x'(V - U W) / B and the right one eta Phi_y'(U - V W) / B;
    older coefficients are left untouched unless `ridge` > 0, which right-multiplies both views
    by (I - eta ridge W).

    :param ridge: ridge added to the within-view covariance estimates
    :type ridge: float

    :raises errors.DivergenceError: evaluations of the iterate are not finite
    """

    X_batch, Y_batch, U, V, W = _paired_evaluations(pair, X_batch, Y_batch, iteration)
    batch_size = X_batch.shape[0]

    alpha_x = eta * (kernel_features.feature_matrix(block_x, X_batch).T @ (V - U @ W)) / batch_size
    alpha_y = eta * (kernel_features.feature_matrix(block_y, Y_batch).T @ (U - V @ W)) / batch_size

    for model, block, alpha in ((pair.left, block_x, alpha_x), (pair.right, block_y, alpha_y)):
        if ridge > 0:
            model.scale_all(np.eye(pair.k) - (eta * ridge) * W)
        _apply_block(model, block, alpha)

    return pair


# ----- TRAINING LOOP -----

@dataclasses.dataclass
class FitResult:
    """ Implements fit output: the trained model (or pair) and its diagnostics trace """

    task: Task
    model: Iterate
    trace: diagnostics.DiagnosticsTrace
    config: TrainConfig

    @property
    def pair(self) -> PairedModel:
        if not isinstance(self.model, PairedModel):
            raise errors.ModelError(f'{self.task.value} fits a single model')
        return self.model


def _block_for(model: CoefficientModel, index: int) -> FeatureBlock:
    if index < model.n_blocks:
        return model.block(index)

    return kernel_features.make_feature_block(model.spec, model.run_seed, index, model.block_size)


def _h_norm_max(iterate: Iterate, X: np.ndarray, Y: Optional[np.ndarray]) -> float:
    """ Largest column L2 norm of the evaluations on X (and Y for paired iterates) """
    if isinstance(iterate, PairedModel):
        views = ((iterate.left, X), (iterate.right, Y))
    else:
        views = ((iterate, X),)

    return max(float(np.sqrt(np.max(np.mean(model.evaluate(points) ** 2, axis=0)))) for model, points in views)


def _initial_iterate(task: Task, config: TrainConfig, kernel: KernelSpec, kernel_y: Optional[KernelSpec]) -> Iterate:
    """
    Return the starting model (or pair).

    A paired start rescales both views so that the stacked coefficient columns [alpha_x; alpha_y]
    are orthonormal (norm at most one on every negative singular pair of the two-view operator).
    """

    left = init_model(kernel, config.k, config.feature_batch, config.seed, config.store_frequencies)
    if not task.is_paired:
        return left

    right_seed = random_streams.derive_seed(config.seed, settings.VIEW_STREAM)
    right = init_model(kernel_y, config.k, config.feature_batch, right_seed, config.store_frequencies)

    for model in (left, right):
        model.scale_all(np.eye(config.k) * (model.block(0).scale / math.sqrt(2.0)))

    return PairedModel(left, right)


def _check_monitor(monitor: Any, task: Task, kernel: KernelSpec, kernel_y: Optional[KernelSpec]) -> None:
    probe = getattr(monitor, 'probe', None)
    probe_y = getattr(monitor, 'probe_y', None)

    if probe is not None and np.shape(probe)[-1] != kernel.dim:
        raise errors.DimensionMismatchError(f'probe points must have {kernel.dim} columns, got shape {np.shape(probe)}')
    if probe_y is not None:
        if not task.is_paired:
            raise errors.ConfigurationError(f'{task.value} has no right view to probe')
        if np.shape(probe_y)[-1] != kernel_y.dim:
            raise errors.DimensionMismatchError(f'right probe points must have {kernel_y.dim} columns, '
                                                f'got shape {np.shape(probe_y)}')


def fit(task: Union[Task, str], data_source: DataSource, config: TrainConfig, kernel: KernelSpec,
        kernel_y: Optional[KernelSpec] = None, monitor: Optional[Callable[[Iterate], float]] = None,
        timing: bool = True) -> FitResult:
    """
    Run the doubly stochastic training loop.

    Iteration t (1-based) uses a fresh feature block t while the feature budget lasts; afterwards
    (revisit=cycle) step r re-selects block r mod n_blocks in ascending order. Data batches come from
    the DATA stream of `config.seed`; the right view of paired tasks uses a seed derived from it.
    The trace gets a point every `config.trace_stride` iterations and at the last one.

    :param task: kpca, gha, ksvd or kcca
    :type task: Union[Task, str]
    :param data_source: mini-batch source (paired for ksvd/kcca)
    :type data_source: DataSource
    :param config: training configuration
    :type config: TrainConfig
    :param kernel: kernel of the (left) view
    :type kernel: KernelSpec
    :param kernel_y: kernel of the right view (`kernel` with the right dimension if omitted)
    :type kernel_y: Optional[KernelSpec]
    :param monitor: potential of the iterate (e.g. diagnostics.SubspaceMonitor); NaN potentials if omitted.
        Its `probe` / `probe_y` points, when present, replace the batch in the h_norm_max column
    :type monitor: Optional[Callable]
    :param timing: record wall clock seconds (zeros otherwise)
    :type timing: bool

    :return: trained model or pair with its trace
    :rtype: FitResult

    :raises errors.ConfigurationError: data source does not match the task
    :raises errors.DimensionMismatchError: data or probe dimensions do not match the kernels
    :raises errors.DivergenceError: a step diverged (carries the iteration)
    """

    try:
        task = Task(task)
    except ValueError as error:
        raise errors.ConfigurationError(str(error)) from error

    if task.is_paired != data_source.paired:
        raise errors.ConfigurationError(f'{task.value} needs a {"paired" if task.is_paired else "single view"} data source')
    if data_source.dim_x != kernel.dim:
        raise errors.DimensionMismatchError(f'data dim {data_source.dim_x} does not match kernel dim {kernel.dim}')
    if task.is_paired:
        kernel_y = kernel_y or dataclasses.replace(kernel, dim=data_source.dim_y)
        if data_source.dim_y != kernel_y.dim:
            raise errors.DimensionMismatchError(f'right data dim {data_source.dim_y} does not match kernel dim {kernel_y.dim}')

    _check_monitor(monitor, task, kernel, kernel_y)

    state = StepState(_initial_iterate(task, config, kernel, kernel_y))
    models = (state.model.left, state.model.right) if task.is_paired else (state.model,)
    probe = getattr(monitor, 'probe', None)
    probe_y = getattr(monitor, 'probe_y', None)

    n_training = config.training_blocks
    batches = data_source.iter_batches(random_streams.stream(config.seed, settings.DATA_STREAM),
                                       config.data_batch, config.sampling)
    started = time.perf_counter()

    logger.info('fit %s: %d iterations, %d training blocks of %d features, k=%d',
                task.value, config.iterations, n_training, config.feature_batch, config.k)

    for _ in range(config.iterations):
        t = state.advance()
        X_batch, Y_batch = next(batches)

        if t <= n_training:
            index = t
        else:
            if t == n_training + 1:
                logger.info('feature budget exhausted at iteration %d; revisiting %d blocks', t, models[0].n_blocks)
            index = (t - n_training - 1) % models[0].n_blocks

        blocks = [_block_for(model, index) for model in models]
        eta = step_size(config.schedule, t)

        if task is Task.KPCA:
            kpca_step(state.model, X_batch, blocks[0], eta, iteration=t)
        elif task is Task.GHA:
            gha_step(state.model, X_batch, blocks[0], eta, iteration=t)
        elif task is Task.KSVD:
            ksvd_step(state.model, X_batch, Y_batch, blocks[0], blocks[1], eta, iteration=t)
        else:
            kcca_step(state.model, X_batch, Y_batch, blocks[0], blocks[1], eta, ridge=config.ridge, iteration=t)

        if t % config.trace_stride == 0 or t == config.iterations:
            h_norm = _h_norm_max(state.model, X_batch if probe is None else probe,
                                 Y_batch if probe_y is None else probe_y)
            potential = float(monitor(state.model)) if monitor is not None else math.nan
            seconds = time.perf_counter() - started if timing else 0.0

            state.trace.append(t, potential, h_norm, seconds)
            logger.debug('iteration %d: potential=%.6g h_norm_max=%.6g', t, potential, h_norm)

            low, high = settings.H_NORM_SOFT_BAND
            if not low <= h_norm <= high:
                logger.warning('iteration %d: h_norm_max=%.6g outside the sanity band [%g, %g]', t, h_norm, low, high)

    if monitor is not None and len(state.trace):
        diagnostics.check_monotone(state.trace)

    logger.info('fit %s done: %d iterations, %d blocks', task.value, state.t, models[0].n_blocks)

    return FitResult(task=task, model=state.model, trace=state.trace, config=config)
