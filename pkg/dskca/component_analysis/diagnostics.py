"""
Contains convergence diagnostics: subspace angles, rate fitting and the first-order update probe.

The potential of an iterate is 1 - cos^2 of the largest principal angle between its span and the
true top-k eigenspace. Iterates of the doubly stochastic solvers live outside the RKHS, so the
potential is measured on evaluations over a probe set (empirical L2 metric).

.. class:: DiagnosticsTrace
    Trace of a fit: iterations, potentials, largest column norms and wall clock seconds
.. class:: SubspaceMonitor
    Potential of an iterate against reference evaluations on a probe set
.. class:: ProbeResult
    Residuals of the first-order probe

.. function:: cos2_subspace_gram(V_coeffs: numpy.ndarray, G_coeffs: numpy.ndarray, gram: numpy.ndarray) -> float
.. function:: sin2_subspace_empirical(Ev: numpy.ndarray, Eh: numpy.ndarray) -> float
.. function:: rate_fit(trace: DiagnosticsTrace, window: float) -> float
.. function:: update_residual(A_t: numpy.ndarray, G: numpy.ndarray, V: numpy.ndarray, eta: float) -> float
.. function:: first_order_probe(dim: int, k: int, seed: int, eta_list: Sequence[float]) -> ProbeResult
.. function:: canonical_correlations(Eu: numpy.ndarray, Ev: numpy.ndarray) -> numpy.ndarray
.. function:: align_columns(E: numpy.ndarray, reference: numpy.ndarray) -> tuple[numpy.ndarray, numpy.ndarray]
.. function:: check_monotone(trace: DiagnosticsTrace, warmup: float = 0.1, window: int = 10) -> bool
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import pathlib
from typing import (
    Any,
    Optional,
    Sequence,
    Union
)

import numpy as np
import scipy.linalg

from . import (
    oracles,
    random_streams,
    settings
)
from .model import PairedModel
from .. import errors


logger = logging.getLogger(__name__)

TRACE_HEADER = ('iteration', 'potential', 'h_norm_max', 'seconds')
RANGE_SLACK = 1e-9
MIN_RATE_POINTS = 10
MIN_PROBE_SLOPE = 1.9


def _angle_in_range(value: float, name: str) -> float:
    if not -RANGE_SLACK <= value <= 1.0 + RANGE_SLACK:
        raise errors.DiagnosticsError(f'{name} = {value!r} is outside [0, 1]')

    return min(max(value, 0.0), 1.0)


def _lambda_min(matrix: np.ndarray) -> float:
    return float(scipy.linalg.eigvalsh((matrix + matrix.T) / 2.0, subset_by_index=[0, 0])[0])


# ----- TRACE -----

@dataclasses.dataclass
class DiagnosticsTrace:
    """
    Implements the trace of a fit.

    Potentials are in [0, 1] (NaN when no monitor was attached).
    """

    iterations: list[int] = dataclasses.field(default_factory=list)
    potential: list[float] = dataclasses.field(default_factory=list)
    h_norm_max: list[float] = dataclasses.field(default_factory=list)
    wall_clock: list[float] = dataclasses.field(default_factory=list)

    def __post_init__(self) -> None:
        lengths = {len(self.iterations), len(self.potential), len(self.h_norm_max), len(self.wall_clock)}
        if len(lengths) != 1:
            raise errors.DiagnosticsError('trace columns must have equal lengths')

    def __len__(self) -> int:
        return len(self.iterations)

    def append(self, iteration: int, potential: float, h_norm_max: float, seconds: float) -> None:
        if not math.isnan(potential):
            potential = _angle_in_range(float(potential), 'potential')

        self.iterations.append(int(iteration))
        self.potential.append(float(potential))
        self.h_norm_max.append(float(h_norm_max))
        self.wall_clock.append(float(seconds))

    def to_csv(self, path: Union[str, pathlib.Path]) -> None:
        """ Write the trace as CSV with header `iteration,potential,h_norm_max,seconds` """
        with open(path, 'w', newline='', encoding='utf8') as file:
            writer = csv.writer(file, lineterminator='\n')
            writer.writerow(TRACE_HEADER)
            for row in zip(self.iterations, self.potential, self.h_norm_max, self.wall_clock):
                writer.writerow([str(row[0])] + [f'{value:.17g}' for value in row[1:]])

    @classmethod
    def read_csv(cls, path: Union[str, pathlib.Path]) -> DiagnosticsTrace:
        """
        Read a trace written by :meth:`to_csv`.

        :raises errors.DiagnosticsError: bad header or malformed row
        """

        trace = cls()
        with open(path, newline='', encoding='utf8') as file:
            reader = csv.reader(file)
            header = next(reader, None)
            if header is None or tuple(cell.strip() for cell in header) != TRACE_HEADER:
                raise errors.DiagnosticsError(f'trace header must be {",".join(TRACE_HEADER)}, got {header}')

            for line, row in enumerate(reader, start=2):
                try:
                    iteration, potential, h_norm, seconds = row
                    trace.append(int(iteration), float(potential), float(h_norm), float(seconds))
                except ValueError as error:
                    raise errors.DiagnosticsError(f'malformed trace row {line}: {row}') from error

        return trace


# ----- SUBSPACE ANGLES -----

def _checked_gram(gram_product: np.ndarray, name: str) -> np.ndarray:
    if np.linalg.cond(gram_product) > settings.CONDITION_LIMIT:
        raise errors.RankDeficiencyError(f'{name} is rank deficient (condition number over {settings.CONDITION_LIMIT:g})')

    return gram_product


def cos2_subspace_gram(V_coeffs: Any, G_coeffs: Any, gram: Any) -> float:
    """
    Return cos^2 of the largest principal angle between two spans of kernel expansions.

    Both subspaces are expanded over the same anchor points; inner products use the `gram`
    metric. With V orthonormal in that metric this is lambda_min(V'KG (G'KG)^-1 G'KV); V is
    whitened first, so any basis of either span gives the same value.

    :param V_coeffs: coefficients [n x k] of the reference span
    :type V_coeffs: numpy.ndarray
    :param G_coeffs: coefficients [n x k'] of the compared span
    :type G_coeffs: numpy.ndarray
    :param gram: gram matrix [n x n]
    :type gram: numpy.ndarray

    :return: cos^2 theta in [0, 1]
    :rtype: float

    :raises errors.RankDeficiencyError: a basis is numerically rank deficient
    """

    V = np.asarray(V_coeffs, dtype=np.float64)
    G = np.asarray(G_coeffs, dtype=np.float64)
    K = np.asarray(gram, dtype=np.float64)
    if V.ndim != 2 or G.ndim != 2 or V.shape[0] != K.shape[0] or G.shape[0] != K.shape[0]:
        raise errors.DimensionMismatchError(f'coefficients must have {K.shape[0]} rows, got {V.shape} and {G.shape}')

    KV, KG = K @ V, K @ G
    VKV = _checked_gram((V.T @ KV + KV.T @ V) / 2.0, "V'KV")
    GKG = _checked_gram((G.T @ KG + KG.T @ G) / 2.0, "G'KG")

    cross = V.T @ KG
    L = scipy.linalg.cholesky(VKV, lower=True)
    whitened = scipy.linalg.solve_triangular(L, cross, lower=True)
    projected = whitened @ np.linalg.solve(GKG, whitened.T)

    return _angle_in_range(_lambda_min(projected), 'cos^2')


def _orthonormal_basis(E: np.ndarray, name: str) -> np.ndarray:
    U, sigma, _ = np.linalg.svd(E, full_matrices=False)
    if sigma[-1] <= settings.ZERO_EIGENVALUE_TOLERANCE * sigma[0]:
        raise errors.RankDeficiencyError(f'{name} is rank deficient')

    return U


def sin2_subspace_empirical(Ev: Any, Eh: Any) -> float:
    """
    Return sin^2 of the largest principal angle between the column spans of two evaluation matrices.

    :param Ev: reference evaluations [m x k]
    :type Ev: numpy.ndarray
    :param Eh: compared evaluations [m x k'], k' >= k for a meaningful angle
    :type Eh: numpy.ndarray

    :return: 1 - lambda_min(Qv'Qh Qh'Qv) in [0, 1]
    :rtype: float

    :raises errors.RankDeficiencyError: an input is numerically rank deficient
    """

    Ev = np.asarray(Ev, dtype=np.float64)
    Eh = np.asarray(Eh, dtype=np.float64)
    if Ev.ndim != 2 or Eh.ndim != 2 or Ev.shape[0] != Eh.shape[0]:
        raise errors.DimensionMismatchError(f'evaluation matrices must share rows, got {Ev.shape} and {Eh.shape}')
    if Ev.shape[0] < max(Ev.shape[1], Eh.shape[1]):
        raise errors.DimensionMismatchError(f'need at least as many probe points as columns, got {Ev.shape[0]}')

    cross = _orthonormal_basis(Ev, 'Ev').T @ _orthonormal_basis(Eh, 'Eh')

    return _angle_in_range(1.0 - _lambda_min(cross @ cross.T), 'sin^2')


class SubspaceMonitor:
    """
    Implements the potential of an iterate against reference evaluations on a probe set.

    For paired iterates `view` selects the left or right functions (the right view is evaluated
    on `probe_y`).
    """

    def __init__(self, probe: Any, reference: Any, probe_y: Optional[Any] = None, view: str = 'left') -> None:
        self.probe = np.asarray(probe, dtype=np.float64)
        self.probe_y = None if probe_y is None else np.asarray(probe_y, dtype=np.float64)
        self.reference = np.asarray(reference, dtype=np.float64)

        if view not in ('left', 'right'):
            raise errors.ConfigurationError(f'view must be left or right, got {view!r}')
        if view == 'right' and self.probe_y is None:
            raise errors.ConfigurationError('the right view needs probe_y')
        self.view = view

    def __call__(self, iterate: Any) -> float:
        if isinstance(iterate, PairedModel):
            if self.view == 'right':
                return sin2_subspace_empirical(self.reference, iterate.right.evaluate(self.probe_y))
            iterate = iterate.left

        return sin2_subspace_empirical(self.reference, iterate.evaluate(self.probe))


# ----- RATES -----

def rate_fit(trace: DiagnosticsTrace, window: float) -> float:
    """
    Return the least-squares slope of log(potential) against log(iteration) over the final window.

    :param trace: fit trace
    :type trace: DiagnosticsTrace
    :param window: fraction of the iterations (the last ones) used, in (0, 1]
    :type window: float

    :return: slope (about -1 for an O(1/t) rate)
    :rtype: float

    :raises errors.DiagnosticsError: fewer than 10 points in the window or nonpositive potentials
    """

    if not 0 < window <= 1:
        raise errors.DiagnosticsError(f'window must be in (0, 1], got {window}')

    iterations = np.asarray(trace.iterations, dtype=np.float64)
    potential = np.asarray(trace.potential, dtype=np.float64)
    if not iterations.size:
        raise errors.DiagnosticsError('trace is empty')

    selected = iterations >= (1.0 - window) * iterations[-1]
    selected &= iterations > 0
    if np.count_nonzero(selected) < MIN_RATE_POINTS:
        raise errors.DiagnosticsError(f'need at least {MIN_RATE_POINTS} trace points in the window, '
                                      f'got {np.count_nonzero(selected)}')
    if not np.all(potential[selected] > 0):
        raise errors.DiagnosticsError('potentials in the window must be positive (and known)')

    slope, _ = np.polyfit(np.log(iterations[selected]), np.log(potential[selected]), 1)

    return float(slope)


def check_monotone(trace: DiagnosticsTrace, warmup: float = 0.1, window: int = 10) -> bool:
    """ Return True if the potential, averaged over `window` points, does not increase after the warmup """
    iterations = np.asarray(trace.iterations, dtype=np.float64)
    potential = np.asarray(trace.potential, dtype=np.float64)
    if not iterations.size:
        return True

    potential = potential[iterations > warmup * iterations[-1]]
    if potential.size <= window or np.any(np.isnan(potential)):
        return True

    smoothed = np.convolve(potential, np.ones(window) / window, mode='valid')
    increases = np.flatnonzero(np.diff(smoothed) > RANGE_SLACK)
    if increases.size:
        logger.warning('smoothed potential increases at %d of %d points after warmup', increases.size, smoothed.size - 1)
        return False

    return True


# ----- FIRST ORDER PROBE -----

@dataclasses.dataclass(frozen=True)
class ProbeResult:
    etas: np.ndarray
    residuals: np.ndarray
    slope: float

    @property
    def passed(self) -> bool:
        return self.slope >= MIN_PROBE_SLOPE


def update_residual(A_t: Any, G: Any, V: Any, eta: float) -> float:
    """
    Return |cos^2(V, G + eta (I - GG')A_t G) - cos^2(V, F(G; eta))| for orthonormal G.

    F is the gradient step with explicit orthogonalization, see
    :func:`oracles.reference_orthogonalized_step`. Both rules coincide to first order in eta.
    """

    if eta == 0:
        return 0.0

    A_t = np.asarray(A_t, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    identity = np.eye(A_t.shape[0])

    oja = G + eta * (identity - G @ G.T) @ A_t @ G
    orthogonalized = oracles.reference_orthogonalized_step(G, A_t, eta)

    return abs(cos2_subspace_gram(V, oja, identity) - cos2_subspace_gram(V, orthogonalized, identity))


def _random_psd(rng: np.random.Generator, dim: int) -> np.ndarray:
    factor = rng.standard_normal((dim, dim))
    matrix = factor @ factor.T

    return matrix / np.linalg.norm(matrix, 2)


def first_order_probe(dim: int, k: int, seed: int, eta_list: Sequence[float]) -> ProbeResult:
    """
    Compare the normalization-free update with the explicitly orthogonalized one.

    Builds a random PSD A (its top-k eigenvectors V are the target), a random PSD A_t and a random
    orthonormal G, and returns the residuals of :func:`update_residual` for every eta with the
    log-log slope of residual against eta (about 2).

    :param dim: ambient dimension
    :type dim: int
    :param k: subspace dimension
    :type k: int
    :param seed: seed of the random instance
    :type seed: int
    :param eta_list: step sizes, decreasing
    :type eta_list: Sequence[float]

    :return: residuals per eta and their log-log slope (NaN with fewer than two positive pairs)
    :rtype: ProbeResult

    :raises errors.DiagnosticsError: no well-posed instance after the reseed limit
    """

    etas = np.asarray(eta_list, dtype=np.float64)
    if not 1 <= k < dim:
        raise errors.ConfigurationError(f'need 1 <= k < dim, got k={k}, dim={dim}')
    if np.any(np.diff(etas) > 0) or np.any(etas < 0):
        raise errors.ConfigurationError('eta_list must be non-negative and decreasing')

    for attempt in range(settings.PROBE_RESEED_LIMIT):
        rng = random_streams.stream(seed, attempt)
        A = _random_psd(rng, dim)
        A_t = _random_psd(rng, dim)
        G, _ = np.linalg.qr(rng.standard_normal((dim, k)))
        _, V = oracles.dense_topk_eig(A, k)

        try:
            start = cos2_subspace_gram(V, G, np.eye(dim))
            residuals = np.array([update_residual(A_t, G, V, eta) for eta in etas])
        except errors.RankDeficiencyError:
            logger.debug('probe instance %d is rank deficient; reseeding', attempt)
            continue
        if start < 1e-6:
            logger.debug('probe instance %d starts orthogonal to the target; reseeding', attempt)
            continue

        positive = (etas > 0) & (residuals > 0)
        slope = math.nan
        if np.count_nonzero(positive) >= 2:
            slope = float(np.polyfit(np.log(etas[positive]), np.log(residuals[positive]), 1)[0])

        return ProbeResult(etas=etas, residuals=residuals, slope=slope)

    raise errors.DiagnosticsError(f'no well-posed probe instance in {settings.PROBE_RESEED_LIMIT} attempts')


# ----- REPORTING -----

def canonical_correlations(Eu: Any, Ev: Any) -> np.ndarray:
    """
    Return the canonical correlations between the column spans of two evaluation matrices.

    Uses uncentered second moments over the probe points, i.e. the singular values of
    Lu^-1 Cuv Lv^-T (computed from orthonormal bases of both spans), descending.

    :raises errors.RankDeficiencyError: an input is numerically rank deficient
    """

    Eu = np.asarray(Eu, dtype=np.float64)
    Ev = np.asarray(Ev, dtype=np.float64)
    if Eu.ndim != 2 or Ev.ndim != 2 or Eu.shape[0] != Ev.shape[0]:
        raise errors.DimensionMismatchError(f'evaluation matrices must share rows, got {Eu.shape} and {Ev.shape}')

    cross = _orthonormal_basis(Eu, 'Eu').T @ _orthonormal_basis(Ev, 'Ev')

    return np.clip(np.linalg.svd(cross, compute_uv=False), 0.0, 1.0)


def align_columns(E: Any, reference: Any) -> tuple[np.ndarray, np.ndarray]:
    """
    Return E R and R, with R the least-squares map of the columns of E onto `reference`.

    Used to compare fitted functions with individual reference eigenfunctions (the fitted
    span is only defined up to an invertible k x k matrix).
    """

    E = np.asarray(E, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    rotation, *_ = np.linalg.lstsq(E, reference, rcond=None)

    return E @ rotation, rotation
