"""
Contains dataset readers and writers.

Formats:
    csv    comma separated rows of reals (optionally one header row to skip)
    f64le  16-byte header (n, d as little-endian unsigned 64-bit) then row-major little-endian float64

.. class:: DatasetFormat(str, enum.Enum)
.. class:: Dataset
    Finite data matrix with an optional paired view

.. function:: load_dataset(path: Union[str, pathlib.Path], format: DatasetFormat = DatasetFormat.CSV,
        skip_header: bool = False) -> Dataset
    Read a dataset file
.. function:: load_paired(path_x: Union[str, pathlib.Path], path_y: Union[str, pathlib.Path],
        format: DatasetFormat = DatasetFormat.CSV, skip_header: bool = False) -> Dataset
    Read two row-aligned views
.. function:: write_csv(path: Union[str, pathlib.Path], values: numpy.ndarray, header: Optional[Sequence[str]] = None) -> None
.. function:: write_f64le(path: Union[str, pathlib.Path], values: numpy.ndarray) -> None
.. function:: slice_indicators(response: numpy.ndarray, n_slices: int) -> numpy.ndarray
    One-hot slice memberships of a scalar response (right view for kernel sliced inverse regression)
"""

from __future__ import annotations

import csv
import dataclasses
import enum
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

from . import (
    errors,
    settings
)


logger = logging.getLogger(__name__)


class DatasetFormat(str, enum.Enum):
    CSV = 'csv'
    F64LE = 'f64le'


@dataclasses.dataclass(frozen=True)
class Dataset:
    """
    Implements dataset: a finite matrix [n x d], n >= 1, with an optional row-aligned second view.
    """

    values: np.ndarray
    paired: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        for name, matrix in (('values', self.values), ('paired', self.paired)):
            if matrix is None:
                continue
            if matrix.ndim != 2 or matrix.shape[0] < 1:
                raise errors.DatasetError(f'{name} must be a non-empty matrix, got shape {matrix.shape}')
            if not np.all(np.isfinite(matrix)):
                raise errors.DatasetError(f'{name} contains non-finite values')

        if self.paired is not None and self.paired.shape[0] != self.values.shape[0]:
            raise errors.DatasetError(f'paired views need the same rows, got {self.values.shape[0]} and {self.paired.shape[0]}')

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def dim_y(self) -> Optional[int]:
        return None if self.paired is None else self.paired.shape[1]


# ----- CSV -----

def _read_csv(path: pathlib.Path, skip_header: bool) -> np.ndarray:
    rows = []
    width = None

    with open(path, newline='', encoding='utf8') as file:
        for line, cells in enumerate(csv.reader(file), start=1):
            if skip_header and line == 1:
                continue
            if not cells or all(not cell.strip() for cell in cells):
                continue

            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise errors.DatasetError(f'{path}: row {line} has {len(cells)} cells, expected {width}', row=line)

            row = []
            for col, cell in enumerate(cells, start=1):
                try:
                    value = float(cell)
                except ValueError:
                    raise errors.DatasetError(f'{path}: non-numeric cell {cell!r} at row {line}, col {col}',
                                              row=line, col=col) from None
                if not math.isfinite(value):
                    raise errors.DatasetError(f'{path}: non-finite cell at row {line}, col {col}', row=line, col=col)
                row.append(value)
            rows.append(row)

    if not rows:
        raise errors.DatasetError(f'{path}: no data rows')

    return np.array(rows, dtype=np.float64)


def write_csv(path: Union[str, pathlib.Path], values: Any, header: Optional[Sequence[str]] = None) -> None:
    """ Write a matrix as CSV, every value with 17 significant digits """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values.reshape(-1, 1)

    with open(path, 'w', newline='', encoding='utf8') as file:
        writer = csv.writer(file, lineterminator='\n')
        if header is not None:
            writer.writerow(header)
        writer.writerows([f'{value:.17g}' for value in row] for row in values)


# ----- F64LE -----

def _read_f64le(path: pathlib.Path) -> np.ndarray:
    data = path.read_bytes()
    if len(data) < settings.F64LE_HEADER_SIZE:
        raise errors.DatasetError(f'{path}: truncated header ({len(data)} bytes)')

    n_rows, dim = (int(value) for value in np.frombuffer(data[:settings.F64LE_HEADER_SIZE], dtype='<u8'))
    payload = data[settings.F64LE_HEADER_SIZE:]
    if len(payload) != 8 * n_rows * dim:
        raise errors.DatasetError(f'{path}: header announces {n_rows} x {dim} values, payload holds {len(payload)} bytes')

    values = np.frombuffer(payload, dtype='<f8').reshape(n_rows, dim).astype(np.float64)
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        row, col = (int(index) + 1 for index in bad[0])
        raise errors.DatasetError(f'{path}: non-finite value at row {row}, col {col}', row=row, col=col)

    return values


def write_f64le(path: Union[str, pathlib.Path], values: Any) -> None:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise errors.DatasetError(f'f64le files hold matrices, got shape {values.shape}')

    header = np.array(values.shape, dtype='<u8').tobytes()
    pathlib.Path(path).write_bytes(header + np.ascontiguousarray(values, dtype='<f8').tobytes())


# - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - -

def _read_matrix(path: Union[str, pathlib.Path], format: Union[DatasetFormat, str], skip_header: bool) -> np.ndarray:
    path = pathlib.Path(path)
    if not path.is_file():
        raise errors.DatasetError(f'{path}: no such file')

    try:
        format = DatasetFormat(format)
    except ValueError as error:
        raise errors.DatasetError(str(error)) from error

    values = _read_f64le(path) if format is DatasetFormat.F64LE else _read_csv(path, skip_header)
    logger.debug('read %s: %d x %d', path, *values.shape)

    return values


def load_dataset(path: Union[str, pathlib.Path], format: Union[DatasetFormat, str] = DatasetFormat.CSV,
                 skip_header: bool = False) -> Dataset:
    """
    Read a dataset file.

    :param path: file path
    :type path: Union[str, pathlib.Path]
    :param format: csv or f64le
    :type format: Union[DatasetFormat, str]
    :param skip_header: ignore the first CSV row
    :type skip_header: bool

    :return: dataset
    :rtype: Dataset

    :raises errors.DatasetError: missing file, ragged rows, non-numeric or non-finite cells (1-based row/col)
    """

    return Dataset(_read_matrix(path, format, skip_header))


def load_paired(path_x: Union[str, pathlib.Path], path_y: Union[str, pathlib.Path],
                format: Union[DatasetFormat, str] = DatasetFormat.CSV, skip_header: bool = False) -> Dataset:
    """ Read two row-aligned views """
    return Dataset(_read_matrix(path_x, format, skip_header), _read_matrix(path_y, format, skip_header))


# ----- SLICES -----

def slice_indicators(response: Any, n_slices: int) -> np.ndarray:
    """
    Return one-hot slice memberships of a scalar response.

    Rows are sorted by response (stable, ties keep their order) and cut into `n_slices`
    slices of equal count (sizes differ by at most one). Used as the right view of kernel CCA,
    with a linear kernel, to get kernel sliced inverse regression directions.

    :param response: responses [n] or [n x 1]
    :type response: numpy.ndarray
    :param n_slices: number of slices, 2 <= n_slices <= n
    :type n_slices: int

    :return: indicator matrix [n x n_slices]
    :rtype: numpy.ndarray

    :raises errors.DatasetError: response is not a finite column or the slice count is out of range
    """

    response = np.asarray(response, dtype=np.float64)
    if response.ndim == 2 and response.shape[1] == 1:
        response = response[:, 0]
    if response.ndim != 1 or not response.size:
        raise errors.DatasetError(f'response must be a non-empty column, got shape {response.shape}')
    if not np.all(np.isfinite(response)):
        raise errors.DatasetError('response contains non-finite values')
    if not 2 <= n_slices <= response.size:
        raise errors.DatasetError(f'need 2 <= n_slices <= {response.size}, got {n_slices}')

    ranks = np.empty(response.size, dtype=np.int64)
    ranks[np.argsort(response, kind='stable')] = np.arange(response.size)

    return np.eye(n_slices)[ranks * n_slices // response.size]
