"""
Contains the model file format.

Layout (all integers unsigned 64-bit little-endian):
    b"DSKC1" | header length | UTF-8 JSON header (sorted keys, compact separators) |
    one section per model (left then right for paired tasks), each: section length | blocks

Every block is its index followed by the alpha matrix [B x k] as row-major little-endian float64;
with `store_frequencies` the frequencies [F x dim] and phases [F] follow. Without them the
features are regenerated from the run seed, so the file size depends on the feature budget only.

.. class:: ModelFile
    Task, trained model (or pair) and feature budget, with byte conversion
"""

from __future__ import annotations

import dataclasses
import io
import json
import logging
import math
import pathlib
from typing import (
    Any,
    Optional,
    Union
)

import numpy as np

from . import (
    errors,
    settings
)
from .component_analysis.kernel_features import (
    FeatureBlock,
    FeatureForm,
    KernelFamily,
    KernelSpec,
    make_feature_block
)
from .component_analysis.model import (
    CoefficientModel,
    PairedModel
)
from .component_analysis.solvers import Task


logger = logging.getLogger(__name__)

Iterate = Union[CoefficientModel, PairedModel]

_U64 = np.dtype('<u8')
_F64 = np.dtype('<f8')


def _u64(value: int) -> bytes:
    return np.array([value], dtype=_U64).tobytes()


class _Reader:
    """ Sequential reader raising ModelFormatError on truncation """

    def __init__(self, data: bytes) -> None:
        self._stream = io.BytesIO(data)
        self._size = len(data)

    @property
    def remaining(self) -> int:
        return self._size - self._stream.tell()

    def read(self, size: int) -> bytes:
        chunk = self._stream.read(size)
        if len(chunk) != size:
            raise errors.ModelFormatError(f'truncated model file: wanted {size} bytes, got {len(chunk)}')
        return chunk

    def u64(self) -> int:
        return int(np.frombuffer(self.read(8), dtype=_U64)[0])

    def f64(self, shape: tuple[int, ...]) -> np.ndarray:
        return np.frombuffer(self.read(8 * math.prod(shape)), dtype=_F64).reshape(shape).astype(np.float64)


def _frequency_rows(spec: KernelSpec, count: int) -> int:
    if spec.family is KernelFamily.LINEAR:
        return spec.dim
    return count // 2 if spec.feature_form is FeatureForm.SINCOS else count


@dataclasses.dataclass
class ModelFile:
    """
    Implements the model file.

    `total_features` is the training feature budget the model was fit with (defaults to the
    features of the training blocks).
    """

    task: Task
    model: Iterate
    total_features: Optional[int] = None

    def __post_init__(self) -> None:
        self.task = Task(self.task)
        if self.task.is_paired != isinstance(self.model, PairedModel):
            raise errors.ModelFormatError(f'{self.task.value} model has the wrong shape')
        if self.total_features is None:
            first = self.models[0]
            self.total_features = max(first.n_blocks - 1, 0) * first.block_size

    @property
    def models(self) -> tuple[CoefficientModel, ...]:
        if isinstance(self.model, PairedModel):
            return self.model.left, self.model.right
        return (self.model,)

    # ----- WRITING -----

    def header(self) -> dict[str, Any]:
        models = self.models
        store = models[0].store_frequencies

        return {
            'format_version': settings.MODEL_FORMAT_VERSION,
            'task': self.task.value,
            'k': models[0].k,
            'kernels': [model.spec.to_dict() for model in models],
            'run_seeds': [model.run_seed for model in models],
            'total_features': int(self.total_features),
            'block_sizes': [model.block_size for model in models],
            'block_counts': [model.n_blocks for model in models],
            'store_frequencies': store
        }

    def to_bytes(self) -> bytes:
        """ Return the file content """
        header = json.dumps(self.header(), sort_keys=True, separators=(',', ':')).encode('utf8')
        store = self.models[0].store_frequencies

        parts = [settings.MODEL_MAGIC, _u64(len(header)), header]
        for model in self.models:
            section = []
            for index in range(model.n_blocks):
                section.append(_u64(index))
                section.append(np.ascontiguousarray(model.alpha(index), dtype=_F64).tobytes())
                if store:
                    block = model.block(index)
                    section.append(np.ascontiguousarray(block.frequencies, dtype=_F64).tobytes())
                    section.append(np.ascontiguousarray(block.phases, dtype=_F64).tobytes())
            payload = b''.join(section)
            parts.extend((_u64(len(payload)), payload))

        return b''.join(parts)

    def save(self, path: Union[str, pathlib.Path]) -> None:
        content = self.to_bytes()
        pathlib.Path(path).write_bytes(content)

        logger.info('saved %s model to %s (%d bytes)', self.task.value, path, len(content))

    # ----- READING -----

    @staticmethod
    def _read_section(reader: _Reader, spec: KernelSpec, k: int, run_seed: int, block_size: int,
                      n_blocks: int, store: bool) -> CoefficientModel:
        section_size = reader.u64()
        if section_size > reader.remaining:
            raise errors.ModelFormatError(f'section of {section_size} bytes exceeds the file')
        section = _Reader(reader.read(section_size))

        model = CoefficientModel(spec, k, run_seed, block_size, store)
        rows = _frequency_rows(spec, block_size)
        for expected in range(n_blocks):
            index = section.u64()
            if index != expected:
                raise errors.ModelFormatError(f'block {expected} is stored with index {index}')
            alpha = section.f64((block_size, k))

            if store:
                frequencies = section.f64((rows, spec.dim))
                phases = section.f64((rows,))
                block = FeatureBlock(
                    block_index=index,
                    seed=run_seed,
                    count=block_size,
                    frequencies=frequencies,
                    phases=phases,
                    family=spec.family,
                    scale=1.0 if spec.family is KernelFamily.LINEAR else 1.0 / math.sqrt(rows),
                    feature_form=spec.feature_form
                )
            else:
                block = make_feature_block(spec, run_seed, index, block_size)
            model.append_block(block, alpha)

        if section.remaining:
            raise errors.ModelFormatError(f'{section.remaining} unexpected bytes at the end of a section')

        return model

    @classmethod
    def from_bytes(cls, data: bytes) -> ModelFile:
        """
        Parse a model file.

        :raises errors.ModelFormatError: bad magic, unsupported version, truncated or inconsistent content
        """

        if not data.startswith(settings.MODEL_MAGIC):
            raise errors.ModelFormatError('not a model file (bad magic)')

        reader = _Reader(data[len(settings.MODEL_MAGIC):])
        try:
            header = json.loads(reader.read(reader.u64()).decode('utf8'))
        except (UnicodeDecodeError, json.JSONDecodeError) as error:
            raise errors.ModelFormatError(f'unreadable header: {error}') from error

        if header.get('format_version') != settings.MODEL_FORMAT_VERSION:
            raise errors.ModelFormatError(f'unsupported format version {header.get("format_version")}')

        try:
            task = Task(header['task'])
            n_sections = 2 if task.is_paired else 1
            columns = ('kernels', 'run_seeds', 'block_sizes', 'block_counts')
            if any(len(header[column]) != n_sections for column in columns):
                raise errors.ModelFormatError(f'{task.value} header must describe {n_sections} section(s)')

            models = [
                cls._read_section(reader, KernelSpec.from_dict(header['kernels'][section]), int(header['k']),
                                  int(header['run_seeds'][section]), int(header['block_sizes'][section]),
                                  int(header['block_counts'][section]), bool(header['store_frequencies']))
                for section in range(n_sections)
            ]
        except (KeyError, TypeError, ValueError) as error:
            raise errors.ModelFormatError(f'inconsistent header: {error}') from error

        if reader.remaining:
            raise errors.ModelFormatError(f'{reader.remaining} unexpected bytes at the end of the file')

        model = PairedModel(*models) if task.is_paired else models[0]

        return cls(task=task, model=model, total_features=int(header['total_features']))

    @classmethod
    def load(cls, path: Union[str, pathlib.Path]) -> ModelFile:
        path = pathlib.Path(path)
        if not path.is_file():
            raise errors.ModelFormatError(f'{path}: no such file')

        return cls.from_bytes(path.read_bytes())
