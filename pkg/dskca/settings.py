"""
Contains settings.

* Path constants
.. const:: CORE_DIR
.. const:: PROJECT_DIR

* Logging
.. const:: LOGGING_CONFIG_PATH
.. const:: LOG_DIR              | > env `DSKCA_LOG_DIR`

* Parallelism
.. const:: THREADS_ENV          | > raw env `DSKCA_THREADS`, caps internal parallelism
.. function:: threads(value: Optional[str] = None) -> int
    Parse the thread count (all cores if unset)

* File formats
.. const:: MODEL_MAGIC          | > first bytes of every model file
.. const:: MODEL_FORMAT_VERSION | > stored in the model file header
.. const:: F64LE_HEADER_SIZE    | > (n, d) as two 8-byte little-endian unsigned integers
"""

from __future__ import annotations

import os
import pathlib
from typing import (
    Optional
)

from dotenv import load_dotenv

from . import errors


load_dotenv()


# Project paths
CORE_DIR = pathlib.Path(__file__).parent
PROJECT_DIR = CORE_DIR.parent

# Logging
LOGGING_CONFIG_PATH = CORE_DIR / 'utils' / 'logging_' / 'logging_config.yaml'
LOG_DIR = pathlib.Path(os.getenv('DSKCA_LOG_DIR', str(PROJECT_DIR / 'logs')))

# Parallelism
THREADS_ENV = os.getenv('DSKCA_THREADS')


def threads(value: Optional[str] = None) -> int:
    """
    Return the worker thread count.

    :param value: raw setting (``THREADS_ENV`` if omitted)
    :type value: Optional[str]

    :return: parsed count (at least 1), all cores when unset
    :rtype: int

    :raises errors.ConfigurationError: the setting is not an integer
    """

    value = THREADS_ENV if value is None else value
    if value is None or not value.strip():
        return max(1, os.cpu_count() or 1)

    try:
        return max(1, int(value))
    except ValueError as error:
        raise errors.ConfigurationError(f'DSKCA_THREADS must be an integer, got {value!r}') from error


# File formats
MODEL_MAGIC = b'DSKC1'
MODEL_FORMAT_VERSION = 1
F64LE_HEADER_SIZE = 16
