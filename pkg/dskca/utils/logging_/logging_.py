"""
Implements logging.

.. func:: setup_logging(config_path: pathlib.Path, log_dir: Optional[pathlib.Path] = None,
        default_level: Union[int, str] = logging.INFO) -> None
    Setup logging
"""

from __future__ import annotations

import logging
import logging.config
import pathlib
from typing import (
    Optional,
    Union
)

import yaml

from ... import settings


def setup_logging(config_path: pathlib.Path, log_dir: Optional[pathlib.Path] = None,
                  default_level: Union[int, str] = logging.INFO) -> None:
    """
    Setup logging.

    File handlers keep only the file name from the yaml config: the file is re-rooted under
    `log_dir` (``settings.LOG_DIR`` by default) and the directory is created.

    :param config_path: path to yaml file config
    :type config_path: pathlib.Path
    :param log_dir: directory for the file handlers
    :type log_dir: Optional[pathlib.Path]
    :param default_level: logging level that used if config file is missing
    :type default_level: Union[int, str]

    :return: None
    :rtype: None
    """

    log_dir = pathlib.Path(log_dir) if log_dir is not None else settings.LOG_DIR

    if config_path.exists():
        with open(config_path, 'r') as config_file:
            config = yaml.safe_load(config_file.read())

        for handler_name, handler in config['handlers'].items():
            if 'file' in handler_name:
                log_path = log_dir / pathlib.Path(handler['filename']).name
                log_path.parent.mkdir(parents=True, exist_ok=True)
                handler['filename'] = str(log_path)

        logging.config.dictConfig(config)
    else:
        logging.basicConfig(level=default_level)

        logging.info('Failed to load the configuration file. Default config is using!')
