"""
Shared fixtures and the --runslow switch
"""

import numpy as np
import pytest

from dskca.component_analysis.kernel_features import (
    KernelFamily,
    KernelSpec
)


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run the slow convergence tests')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return

    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def gaussian_1d():
    return KernelSpec(KernelFamily.GAUSSIAN, bandwidth=1.0, dim=1)


@pytest.fixture
def gaussian_3d():
    return KernelSpec(KernelFamily.GAUSSIAN, bandwidth=1.5, dim=3)


@pytest.fixture
def linear_spec():
    def build(dim):
        return KernelSpec(KernelFamily.LINEAR, dim=dim)
    return build
