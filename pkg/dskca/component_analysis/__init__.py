"""
Package that implements doubly stochastic kernel component analysis
"""

# add modules in the package scope
from . import (
    diagnostics,
    kernel_features,
    model,
    oracles,
    random_streams,
    solvers
)
