"""
Contains settings for the component analysis package.

Training
.. const:: DEFAULT_TRACE_STRIDE
.. const:: H_NORM_SOFT_BAND

Kernel features
.. const:: MEDIAN_SUBSAMPLE
.. const:: UNIFORM_EPSILON

Model evaluation
.. const:: PARALLEL_MIN_BLOCKS

Oracles / diagnostics tolerances
.. const:: PROBE_SIZE
.. const:: CONDITION_LIMIT
.. const:: GRAM_PSD_TOLERANCE
.. const:: ZERO_EIGENVALUE_TOLERANCE
.. const:: QUADRATURE_HALF_WIDTH
.. const:: QUADRATURE_MIN_GRID
.. const:: GRID_REFINEMENT_TOLERANCE
.. const:: PROBE_RESEED_LIMIT

Random streams
.. const:: FEATURE_STREAM
.. const:: DATA_STREAM
.. const:: INIT_STREAM
.. const:: VIEW_STREAM
.. const:: MEDIAN_STREAM
"""

from __future__ import annotations


# -------------------- TRAINING ----------------------------

# iterations between two trace points
DEFAULT_TRACE_STRIDE = 100
# soft sanity band for the largest column norm of the iterate (violations are logged)
H_NORM_SOFT_BAND = (0.1, 10.0)

# ----------------------------------------------------------


# -------------------- KERNEL FEATURES ---------------------

# rows used by the median trick
MEDIAN_SUBSAMPLE = 1000
# uniform draws are clipped to [eps, 1 - eps] before inverse-CDF sampling
UNIFORM_EPSILON = 2.0 ** -53

# ----------------------------------------------------------


# -------------------- MODEL -------------------------------

# fewer blocks than this are always evaluated in the calling thread
PARALLEL_MIN_BLOCKS = 32

# ----------------------------------------------------------


# -------------------- ORACLES / DIAGNOSTICS ---------------

PROBE_SIZE = 2000
CONDITION_LIMIT = 1e12
# dual KPCA: min eigenvalue of the gram matrix K must be >= -GRAM_PSD_TOLERANCE * n
GRAM_PSD_TOLERANCE = 1e-8
# eigenvalues below this (relative to the largest) cannot be normalized to unit RKHS norm
ZERO_EIGENVALUE_TOLERANCE = 1e-12
# quadrature grid covers mean +- QUADRATURE_HALF_WIDTH * std
QUADRATURE_HALF_WIDTH = 6.0
QUADRATURE_MIN_GRID = 200
GRID_REFINEMENT_TOLERANCE = 0.01
PROBE_RESEED_LIMIT = 5

# ----------------------------------------------------------


# -------------------- RANDOM STREAMS ----------------------

# first spawn-key entry of every counter-based stream; keeps streams of one run seed disjoint
FEATURE_STREAM = 0
DATA_STREAM = 1
INIT_STREAM = 2
VIEW_STREAM = 3
MEDIAN_STREAM = 4

# ----------------------------------------------------------
