"""
Contains counter-based random streams.

Every random quantity of a run is drawn from a Philox generator keyed by the run seed and a
spawn key, so any stream (a feature block, the data sampler, the initial coefficients) can be
regenerated on its own, in any order.

.. function:: stream(seed: int, *key: int) -> numpy.random.Generator
    Return the generator of one keyed stream
.. function:: derive_seed(seed: int, *key: int) -> int
    Return a 64-bit seed derived from a keyed stream
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    """
    Return the generator of one keyed stream.

    :param seed: global run seed (non-negative, up to 64 bits)
    :type seed: int
    :param key: stream coordinates, e.g. ``(FEATURE_STREAM, block_index)``
    :type key: int

    :return: Philox-backed generator positioned at the start of the stream
    :rtype: numpy.random.Generator
    """

    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(part) for part in key))

    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, *key: int) -> int:
    """ Return a 64-bit seed derived from a keyed stream """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(part) for part in key))

    return int(sequence.generate_state(1, dtype=np.uint64)[0])
