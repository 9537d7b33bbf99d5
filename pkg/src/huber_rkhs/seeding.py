"""Order-independent random streams.

A stream is addressed by ``(base_seed, *keys)``; the keys go into the
``SeedSequence`` spawn key, so trial ``t`` gets the same draws no matter which
worker runs it or in what order.  Streams use the counter-based Philox
generator.
"""

from __future__ import annotations

import numpy as np


def seed_sequence(base_seed, *keys):
    return np.random.SeedSequence(entropy=int(base_seed), spawn_key=tuple(int(k) for k in keys))


def make_rng(base_seed, *keys):
    return np.random.Generator(np.random.Philox(seed_sequence(base_seed, *keys)))
