"""Named, reproducible PRNG streams.

Every stochastic component draws from a generator derived from a master
seed plus an integer stream key, so that results are reproducible bit for
bit regardless of evaluation order or worker count.
"""
from __future__ import annotations

import numpy as np

__all__ = ["derive_rng"]


def derive_rng(master_seed: int, *stream: int) -> np.random.Generator:
    """Return a PCG64 generator for the named stream under ``master_seed``.

    ``stream`` is a tuple of nonnegative integers identifying the consumer
    (e.g. interleaver index, simulation point, frame index).  Distinct
    streams are statistically independent by SeedSequence construction.
    """
    key = tuple(int(s) for s in stream)
    if any(s < 0 for s in key):
        raise ValueError("stream key components must be nonnegative")
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=key)
    return np.random.Generator(np.random.PCG64(seq))
