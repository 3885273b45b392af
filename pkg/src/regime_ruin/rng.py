"""Replayable random streams.

Every Monte Carlo path draws from its own generator keyed by
``(seed, tag..., stream_id)``, so a result never depends on how paths are
split across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# purpose tags keep streams of different estimators disjoint
Y_INF = 1
GBAR0 = 2
CYCLE_PAIR = 3
FIXED_POINT_PAIR = 4
FIXED_POINT_Y = 5
HORIZON = 6
RECURSION = 7
WIENER = 8
EXCURSION = 9
QUADRATURE = 10


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int
    tag: tuple = ()

    def __post_init__(self):
        if not 0 <= self.seed < 2**64 or not 0 <= self.stream_id < 2**64:
            raise ValueError("seed and stream_id must be 64-bit unsigned integers")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(*self.tag, self.stream_id))
        return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")
