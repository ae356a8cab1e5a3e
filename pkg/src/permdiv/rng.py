"""Reproducible random streams keyed by ``(seed, stream_id)``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_SEED = 20240601

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Identifies one independent variate sequence.

    The generator is PCG64 seeded through ``SeedSequence`` with the stream id
    as spawn key, so the sequence depends only on the pair and not on the
    platform or on how many other streams exist.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not (0 <= self.stream_id <= _MASK64):
            raise ValueError(f"stream_id must be a 64-bit unsigned integer, got {self.stream_id}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream, a numpy Generator, or an int seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if rng is None:
        return RngStream(DEFAULT_SEED).generator()
    return RngStream(int(rng)).generator()
