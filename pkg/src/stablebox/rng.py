"""Seeded, splittable random streams.

Every stochastic routine in the package takes an ``rng`` argument that is
either an :class:`RngStream` or an already-built :class:`numpy.random.Generator`.
An :class:`RngStream` is a value: calling :meth:`RngStream.generator` twice
gives two generators that produce the same draws.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Union

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by ``(seed, stream_id, path)``.

    The generator is Philox (counter based) seeded through
    :class:`numpy.random.SeedSequence` with ``spawn_key=(stream_id, *path)``,
    so distinct keys give statistically independent streams.
    """

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not 0 <= self.seed <= _MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not 0 <= self.stream_id <= _MASK64:
            raise ValueError(f"stream_id must be a 64-bit unsigned integer, got {self.stream_id}")

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self.path))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(self.seed_sequence()))

    def spawn(self, *key: int) -> "RngStream":
        """Child stream; ``stream.spawn(i, j)`` is reproducible and independent of siblings."""
        for k in key:
            if not 0 <= k <= _MASK64:
                raise ValueError(f"spawn keys must be non-negative 64-bit integers, got {k}")
        return RngStream(self.seed, self.stream_id, self.path + tuple(key))


RngLike = Union[RngStream, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def name_key(name: str) -> int:
    """Stable integer key for a string label (CRC32, identical across runs and platforms)."""
    return zlib.crc32(name.encode("utf-8"))


def derive_stream(master_seed: int, experiment: str, replicate: int) -> RngStream:
    """Stream for replicate ``replicate`` of experiment ``experiment``."""
    return RngStream(master_seed, name_key(experiment), (replicate,))
