"""Reproducible random streams.

Every draw in the package goes through a :class:`Seed`.  A seed names a
``(master, stream)`` pair; trial ``t`` of an experiment gets its own key
``mix(master, stream, t)`` which feeds numpy's counter-based Philox
generator.  Trials can therefore run in any order, or in parallel, and
still reproduce bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One round of the splitmix64 finalizer (64-bit avalanche)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def mix(master: int, stream: int, trial: int) -> int:
    """Derive the 64-bit key of a trial substream."""
    h = splitmix64(master & _MASK)
    h = splitmix64(h ^ (stream & _MASK))
    return splitmix64(h ^ (trial & _MASK))


@dataclass(frozen=True)
class Seed:
    master: int = 0
    stream: int = 0

    def __post_init__(self):
        for name in ("master", "stream"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0 or v > _MASK:
                raise ValueError(f"seed {name} must be a 64-bit unsigned integer, got {v!r}")

    def key(self, trial: int = 0) -> int:
        return mix(int(self.master), int(self.stream), int(trial))

    def rng(self, trial: int = 0) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.key(trial)))

    def child(self, stream: int) -> "Seed":
        """Same master, different stream (used to decorrelate sub-tasks)."""
        return Seed(int(self.master), splitmix64(int(self.stream) ^ splitmix64(stream)))


def as_seed(seed) -> Seed:
    if isinstance(seed, Seed):
        return seed
    if isinstance(seed, tuple):
        return Seed(*seed)
    if seed is None:
        return Seed()
    return Seed(int(seed))


def normal(rng: np.random.Generator, size) -> np.ndarray:
    """Standard normals by Box-Muller on the generator's uniforms."""
    size = (size,) if np.isscalar(size) else tuple(size)
    count = int(np.prod(size, dtype=np.int64))
    half = (count + 1) // 2
    u1 = 1.0 - rng.random(half)  # (0, 1]
    u2 = rng.random(half)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    z = np.empty(2 * half)
    z[0::2] = r * np.cos(theta)
    z[1::2] = r * np.sin(theta)
    return z[:count].reshape(size)
