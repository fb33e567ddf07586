"""Deterministic, splittable random streams.

Keys are hashed with :class:`numpy.random.SeedSequence`, which is stable
across platforms and numpy versions. Inside the selection kernels the
stream is a plain splitmix64 generator so the compiled and the pure
Python kernels can reproduce each other draw for draw.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """Advance ``state`` and return ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


class SplitRng:
    """A seed plus a key path; ``child`` derives independent sub-streams."""

    __slots__ = ("seed", "key")

    def __init__(self, seed: int = 0, key: tuple[int, ...] = ()):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)

    def child(self, *key: int) -> SplitRng:
        return SplitRng(self.seed, self.key + tuple(key))

    def _seq(self) -> np.random.SeedSequence:
        return np.random.SeedSequence([self.seed & MASK64, self.seed >> 64, *self.key])

    def u64(self) -> int:
        return int(self._seq().generate_state(1, dtype=np.uint64)[0])

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self._seq()))

    def __repr__(self):
        return f"SplitRng(seed={self.seed}, key={self.key})"

    def __eq__(self, other):
        return isinstance(other, SplitRng) and (self.seed, self.key) == (other.seed, other.key)

    def __hash__(self):
        return hash((self.seed, self.key))
