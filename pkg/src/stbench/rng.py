"""SplitMix64 pseudo-random generator.

Portable and bit-exact on every platform: all arithmetic is done on Python
integers masked to 64 bits, and doubles are built from the top 53 bits.
Substreams are derived by hashing (seed, *keys) so that independent units of
work (objects, query instances) can be generated in any order or in parallel.
"""

from __future__ import annotations

from typing import MutableSequence

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 finalizer (Stafford variant 13)."""
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    state = mix64((seed & MASK64) ^ GOLDEN_GAMMA)
    for k in keys:
        state = mix64((state + GOLDEN_GAMMA + (k & MASK64)) & MASK64)
    return state


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    @classmethod
    def substream(cls, seed: int, *keys: int) -> SplitMix64:
        return cls(derive_seed(seed, *keys))

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def uniform(self, lo: float, hi: float) -> float:
        """Uniform double in [lo, hi]; returns ``lo`` when the range is empty."""
        if hi <= lo:
            return lo
        v = lo + (hi - lo) * self.random()
        return hi if v > hi else v

    def randbelow(self, n: int) -> int:
        """Unbiased integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        if n == 1:
            return 0
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def randint(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi] inclusive."""
        return lo + self.randbelow(hi - lo + 1)

    def shuffle(self, items: MutableSequence) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]
