"""SplitMix64, the generator's only source of randomness.

Written out in full so a given seed yields the same data on every
platform and in every implementation. Arithmetic is modulo 2**64::

    state  = state + 0x9E3779B97F4A7C15
    z      = state
    z      = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z      = (z ^ (z >> 27)) * 0x94D049BB133111EB
    output = z ^ (z >> 31)

Record ``i`` of a run with seed ``s`` starts from state
``mix(mix(s) ^ i)``, where ``mix(x)`` is one SplitMix64 output taken from
state ``x``. Every record therefore has its own stream and generation can
be sharded by index without changing the output.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO_POW_53 = float(1 << 53)


def mix(x: int) -> int:
    """One SplitMix64 output from state ``x``."""
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, state: int):
        self.state = state & MASK64

    @classmethod
    def for_record(cls, seed: int, index: int) -> SplitMix64:
        return cls(mix(mix(seed & MASK64) ^ (index & MASK64)))

    def next_u64(self) -> int:
        self.state = z = (self.state + GOLDEN) & MASK64
        z = ((z ^ (z >> 30)) * _M1) & MASK64
        z = ((z ^ (z >> 27)) * _M2) & MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) / _TWO_POW_53

    def below(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased by rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def integer(self, lo: int, hi: int) -> int:
        """Uniform integer in the closed interval [lo, hi]."""
        return lo + self.below(hi - lo + 1)

    def choice(self, seq):
        return seq[self.below(len(seq))]
