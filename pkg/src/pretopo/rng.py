"""Deterministic random number generation with a pinned bit-level contract.

Generated fixtures are regenerated rather than shipped, so the exact draw
sequence is part of the data format:

* the raw stream is splitmix64: state advances by 0x9E3779B97F4A7C15 and the
  output is the finalizer mix of the new state;
* a uniform double takes the top 53 bits of one output, scaled to [0, 1);
* a normal double is Box-Muller using two fresh outputs per draw: the first
  is mapped to (0, 1] before the log, and only the cosine branch is used
  (no spare is cached).
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TWO53 = float(1 << 53)
_TWO_PI = 2.0 * math.pi


class SplitMix64:
    """64-bit splitmix generator with uniform and normal helpers."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        u = (self.next_u64() >> 11) / _TWO53
        return lo + u * (hi - lo)

    def gauss(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        u1 = ((self.next_u64() >> 11) + 1) / _TWO53  # in (0, 1], log-safe
        u2 = (self.next_u64() >> 11) / _TWO53
        z = math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)
        return mu + sigma * z
