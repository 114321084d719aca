"""Deterministic xorshift-family PRNG used everywhere randomness is needed.

The generator is xoshiro256** (Blackman & Vigna), seeded through splitmix64.
Both are fixed-width 64-bit integer algorithms, so every stream is
bit-reproducible across platforms and Python versions. Streams are derived
by mixing a stream index into the base seed before seeding.
"""

from __future__ import annotations

import math

MASK64 = 0xFFFFFFFFFFFFFFFF
# splitmix64 increment (golden-ratio gamma).
_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; return (new_state, output)."""
    state = (state + _GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, (z ^ (z >> 31)) & MASK64


def mix64(a: int, b: int) -> int:
    """Deterministically combine two 64-bit values into one."""
    _, out = splitmix64((a ^ ((b * _GAMMA) & MASK64)) & MASK64)
    return out


def derive_seed(base: int, index: int) -> int:
    """Derive the ``index``-th child seed from ``base``.

    splitmix64 finalization is a bijection, so distinct indices always
    yield distinct seeds for a fixed base.
    """
    _, out = splitmix64((base + index * _GAMMA) & MASK64)
    return out


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** generator with splitmix64 seeding.

    ``stream`` selects an independent substream of the same seed; it is
    mixed into the seed before state expansion.
    """

    def __init__(self, seed: int, stream: int = 0):
        state = (seed ^ ((stream * _GAMMA) & MASK64)) & MASK64
        s = []
        for _ in range(4):
            state, out = splitmix64(state)
            s.append(out)
        self._s = s

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform_in(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in the inclusive range [lo, hi]."""
        n = hi - lo + 1
        return lo + min(int(self.uniform() * n), n - 1)

    def normal(self, sigma: float = 1.0) -> float:
        """One Gaussian draw (Box-Muller, fixed two-uniform consumption)."""
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        return sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def choice_index(self, n: int) -> int:
        return self.randint(0, n - 1)
