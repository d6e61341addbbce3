"""Deterministic random number generation and state digests.

The generator is SplitMix64: a 64-bit Weyl counter advanced by a fixed odd
constant, with each counter value passed through an avalanche mixer.  The
output stream is a pure function of the seed, independent of platform,
interpreter build, and library versions, which is what makes bit-identical
trajectories and golden-file tests possible.

All distribution sampling (exponential waiting times, uniform indices,
categorical draws, fair-coin binomials, Poisson counts) is built on this
single stream with fixed, documented transformations.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 output mixer (finalizer) applied to a 64-bit value."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Child seed for stream ``index`` of a master seed.

    This is the splittable counter scheme used by ensemble runs: child
    streams are independent SplitMix64 generators whose seeds are mixed
    counter values, so trajectory ``i`` is reproducible in isolation.
    """
    return mix64((master_seed + (index + 1) * _GOLDEN) & _MASK64)


class SplitMix64:
    """Seeded 64-bit generator with the sampling helpers the engine needs."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        return mix64(self.state)

    def uniform(self) -> float:
        """Uniform float in the open interval (0, 1)."""
        return ((self.next_u64() >> 11) + 0.5) * 2.0**-53

    def exponential(self, rate: float) -> float:
        """Exponential waiting time with the given positive rate."""
        return -math.log(self.uniform()) / rate

    def randint_below(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased via rejection."""
        threshold = ((1 << 64) - ((1 << 64) % n)) if n & (n - 1) else 0
        while True:
            x = self.next_u64()
            if threshold == 0 or x < threshold:
                return x % n

    def distinct_pair(self, n: int) -> tuple[int, int]:
        """Uniform unordered pair of distinct indices from [0, n), returned sorted."""
        i = self.randint_below(n)
        j = self.randint_below(n - 1)
        if j >= i:
            j += 1
        return (i, j) if i < j else (j, i)

    def binomial_half(self, n: int) -> int:
        """Binomial(n, 1/2) by popcount of n fair bits."""
        k = 0
        while n >= 64:
            k += self.next_u64().bit_count()
            n -= 64
        if n:
            k += (self.next_u64() & ((1 << n) - 1)).bit_count()
        return k

    def poisson(self, lam: float) -> int:
        """Poisson(lam) by inversion (CDF walk); exact for desk-scale means."""
        if lam <= 0.0:
            return 0
        u = self.uniform()
        k = 0
        p = math.exp(-lam)
        cum = p
        cap = int(lam + 40.0 * math.sqrt(lam) + 100.0)
        while u > cum and k < cap:
            k += 1
            p *= lam / k
            cum += p
        return k

    def categorical(self, probs) -> int:
        """Index sampled proportionally to a sequence of non-negative weights."""
        u = self.uniform() * math.fsum(probs)
        acc = 0.0
        last = 0
        for i, p in enumerate(probs):
            acc += p
            last = i
            if u <= acc:
                return i
        return last


def digest64(compartments) -> int:
    """64-bit FNV-1a digest of an ordered tuple of content vectors.

    The token stream is the compartment count followed by the flattened
    entries (all vectors share the model dimension, so the encoding is
    unambiguous).  Used to pin simulator states in event logs.
    """
    h = 0xCBF29CE484222325
    h = ((h ^ len(compartments)) * 0x100000001B3) & _MASK64
    for comp in compartments:
        for v in comp:
            h = ((h ^ (v & _MASK64)) * 0x100000001B3) & _MASK64
    return h
