"""Portable deterministic pseudo-random numbers.

All stochastic behaviour in the pipeline (data splits, cross-validation
folds, bootstrap resampling, per-split feature subsets, synthetic data) is
driven by SplitMix64, Sebastiano Vigna's public-domain mixer with published
reference outputs. The generator is tiny, has a closed-form state advance
(state_k = seed + k * GAMMA mod 2^64), and therefore reproduces identically
across platforms and can be bulk-evaluated with numpy.

Reference outputs for seed 0 (first three values of the canonical C
implementation): 0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F.
These are frozen in the test suite.

Derived draws (``randbelow``, ``shuffle``, ...) reduce 64-bit outputs by
modulo; the bias is at most bound/2^64 and is irrelevant at the bounds used
here. Determinism, not perfect uniformity, is the contract.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB

_U_GAMMA = np.uint64(_GAMMA)
_U_MULT1 = np.uint64(_MULT1)
_U_MULT2 = np.uint64(_MULT2)
_TWO53 = float(1 << 53)


class SplitMix64:
    """SplitMix64 stream seeded with any 64-bit integer."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MULT1) & _MASK
        z = ((z ^ (z >> 27)) * _MULT2) & _MASK
        return z ^ (z >> 31)

    def bulk_u64(self, count: int) -> np.ndarray:
        """Next ``count`` outputs as a uint64 array.

        Bit-identical to calling :meth:`next_u64` ``count`` times; the state
        advance is affine so the whole block vectorizes.
        """
        if count <= 0:
            return np.empty(0, dtype=np.uint64)
        idx = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(self._state) + _U_GAMMA * idx
        self._state = int(z[-1])
        z = (z ^ (z >> np.uint64(30))) * _U_MULT1
        z = (z ^ (z >> np.uint64(27))) * _U_MULT2
        return z ^ (z >> np.uint64(31))

    # -- derived draws ----------------------------------------------------

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) / _TWO53

    def random_array(self, count: int) -> np.ndarray:
        return (self.bulk_u64(count) >> np.uint64(11)).astype(np.float64) / _TWO53

    def randbelow(self, bound: int) -> int:
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % bound

    def randbelow_array(self, bound: int, count: int) -> np.ndarray:
        if bound <= 0:
            raise ValueError("bound must be positive")
        return (self.bulk_u64(count) % np.uint64(bound)).astype(np.int64)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of 0..n-1."""
        out = np.arange(n, dtype=np.int64)
        buf = out.tolist()
        for i in range(n - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            buf[i], buf[j] = buf[j], buf[i]
        return np.asarray(buf, dtype=np.int64)

    def subset(self, n: int, k: int) -> np.ndarray:
        """Sorted k-subset of 0..n-1 via partial Fisher-Yates (k draws)."""
        pool = list(range(n))
        for i in range(k):
            j = i + self.next_u64() % (n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return np.asarray(sorted(pool[:k]), dtype=np.int64)

    def gauss_array(self, count: int, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        """Standard Box-Muller normals; consumes exactly 2*count outputs."""
        u1 = 1.0 - self.random_array(count)  # (0, 1], keeps log finite
        u2 = self.random_array(count)
        r = np.sqrt(-2.0 * np.log(u1))
        return mean + std * r * np.cos(2.0 * np.pi * u2)
