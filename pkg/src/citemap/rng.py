"""Seedable, portable random number generation.

All randomness in the clustering engine flows through SplitMix64, a tiny
64-bit mixing generator with well-defined overflow semantics.  Identical
seeds therefore replay identical runs on any platform, independent of
numpy's generator versioning.
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF


class SplitMix64:
    """SplitMix64 stream; state is a 1-element uint64 array shareable with
    compiled kernels."""

    def __init__(self, seed: int):
        self.state = np.array([seed & MASK64], dtype=np.uint64)

    def next_u64(self) -> int:
        s = (int(self.state[0]) + 0x9E3779B97F4A7C15) & MASK64
        self.state[0] = s
        z = s
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return (z ^ (z >> 31)) & MASK64

    def uniform(self) -> float:
        """Uniform float in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0**-53

    def randint(self, bound: int) -> int:
        """Integer in [0, bound). Modulo reduction; bias is negligible for
        the bounds used here (< 2**32)."""
        return self.next_u64() % bound

    def shuffle(self, values: np.ndarray) -> None:
        """In-place Fisher-Yates shuffle."""
        n = len(values)
        for i in range(n - 1, 0, -1):
            j = self.randint(i + 1)
            values[i], values[j] = values[j], values[i]
