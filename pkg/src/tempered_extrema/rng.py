"""Counter-based, splittable random streams.

A :class:`RandomStream` is identified by ``(master_seed, substream_key)``;
the pair is used as the 128-bit Philox key, so deriving a substream costs a
hash and replaying a stream only requires its identity.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

__all__ = ["RandomStream", "derive_substream", "uniform01", "open_uniform", "splitmix64"]

_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0**-53
_ONE_M_TWO_M52 = 1.0 - 2.0**-52


def splitmix64(x: int) -> int:
    """One round of the splitmix64 finalizer on a 64-bit integer."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def open_uniform(u: np.ndarray) -> np.ndarray:
    """Map half-open ``[0, 1)`` variates into the open interval ``(0, 1)``."""
    return (u + _TWO_M53) * _ONE_M_TWO_M52


class RandomStream:
    """Deterministic uniform stream keyed by ``(master_seed, substream_key)``.

    ``counter`` counts the doubles consumed so far.  Two streams with the
    same identity produce bit-identical sequences.
    """

    __slots__ = ("master_seed", "substream_key", "counter", "_gen")

    def __init__(self, master_seed: int, substream_key: int = 0):
        self.master_seed = int(master_seed) & _MASK64
        self.substream_key = int(substream_key) & _MASK64
        self.counter = 0
        key = np.array([self.master_seed, self.substream_key], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self) -> str:
        return (
            f"RandomStream(master_seed={self.master_seed}, "
            f"substream_key={self.substream_key}, counter={self.counter})"
        )

    def uniform(self, size=None) -> np.ndarray | float:
        """Uniform variates on ``[0, 1)``."""
        out = self._gen.random(size)
        self.counter += 1 if size is None else int(np.prod(size))
        return out

    def uniform_open(self, size=None) -> np.ndarray | float:
        """Uniform variates on ``(0, 1)``; one underlying draw per variate."""
        return open_uniform(self.uniform(size))

    def normal(self, size=None) -> np.ndarray | float:
        """Standard normals by inverse CDF, one uniform each."""
        return ndtri(self.uniform_open(size))

    def derive(self, key: int) -> "RandomStream":
        return derive_substream(self, key)


def derive_substream(stream: RandomStream, key: int) -> RandomStream:
    """Child stream for ``key``; depends only on the parent's identity."""
    mixed = splitmix64(splitmix64(stream.substream_key) ^ (int(key) & _MASK64))
    return RandomStream(stream.master_seed, mixed)


def uniform01(stream: RandomStream) -> float:
    """Next variate on ``[0, 1)`` from ``stream``."""
    return float(stream.uniform())
