"""Deterministic random streams built on the SplitMix64 generator.

SplitMix64 (Steele, Lea & Flood's SplittableRandom; Vigna's reference
implementation) is a 64-bit generator whose whole state is one counter,
which makes derived substreams cheap: hashing (seed, pulse index, stage)
through the same finalizer yields an independent stream per pulse and
stage. The scalar `RngStream` and the vectorized helpers below walk the
exact same integer sequence, so array-based simulation reproduces
draw-by-draw what a Python loop over streams would produce.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# 53-bit mantissa scaling for uniforms in [0, 1)
_INV_2_53 = 1.0 / (1 << 53)

GENERATOR_NAME = "splitmix64"


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Derive a substream seed as a stable hash of (seed, *keys).

    Used for per-pulse, per-stage substreams and for sweep-point seeds.
    The derivation is pure integer arithmetic and never changes between
    runs or platforms.
    """
    h = seed & _MASK
    for key in keys:
        h = _mix(((h ^ (key & _MASK)) + _GOLDEN) & _MASK)
    return _mix((h + _GOLDEN) & _MASK)


class RngStream:
    """SplitMix64 stream with a 64-bit seed.

    Supports uniform reals in [0, 1) and bounded integer draws. Equal
    seeds give equal draw sequences.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK

    def next_raw(self) -> int:
        """Next raw 64-bit output."""
        self._state = (self._state + _GOLDEN) & _MASK
        return _mix(self._state)

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53-bit resolution."""
        return (self.next_raw() >> 11) * _INV_2_53

    def integers(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        return min(int(self.uniform() * n), n - 1)


def substream(seed: int, *keys: int) -> RngStream:
    """Stream seeded by `derive_seed(seed, *keys)`."""
    return RngStream(derive_seed(seed, *keys))


# -- vectorized counterparts (numpy uint64, wraparound arithmetic) ----------

_U_GOLDEN = np.uint64(_GOLDEN)
_U_MIX1 = np.uint64(_MIX1)
_U_MIX2 = np.uint64(_MIX2)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _U_MIX1
    z = (z ^ (z >> np.uint64(27))) * _U_MIX2
    return z ^ (z >> np.uint64(31))


def derive_seed_array(seed: int, indices: np.ndarray, *keys: int) -> np.ndarray:
    """Vectorized `derive_seed(seed, i, *keys)` over an index array."""
    h = np.full(indices.shape, seed & _MASK, dtype=np.uint64)
    for key_values in (indices.astype(np.uint64),) + tuple(
        np.uint64(k & _MASK) for k in keys
    ):
        h = _mix_array((h ^ key_values) + _U_GOLDEN)
    return _mix_array(h + _U_GOLDEN)


def uniform_array(seeds: np.ndarray, draw_index: int) -> np.ndarray:
    """The `draw_index`-th uniform of each stream in `seeds`, as float64."""
    counter = seeds + np.uint64(((draw_index + 1) * _GOLDEN) & _MASK)
    raw = _mix_array(counter)
    return (raw >> np.uint64(11)).astype(np.float64) * _INV_2_53
