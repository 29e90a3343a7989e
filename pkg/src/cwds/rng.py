"""Deterministic counter-based random sampling.

Every output is a pure function of ``(seed, index)``: the 64-bit state is
``seed + (index + 1) * 0x9E3779B97F4A7C15`` pushed through the splitmix64
finalizer.  Uniform deviates take the top 53 bits of the mixed word, and
normal deviates pair two uniforms through the Box-Muller transform.  The same
``(seed, count)`` therefore reproduces the same stream bit for bit on any
platform or numpy version, which keeps simulated data and regression files
stable.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(state: np.ndarray) -> np.ndarray:
    z = state.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _MIX_1
    z ^= z >> np.uint64(27)
    z *= _MIX_2
    z ^= z >> np.uint64(31)
    return z


def random_uniform(count: int, seed: int, start: int = 0) -> np.ndarray:
    """``count`` uniforms in [0, 1) drawn at counter positions ``start...``."""
    if count < 0:
        raise ValueError("count must be non-negative")
    index = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    mixed = _splitmix64(np.uint64(seed % 2**64) + index * _GOLDEN)
    return (mixed >> np.uint64(11)).astype(np.float64) * 2.0**-53


def standard_normal(count: int, seed: int) -> np.ndarray:
    """``count`` independent N(0, 1) deviates for the given seed."""
    if count < 0:
        raise ValueError("count must be non-negative")
    pairs = (count + 1) // 2
    u1 = 1.0 - random_uniform(pairs, seed, start=0)  # in (0, 1], safe to log
    u2 = random_uniform(pairs, seed, start=pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = (2.0 * np.pi) * u2
    out = np.empty(2 * pairs, dtype=np.float64)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:count]
