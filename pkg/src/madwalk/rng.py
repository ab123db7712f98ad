"""Counter-based hashing RNG primitives.

Every stochastic object in this package that must be shareable across
processes or replayable (tree arities, exponential clocks) is a pure
function of a 64-bit seed and a logical address, realised through a
splitmix64-style mixer.  Ordinary Monte Carlo streams use numpy
generators seeded through :func:`child_seed`.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

# 2**-53, so that 53-bit mantissas map to [0, 1)
_INV53 = 1.0 / (1 << 53)


def mix64(x: int) -> int:
    """One splitmix64 finalisation round."""
    x = (x + _GAMMA) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def mix(*words: int) -> int:
    """Fold any number of integer words into one well-mixed 64-bit hash."""
    h = 0x8C2F9D1B4E6A7355
    for w in words:
        h = mix64(h ^ (w & _MASK64))
    return h


def unit_from_hash(h: int) -> float:
    """Map a 64-bit hash to a uniform float in [0, 1)."""
    return (h >> 11) * _INV53


def exp_from_hash(h: int) -> float:
    """Map a 64-bit hash to a strictly positive mean-1 exponential variate."""
    # offset keeps the uniform in (0, 1), hence the variate in (0, inf)
    u = ((h >> 11) + 0.5) * _INV53
    return -math.log(u)


def child_seed(master: int, *index: int) -> int:
    """Derive an independent stream seed from a master seed and indices."""
    return mix(master, *index)


def generator(master: int, *index: int) -> np.random.Generator:
    """numpy generator for the (master, index) stream."""
    return np.random.default_rng(child_seed(master, *index))


class UniformStream:
    """Buffered stream of uniforms in [0, 1) drawn from a numpy generator.

    Cheaper than per-call ``rng.random()`` inside tight python loops.
    """

    __slots__ = ("_rng", "_buf", "_pos", "_size")

    def __init__(self, master: int, *index: int, block: int = 8192):
        self._rng = generator(master, *index)
        self._size = block
        self._buf = self._rng.random(block)
        self._pos = 0

    def next(self) -> float:
        pos = self._pos
        if pos == self._size:
            self._buf = self._rng.random(self._size)
            pos = 0
        self._pos = pos + 1
        return self._buf[pos]
