"""Deterministic counter-based random number generation.

The generator is SplitMix64 used in counter mode: output k of a stream with
seed s is ``mix64(s + (k + 1) * GOLDEN_GAMMA)`` where ``mix64`` is the
Stafford variant-13 finalizer. All constants are fixed 64-bit values, so any
implementation in any language reproduces the same stream from the same seed.

Sub-streams are derived from a parent seed and a text label:
``child_seed = mix64(parent_seed XOR mix64(fnv1a64(label)))``. Labels give
each simulation and each model initialization its own independent stream.

Uniform doubles in [0, 1) take the top 53 bits of an output word. Standard
normals use Box-Muller on uniform pairs: for a request of n normals, draw
one block of 2*ceil(n/2) uniforms, split it into first/second halves (u1, u2),
form r = sqrt(-2 ln(1 - u1)) and angle 2*pi*u2, and interleave
(r cos, r sin) per pair, truncating to n.
"""

from __future__ import annotations

import numpy as np

_U64 = np.uint64
_MASK64 = (1 << 64) - 1

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX_MUL_1 = 0xBF58476D1CE4E5B9
_MIX_MUL_2 = 0x94D049BB133111EB

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x00000100000001B3

_INV_2_53 = 1.0 / (1 << 53)


def mix64(z: np.ndarray | int) -> np.ndarray | int:
    """Stafford variant-13 finalizer on uint64 words (arrays or scalars)."""
    z = np.asarray(z, dtype=_U64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U64(30))) * _U64(_MIX_MUL_1)
        z = (z ^ (z >> _U64(27))) * _U64(_MIX_MUL_2)
        z = z ^ (z >> _U64(31))
    return z


def fnv1a64(label: str) -> int:
    """FNV-1a 64-bit hash of the label's UTF-8 bytes."""
    h = _FNV_OFFSET
    for byte in label.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


class RandomSource:
    """Single-owner deterministic random stream.

    A stream is fully determined by its 64-bit seed and the sequence of
    calls made on it. ``derive`` creates an independent child stream from
    a label without disturbing the parent's state.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._counter = 0

    def clone(self) -> "RandomSource":
        """Fresh stream with the same seed, counter reset to zero."""
        return RandomSource(self.seed)

    def derive(self, label: str) -> "RandomSource":
        child = int(mix64(_U64(self.seed ^ int(mix64(_U64(fnv1a64(label)))))))
        return RandomSource(child)

    def _next_words(self, n: int) -> np.ndarray:
        ks = np.arange(self._counter + 1, self._counter + n + 1, dtype=_U64)
        self._counter += n
        with np.errstate(over="ignore"):
            states = _U64(self.seed) + ks * _U64(GOLDEN_GAMMA)
        return mix64(states)

    def uniform01(self, n: int) -> np.ndarray:
        """n i.i.d. draws from Uniform[0, 1)."""
        if n < 1:
            raise ValueError(f"need n >= 1, got {n}")
        words = self._next_words(n)
        return (words >> _U64(11)).astype(np.float64) * _INV_2_53

    def uniform(self, lo: float, hi: float, n: int) -> np.ndarray:
        """n i.i.d. draws from Uniform[lo, hi)."""
        if not lo < hi:
            raise ValueError(f"invalid range: lo={lo} must be < hi={hi}")
        return lo + (hi - lo) * self.uniform01(n)

    def standard_normal(self, n: int) -> np.ndarray:
        """n i.i.d. draws from N(0, 1) via Box-Muller (see module docstring)."""
        if n < 1:
            raise ValueError(f"need n >= 1, got {n}")
        m = (n + 1) // 2
        u = self.uniform01(2 * m)
        u1, u2 = u[:m], u[m:]
        radius = np.sqrt(-2.0 * np.log1p(-u1))
        angle = 2.0 * np.pi * u2
        out = np.empty(2 * m)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:n]
