"""Scalar activation functions shared by the network code.

All functions accept scalars or numpy arrays and operate elementwise in
64-bit floating point.
"""

from __future__ import annotations

import numpy as np


def relu(z):
    """max(0, z)."""
    return np.maximum(0.0, z)


def heaviside(z):
    """Indicator of the strictly positive reals: 1 if z > 0 else 0."""
    return np.where(np.asarray(z) > 0.0, 1.0, 0.0)[()]


def sigmoid(z, steepness: float = 1.0):
    """Logistic gate 1 / (1 + exp(-steepness * z)), numerically stable.

    As steepness grows this approaches heaviside(z) pointwise for z != 0.
    """
    if steepness <= 0.0:
        raise ValueError(f"steepness must be positive, got {steepness}")
    t = steepness * np.asarray(z, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    et = np.exp(t[~pos])
    out[~pos] = et / (1.0 + et)
    return out[()]
