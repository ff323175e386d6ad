"""Parameter containers and forward passes for SCtxtNN and feed-forward nets.

SCtxtNN wiring: the contextual subnetwork sees only the last feature x_p and
emits 2c gate values (heaviside in EXACT mode, logistic in SMOOTH mode). Each
gate value is injected into its matching hidden ReLU unit of the regression
subnetwork through a diagonal weight, and a single linear unit reads out the
2c hidden activations.

Canonical flat parameter order (used by the optimizer and by serialization):

* SCtxtNN: ctx_weights (2c), ctx_biases (2c), gate_injection (2c),
  hidden_weights row-major (r x 2c), hidden_biases (2c), out_weights (2c),
  out_bias (1).
* Feed-forward: per layer in order, weight matrix row-major
  (fan_in x fan_out) then bias vector.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import relu, heaviside, sigmoid
from .rng import RandomSource


@dataclass(frozen=True)
class GateMode:
    """EXACT (heaviside gates) or SMOOTH (logistic gates with a steepness)."""

    kind: str
    steepness: float = 1.0

    def __post_init__(self):
        if self.kind not in ("exact", "smooth"):
            raise ValueError(f"unknown gate mode {self.kind!r}")
        if self.kind == "smooth" and self.steepness <= 0:
            raise ValueError("steepness must be positive in smooth mode")

    @classmethod
    def exact(cls) -> "GateMode":
        return cls("exact")

    @classmethod
    def smooth(cls, steepness: float = 1.0) -> "GateMode":
        return cls("smooth", steepness)


@dataclass(frozen=True)
class SCtxtNNSpec:
    num_contexts: int
    num_regressors: int
    steepness: float = 1.0


@dataclass(frozen=True)
class FeedForwardSpec:
    layer_sizes: tuple[int, ...]


@dataclass(frozen=True)
class SCtxtNNParams:
    ctx_weights: np.ndarray  # (2c,)
    ctx_biases: np.ndarray  # (2c,)
    gate_injection: np.ndarray  # (2c,) diagonal coupling
    hidden_weights: np.ndarray  # (r, 2c)
    hidden_biases: np.ndarray  # (2c,)
    out_weights: np.ndarray  # (2c,)
    out_bias: float

    def __post_init__(self):
        m = self.ctx_weights.shape[0]
        if m % 2 != 0 or m == 0:
            raise ValueError("number of gated units must be a positive even number (2c)")
        for name in ("ctx_biases", "gate_injection", "hidden_biases", "out_weights"):
            if getattr(self, name).shape != (m,):
                raise ValueError(f"{name} must have shape ({m},)")
        if self.hidden_weights.ndim != 2 or self.hidden_weights.shape[1] != m:
            raise ValueError(f"hidden_weights must have shape (r, {m})")
        for name in ("ctx_weights", "ctx_biases", "gate_injection",
                     "hidden_weights", "hidden_biases", "out_weights"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} must be finite")
        if not math.isfinite(self.out_bias):
            raise ValueError("out_bias must be finite")

    @property
    def num_contexts(self) -> int:
        return self.ctx_weights.shape[0] // 2

    @property
    def num_regressors(self) -> int:
        return self.hidden_weights.shape[0]

    def to_flat(self) -> np.ndarray:
        return np.concatenate([
            self.ctx_weights, self.ctx_biases, self.gate_injection,
            self.hidden_weights.ravel(), self.hidden_biases,
            self.out_weights, [self.out_bias],
        ])

    @classmethod
    def from_flat(cls, c: int, r: int, theta: np.ndarray) -> "SCtxtNNParams":
        m = 2 * c
        expected = 10 * c + 2 * c * r + 1
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (expected,):
            raise ValueError(f"expected {expected} parameters, got {theta.shape}")
        o = 0

        def take(k):
            nonlocal o
            chunk = theta[o:o + k].copy()
            o += k
            return chunk

        return cls(
            ctx_weights=take(m),
            ctx_biases=take(m),
            gate_injection=take(m),
            hidden_weights=take(r * m).reshape(r, m),
            hidden_biases=take(m),
            out_weights=take(m),
            out_bias=float(take(1)[0]),
        )

    def to_json_dict(self) -> dict:
        return {
            "type": "sctxtnn",
            "c": self.num_contexts,
            "r": self.num_regressors,
            "theta": self.to_flat().tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SCtxtNNParams":
        if d.get("type") != "sctxtnn":
            raise ValueError(f"expected type 'sctxtnn', got {d.get('type')!r}")
        return cls.from_flat(int(d["c"]), int(d["r"]), np.asarray(d["theta"], dtype=np.float64))


@dataclass(frozen=True)
class FeedForwardParams:
    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]  # weights[l] has shape (sizes[l], sizes[l+1])
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        sizes = self.layer_sizes
        if len(sizes) < 2 or sizes[-1] != 1 or any(s < 1 for s in sizes):
            raise ValueError("layer_sizes must be [p, h_1, ..., h_L, 1] with positive widths")
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ValueError("need one weight matrix and bias vector per layer")
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (sizes[l], sizes[l + 1]) or b.shape != (sizes[l + 1],):
                raise ValueError(f"layer {l} shapes inconsistent with layer_sizes")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise ValueError("parameters must be finite")

    def to_flat(self) -> np.ndarray:
        parts = []
        for W, b in zip(self.weights, self.biases):
            parts.append(W.ravel())
            parts.append(b)
        return np.concatenate(parts)

    @classmethod
    def from_flat(cls, layer_sizes, theta: np.ndarray) -> "FeedForwardParams":
        sizes = tuple(int(s) for s in layer_sizes)
        theta = np.asarray(theta, dtype=np.float64)
        weights, biases, o = [], [], 0
        for l in range(len(sizes) - 1):
            m_in, m_out = sizes[l], sizes[l + 1]
            weights.append(theta[o:o + m_in * m_out].reshape(m_in, m_out).copy())
            o += m_in * m_out
            biases.append(theta[o:o + m_out].copy())
            o += m_out
        if o != theta.shape[0]:
            raise ValueError(f"expected {o} parameters, got {theta.shape[0]}")
        return cls(layer_sizes=sizes, weights=tuple(weights), biases=tuple(biases))

    def to_json_dict(self) -> dict:
        return {
            "type": "ff",
            "layer_sizes": list(self.layer_sizes),
            "theta": self.to_flat().tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FeedForwardParams":
        if d.get("type") != "ff":
            raise ValueError(f"expected type 'ff', got {d.get('type')!r}")
        return cls.from_flat(d["layer_sizes"], np.asarray(d["theta"], dtype=np.float64))


def params_from_json_dict(d: dict):
    kind = d.get("type")
    if kind == "sctxtnn":
        return SCtxtNNParams.from_json_dict(d)
    if kind == "ff":
        return FeedForwardParams.from_json_dict(d)
    raise ValueError(f"unknown params type {kind!r}")


def save_params(params, path) -> None:
    with open(path, "w") as f:
        json.dump(params.to_json_dict(), f)
        f.write("\n")


def load_params(path):
    with open(path) as f:
        return params_from_json_dict(json.load(f))


def param_count(params) -> int:
    """Exact scalar parameter count of either architecture."""
    if isinstance(params, SCtxtNNParams):
        c, r = params.num_contexts, params.num_regressors
        return 10 * c + 2 * c * r + 1
    if isinstance(params, FeedForwardParams):
        sizes = params.layer_sizes
        return sum((sizes[l] + 1) * sizes[l + 1] for l in range(len(sizes) - 1))
    raise TypeError(f"unsupported params type {type(params)!r}")


def forward_sctxtnn_batch(params: SCtxtNNParams, mode: GateMode, X: np.ndarray):
    """Batch forward pass. X has shape (n, r+1) with x_p in the last column.

    Returns (outputs (n,), gates (n, 2c), hidden (n, 2c), pre (n, 2c)) where
    pre is the hidden pre-activation including the gate injection.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    r = params.num_regressors
    if X.shape[1] != r + 1:
        raise ValueError(f"expected {r + 1} features, got {X.shape[1]}")
    xp = X[:, r]
    z = xp[:, None] * params.ctx_weights[None, :] + params.ctx_biases[None, :]
    if mode.kind == "exact":
        gates = heaviside(z)
    else:
        gates = sigmoid(z, mode.steepness)
    pre = X[:, :r] @ params.hidden_weights + params.hidden_biases[None, :] \
        + gates * params.gate_injection[None, :]
    hidden = relu(pre)
    out = hidden @ params.out_weights + params.out_bias
    return out, gates, hidden, pre


def forward_sctxtnn(params: SCtxtNNParams, mode: GateMode, x: np.ndarray):
    """Single-input forward pass; returns (output, trace) with gate and
    hidden activations for diagnostics."""
    out, gates, hidden, _ = forward_sctxtnn_batch(params, mode, np.asarray(x)[None, :])
    return float(out[0]), {"gates": gates[0], "hidden": hidden[0]}


def forward_feedforward_batch(params: FeedForwardParams, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != params.layer_sizes[0]:
        raise ValueError(f"expected {params.layer_sizes[0]} features, got {X.shape[1]}")
    a = X
    last = len(params.weights) - 1
    for l, (W, b) in enumerate(zip(params.weights, params.biases)):
        a = a @ W + b
        if l != last:
            a = relu(a)
    return a[:, 0]


def forward_feedforward(params: FeedForwardParams, x: np.ndarray) -> float:
    return float(forward_feedforward_batch(params, np.asarray(x)[None, :])[0])


def _uniform_fan(rng: RandomSource, fan_in: int, fan_out: int, n: int) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, n)


def init_random(spec, rng: RandomSource):
    """Random initialization: weights uniform on +/- sqrt(6/(fan_in+fan_out))
    per layer, biases zero. SCtxtNN departures: gate injections start at -1,
    and the contextual biases follow the same uniform rule as the weights so
    the gates begin with spread-out thresholds.

    Draw order for SCtxtNN: ctx_weights, ctx_biases, hidden_weights,
    out_weights.
    """
    if isinstance(spec, SCtxtNNSpec):
        c, r = spec.num_contexts, spec.num_regressors
        m = 2 * c
        return SCtxtNNParams(
            ctx_weights=_uniform_fan(rng, 1, m, m),
            ctx_biases=_uniform_fan(rng, 1, m, m),
            gate_injection=np.full(m, -1.0),
            hidden_weights=_uniform_fan(rng, r, m, r * m).reshape(r, m),
            hidden_biases=np.zeros(m),
            out_weights=_uniform_fan(rng, m, 1, m),
            out_bias=0.0,
        )
    if isinstance(spec, FeedForwardSpec):
        sizes = spec.layer_sizes
        weights, biases = [], []
        for l in range(len(sizes) - 1):
            m_in, m_out = sizes[l], sizes[l + 1]
            weights.append(_uniform_fan(rng, m_in, m_out, m_in * m_out).reshape(m_in, m_out))
            biases.append(np.zeros(m_out))
        return FeedForwardParams(layer_sizes=tuple(sizes), weights=tuple(weights), biases=tuple(biases))
    raise TypeError(f"unsupported architecture spec {type(spec)!r}")
