"""MSE loss, analytic gradients, Adam, and the full-batch training loop.

Training is full batch: one Adam update per epoch from the gradient over the
entire training set, so epochs and optimizer steps coincide. Train and
validation MSE are recorded every epoch on the pre-update parameters. The
ReLU subgradient at exactly zero is taken to be zero.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from . import backends
from .model import LabeledDataset
from .networks import (
    FeedForwardParams,
    FeedForwardSpec,
    GateMode,
    SCtxtNNParams,
    SCtxtNNSpec,
    init_random,
)
from .rng import RandomSource

DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.999
DEFAULT_EPSILON = 1e-8


class ExactModeUntrainableError(ValueError):
    """Heaviside gates have no usable gradient; train in SMOOTH mode."""


class NonFiniteLossError(RuntimeError):
    """Training loss went NaN/Inf; carries the 0-based epoch index."""

    def __init__(self, epoch: int):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch


@dataclass
class AdamState:
    learning_rate: float
    beta1: float
    beta2: float
    epsilon: float
    step_count: int
    first_moment: np.ndarray
    second_moment: np.ndarray

    @classmethod
    def fresh(cls, dim: int, learning_rate: float = DEFAULT_LEARNING_RATE,
              beta1: float = DEFAULT_BETA1, beta2: float = DEFAULT_BETA2,
              epsilon: float = DEFAULT_EPSILON) -> "AdamState":
        return cls(learning_rate, beta1, beta2, epsilon, 0, np.zeros(dim), np.zeros(dim))


@dataclass(frozen=True)
class TrainingRecord:
    train_mse: np.ndarray  # (epochs,)
    val_mse: np.ndarray  # (epochs,)
    params: SCtxtNNParams | FeedForwardParams
    wall_time: float

    def curves_to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["epoch", "train_mse", "val_mse"])
            for e, (tr, va) in enumerate(zip(self.train_mse, self.val_mse), start=1):
                w.writerow([e, repr(float(tr)), repr(float(va))])


def mse(predictions: np.ndarray, targets: np.ndarray) -> float:
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape or predictions.ndim != 1 or predictions.size == 0:
        raise ValueError("predictions and targets must be equal-length nonempty vectors")
    resid = predictions - targets
    return float(resid @ resid) / predictions.size


def gradient(params, X: np.ndarray, y: np.ndarray,
             mode: GateMode | None = None) -> tuple[np.ndarray, float]:
    """Analytic gradient of batch MSE in canonical flat order.

    Returns (grad, mse). For SCtxtNN a SMOOTH mode is required.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if isinstance(params, SCtxtNNParams):
        if mode is None or mode.kind != "smooth":
            raise ExactModeUntrainableError(
                "SCtxtNN gradients require SMOOTH gate mode")
        grad, loss = backends.sctxtnn_grad(
            params.to_flat(), params.num_contexts, params.num_regressors,
            mode.steepness, X, y)
        return grad, loss
    if isinstance(params, FeedForwardParams):
        sizes = np.asarray(params.layer_sizes, dtype=np.int64)
        grad, loss = backends.ff_grad(params.to_flat(), sizes, X, y)
        return grad, loss
    raise TypeError(f"unsupported params type {type(params)!r}")


def adam_step(state: AdamState, theta: np.ndarray, grad: np.ndarray
              ) -> tuple[np.ndarray, AdamState]:
    """One Adam update with bias correction; returns new (theta, state)."""
    if theta.shape != grad.shape or theta.shape != state.first_moment.shape:
        raise ValueError("theta, grad and moment vectors must share one shape")
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    new_theta = theta - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    new_state = AdamState(state.learning_rate, state.beta1, state.beta2,
                          state.epsilon, t, m, v)
    return new_theta, new_state


def train(
    spec: SCtxtNNSpec | FeedForwardSpec,
    dataset: LabeledDataset,
    epochs: int,
    *,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    beta1: float = DEFAULT_BETA1,
    beta2: float = DEFAULT_BETA2,
    epsilon: float = DEFAULT_EPSILON,
    rng: RandomSource | None = None,
    init_params: SCtxtNNParams | FeedForwardParams | None = None,
) -> TrainingRecord:
    """Train a freshly initialized (or given) network with full-batch Adam.

    Raises NonFiniteLossError if the loss leaves the reals; the experiment
    driver turns that into an invalid simulation record.
    """
    if epochs < 0:
        raise ValueError("epochs must be nonnegative")
    if init_params is None:
        if rng is None:
            raise ValueError("provide either rng or init_params")
        init_params = init_random(spec, rng)
    Xtr, ytr = dataset.subset(dataset.train_idx)
    Xva, yva = dataset.subset(dataset.val_idx)
    if ytr.size == 0 or yva.size == 0:
        raise ValueError("train and validation splits must be nonempty")

    theta = init_params.to_flat()
    start = time.perf_counter()
    if epochs == 0:
        record = TrainingRecord(np.zeros(0), np.zeros(0), init_params,
                                time.perf_counter() - start)
        return record
    if isinstance(spec, SCtxtNNSpec):
        tr, va, fail = backends.sctxtnn_train(
            theta, spec.num_contexts, spec.num_regressors, spec.steepness,
            Xtr, ytr, Xva, yva, epochs, learning_rate, beta1, beta2, epsilon)
        final = SCtxtNNParams.from_flat(spec.num_contexts, spec.num_regressors, theta)
    elif isinstance(spec, FeedForwardSpec):
        sizes = np.asarray(spec.layer_sizes, dtype=np.int64)
        tr, va, fail = backends.ff_train(
            theta, sizes, Xtr, ytr, Xva, yva, epochs,
            learning_rate, beta1, beta2, epsilon)
        final = FeedForwardParams.from_flat(spec.layer_sizes, theta)
    else:
        raise TypeError(f"unsupported architecture spec {type(spec)!r}")
    elapsed = time.perf_counter() - start
    if fail >= 0:
        raise NonFiniteLossError(fail)
    return TrainingRecord(tr, va, final, elapsed)
