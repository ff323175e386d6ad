"""Ground-truth contextual linear regression models and synthetic data.

A contextual linear model partitions a closed interval T of the single
contextual feature x_p into c left-closed right-open intervals via interior
cut points; the last interval is closed at the right endpoint of T. Each
interval (context) owns a linear model beta0_j + beta_j . x_hat on the r
regressor features.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .rng import RandomSource


class OutOfDomainError(ValueError):
    """Contextual feature value outside the model's context domain."""


@dataclass(frozen=True)
class ContextualLinearModel:
    interior_cuts: np.ndarray  # shape (c-1,), strictly increasing
    domain: tuple[float, float]  # context domain T = [t_lo, t_hi]
    coefficients: np.ndarray  # shape (c, r)
    intercepts: np.ndarray  # shape (c,)

    def __post_init__(self):
        cuts = np.asarray(self.interior_cuts, dtype=np.float64)
        coeffs = np.atleast_2d(np.asarray(self.coefficients, dtype=np.float64))
        icepts = np.asarray(self.intercepts, dtype=np.float64)
        object.__setattr__(self, "interior_cuts", cuts)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "intercepts", icepts)
        t_lo, t_hi = self.domain
        if not t_lo < t_hi:
            raise ValueError(f"invalid context domain [{t_lo}, {t_hi}]")
        c = coeffs.shape[0]
        if icepts.shape != (c,):
            raise ValueError("intercepts length must equal number of contexts")
        if cuts.shape != (c - 1,):
            raise ValueError(f"need {c - 1} interior cuts for {c} contexts, got {cuts.shape[0]}")
        if cuts.size and not np.all(np.diff(cuts) > 0):
            raise ValueError("interior cuts must be strictly increasing")
        if cuts.size and not (cuts[0] > t_lo and cuts[-1] < t_hi):
            raise ValueError("interior cuts must lie strictly inside the context domain")
        for arr in (cuts, coeffs, icepts):
            if not np.all(np.isfinite(arr)):
                raise ValueError("model parameters must be finite")

    @property
    def num_contexts(self) -> int:
        return self.coefficients.shape[0]

    @property
    def num_regressors(self) -> int:
        return self.coefficients.shape[1]

    @property
    def cut_points(self) -> np.ndarray:
        """All c+1 cut points: [t_lo, interior cuts..., t_hi]."""
        return np.concatenate(([self.domain[0]], self.interior_cuts, [self.domain[1]]))

    def to_json_dict(self) -> dict:
        return {
            "c": self.num_contexts,
            "r": self.num_regressors,
            "interior_cuts": self.interior_cuts.tolist(),
            "domain": [self.domain[0], self.domain[1]],
            "coefficients": self.coefficients.tolist(),
            "intercepts": self.intercepts.tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ContextualLinearModel":
        model = cls(
            interior_cuts=np.asarray(d["interior_cuts"], dtype=np.float64),
            domain=(float(d["domain"][0]), float(d["domain"][1])),
            coefficients=np.asarray(d["coefficients"], dtype=np.float64),
            intercepts=np.asarray(d["intercepts"], dtype=np.float64),
        )
        if model.num_contexts != int(d["c"]) or model.num_regressors != int(d["r"]):
            raise ValueError("declared c/r do not match coefficient shapes")
        return model

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "ContextualLinearModel":
        with open(path) as f:
            return cls.from_json_dict(json.load(f))


@dataclass(frozen=True)
class RegressorDomain:
    """Compact hyperrectangle S in regressor space: per-axis (lo, hi) bounds."""

    bounds: np.ndarray  # shape (r, 2)

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.bounds, dtype=np.float64))
        object.__setattr__(self, "bounds", b)
        if b.ndim != 2 or b.shape[1] != 2:
            raise ValueError("bounds must have shape (r, 2)")
        if not np.all(np.isfinite(b)):
            raise ValueError("bounds must be finite")
        if not np.all(b[:, 0] < b[:, 1]):
            raise ValueError("each lower bound must be strictly below its upper bound")

    @property
    def num_regressors(self) -> int:
        return self.bounds.shape[0]

    @classmethod
    def cube(cls, r: int, lo: float, hi: float) -> "RegressorDomain":
        return cls(np.tile([lo, hi], (r, 1)))

    def to_json_dict(self) -> dict:
        return {"bounds": self.bounds.tolist()}

    @classmethod
    def from_json_dict(cls, d: dict) -> "RegressorDomain":
        return cls(np.asarray(d["bounds"], dtype=np.float64))


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix (regressors first, x_p last column), responses, split."""

    features: np.ndarray  # shape (n, r+1)
    responses: np.ndarray  # shape (n,)
    train_idx: np.ndarray = field(repr=False)
    val_idx: np.ndarray = field(repr=False)
    test_idx: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.features.shape[0]
        if self.responses.shape != (n,):
            raise ValueError("responses length must match feature rows")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features must be finite")
        parts = np.concatenate([self.train_idx, self.val_idx, self.test_idx])
        if len(np.unique(parts)) != n or parts.shape[0] != n:
            raise ValueError("split sets must be disjoint and cover all rows")

    @property
    def num_rows(self) -> int:
        return self.features.shape[0]

    @property
    def num_regressors(self) -> int:
        return self.features.shape[1] - 1

    def subset(self, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.features[idx], self.responses[idx]

    def to_csv(self, path) -> None:
        r = self.num_regressors
        labels = np.empty(self.num_rows, dtype=object)
        labels[self.train_idx] = "train"
        labels[self.val_idx] = "val"
        labels[self.test_idx] = "test"
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow([f"x{k + 1}" for k in range(r)] + ["xp", "y", "split"])
            for i in range(self.num_rows):
                w.writerow([repr(float(v)) for v in self.features[i]]
                           + [repr(float(self.responses[i])), labels[i]])

    @classmethod
    def from_csv(cls, path) -> "LabeledDataset":
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        header = rows[0]
        if header[-3:] != ["xp", "y", "split"] or len(rows) < 2:
            raise ValueError("malformed dataset CSV: expected header ...,xp,y,split")
        p = len(header) - 2
        feats, ys, labels = [], [], []
        for row in rows[1:]:
            feats.append([float(v) for v in row[:p]])
            ys.append(float(row[p]))
            labels.append(row[p + 1])
        labels = np.asarray(labels)
        return cls(
            features=np.asarray(feats, dtype=np.float64),
            responses=np.asarray(ys, dtype=np.float64),
            train_idx=np.flatnonzero(labels == "train"),
            val_idx=np.flatnonzero(labels == "val"),
            test_idx=np.flatnonzero(labels == "test"),
        )


def context_of(model: ContextualLinearModel, x_p: float) -> int:
    """1-based context index j with z_j <= x_p < z_{j+1} (j = c at x_p = t_hi)."""
    t_lo, t_hi = model.domain
    if not (t_lo <= x_p <= t_hi):
        raise OutOfDomainError(f"x_p={x_p} outside context domain [{t_lo}, {t_hi}]")
    return int(np.searchsorted(model.interior_cuts, x_p, side="right")) + 1


def context_of_batch(model: ContextualLinearModel, x_p: np.ndarray) -> np.ndarray:
    t_lo, t_hi = model.domain
    x_p = np.asarray(x_p, dtype=np.float64)
    if np.any(x_p < t_lo) or np.any(x_p > t_hi):
        raise OutOfDomainError("some x_p outside context domain")
    return np.searchsorted(model.interior_cuts, x_p, side="right") + 1


def evaluate_true(model: ContextualLinearModel, x: np.ndarray) -> float:
    """True regression value beta0_j + beta_j . x_hat at x = (x_hat..., x_p)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.num_regressors + 1,):
        raise ValueError(f"feature vector must have length {model.num_regressors + 1}")
    j = context_of(model, x[-1]) - 1
    return float(model.intercepts[j] + model.coefficients[j] @ x[:-1])


def evaluate_true_batch(model: ContextualLinearModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    js = context_of_batch(model, X[:, -1]) - 1
    return model.intercepts[js] + np.einsum("ij,ij->i", X[:, :-1], model.coefficients[js])


def generate_dataset(
    model: ContextualLinearModel,
    n: int,
    noise_sd: float,
    split_sizes: tuple[int, int, int],
    rng: RandomSource,
) -> LabeledDataset:
    """Synthetic dataset: x_p ~ Uniform(T), regressors ~ N(0,1), Gaussian noise.

    Draw order (fixed for reproducibility): n values of x_p, then each
    regressor column in turn (n draws each), then n noise values. Rows are
    i.i.d., so the split is contiguous by position: first n_train rows train,
    next n_val validation, remainder test.
    """
    n_train, n_val, n_test = split_sizes
    if n_train + n_val + n_test != n:
        raise ValueError(f"split sizes {split_sizes} do not sum to n={n}")
    if noise_sd < 0:
        raise ValueError("noise_sd must be nonnegative")
    r = model.num_regressors
    t_lo, t_hi = model.domain
    xp = rng.uniform(t_lo, t_hi, n)
    X = np.empty((n, r + 1))
    for k in range(r):
        X[:, k] = rng.standard_normal(n)
    X[:, r] = xp
    y = evaluate_true_batch(model, X)
    if noise_sd > 0:
        y = y + noise_sd * rng.standard_normal(n)
    return LabeledDataset(
        features=X,
        responses=y,
        train_idx=np.arange(n_train),
        val_idx=np.arange(n_train, n_train + n_val),
        test_idx=np.arange(n_train + n_val, n),
    )


def sample_random_model(
    c: int,
    r: int,
    interior_cuts,
    domain: tuple[float, float],
    rng: RandomSource,
    sample_intercepts: bool = True,
) -> ContextualLinearModel:
    """Random model: coefficients (and, by default, intercepts) i.i.d. N(0,1).

    Draw order: c*r coefficients context-major, then c intercepts.
    """
    coeffs = rng.standard_normal(c * r).reshape(c, r)
    icepts = rng.standard_normal(c) if sample_intercepts else np.zeros(c)
    return ContextualLinearModel(
        interior_cuts=np.asarray(interior_cuts, dtype=np.float64),
        domain=(float(domain[0]), float(domain[1])),
        coefficients=coeffs,
        intercepts=icepts,
    )
