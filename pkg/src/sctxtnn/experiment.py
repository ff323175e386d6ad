"""Simulation study driver: data generation, training of a model roster on
identical splits, excess-MSE computation, and aggregation over simulations.

Each simulation derives its own random stream from (master seed, sim index),
samples a fresh ground-truth model and dataset, trains every roster model on
the same train/validation split, and evaluates test MSE on the same test
rows. Excess MSE is test MSE minus the noise variance, so zero is the
optimal achievable error.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .construction import construct_exact
from .model import (
    ContextualLinearModel,
    LabeledDataset,
    RegressorDomain,
    generate_dataset,
    sample_random_model,
)
from .networks import (
    FeedForwardSpec,
    GateMode,
    SCtxtNNParams,
    SCtxtNNSpec,
    forward_feedforward_batch,
    forward_sctxtnn_batch,
)
from .rng import RandomSource
from .training import NonFiniteLossError, TrainingRecord, train

DEFAULT_SEED = 58


def excess_mse(test_mse: float, noise_sd: float) -> float:
    """Test MSE minus the noise variance (may be slightly negative)."""
    return test_mse - noise_sd ** 2


@dataclass(frozen=True)
class RosterModel:
    """One architecture entry in the study roster."""

    name: str
    kind: str  # "sctxtnn" | "ff"
    num_contexts: int | None = None
    steepness: float = 1.0
    layer_sizes: tuple[int, ...] | None = None
    from_construction: bool = False  # use the exact construction, skip training

    def __post_init__(self):
        if self.kind == "sctxtnn":
            if not self.num_contexts or self.num_contexts < 1:
                raise ValueError(f"roster model {self.name!r} needs num_contexts")
        elif self.kind == "ff":
            if not self.layer_sizes:
                raise ValueError(f"roster model {self.name!r} needs layer_sizes")
            if self.from_construction:
                raise ValueError("only sctxtnn entries can come from the construction")
        else:
            raise ValueError(f"unknown roster model kind {self.kind!r}")

    def spec(self, num_regressors: int):
        if self.kind == "sctxtnn":
            return SCtxtNNSpec(self.num_contexts, num_regressors, self.steepness)
        return FeedForwardSpec(tuple(self.layer_sizes))

    def to_json_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind}
        if self.kind == "sctxtnn":
            d["num_contexts"] = self.num_contexts
            d["steepness"] = self.steepness
            d["from_construction"] = self.from_construction
        else:
            d["layer_sizes"] = list(self.layer_sizes)
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "RosterModel":
        return cls(
            name=d["name"],
            kind=d["kind"],
            num_contexts=d.get("num_contexts"),
            steepness=float(d.get("steepness", 1.0)),
            layer_sizes=tuple(d["layer_sizes"]) if d.get("layer_sizes") else None,
            from_construction=bool(d.get("from_construction", False)),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    num_simulations: int = 50
    n_total: int = 6000
    n_train: int = 1500
    n_val: int = 1500
    n_test: int = 3000
    epochs: int = 20000
    learning_rate: float = 0.001
    noise_sd: float = 0.01
    data_num_contexts: int = 3
    data_num_regressors: int = 1
    data_interior_cuts: tuple[float, ...] = (-1.0 / 3.0, 1.0 / 3.0)
    data_domain: tuple[float, float] = (-1.0, 1.0)
    data_sample_intercepts: bool = True
    seed: int = DEFAULT_SEED
    roster: tuple[RosterModel, ...] = (
        RosterModel(name="SCtxtNN", kind="sctxtnn", num_contexts=3, steepness=1.0),
        RosterModel(name="SmallFF", kind="ff", layer_sizes=(2, 4, 4, 1)),
        RosterModel(name="LargeFF", kind="ff", layer_sizes=(2, 6, 6, 1)),
    )

    def __post_init__(self):
        if self.num_simulations < 1 or not self.roster:
            raise ValueError("need at least one simulation and one roster model")
        if self.n_train + self.n_val + self.n_test != self.n_total:
            raise ValueError("split sizes must sum to the total dataset size")
        names = [m.name for m in self.roster]
        if len(set(names)) != len(names):
            raise ValueError("roster model names must be unique")

    def to_json_dict(self) -> dict:
        return {
            "num_simulations": self.num_simulations,
            "n_total": self.n_total,
            "n_train": self.n_train,
            "n_val": self.n_val,
            "n_test": self.n_test,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "noise_sd": self.noise_sd,
            "data": {
                "num_contexts": self.data_num_contexts,
                "num_regressors": self.data_num_regressors,
                "interior_cuts": list(self.data_interior_cuts),
                "domain": list(self.data_domain),
                "sample_intercepts": self.data_sample_intercepts,
            },
            "seed": self.seed,
            "roster": [m.to_json_dict() for m in self.roster],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ExperimentConfig":
        data = d.get("data", {})
        kwargs = dict(
            num_simulations=int(d["num_simulations"]),
            n_total=int(d["n_total"]),
            n_train=int(d["n_train"]),
            n_val=int(d["n_val"]),
            n_test=int(d["n_test"]),
            epochs=int(d["epochs"]),
            learning_rate=float(d["learning_rate"]),
            noise_sd=float(d["noise_sd"]),
            seed=int(d["seed"]),
        )
        if data:
            kwargs.update(
                data_num_contexts=int(data["num_contexts"]),
                data_num_regressors=int(data["num_regressors"]),
                data_interior_cuts=tuple(data["interior_cuts"]),
                data_domain=tuple(data["domain"]),
                data_sample_intercepts=bool(data.get("sample_intercepts", True)),
            )
        if d.get("roster"):
            kwargs["roster"] = tuple(RosterModel.from_json_dict(m) for m in d["roster"])
        return cls(**kwargs)


def default_config() -> ExperimentConfig:
    """The full study configuration with the shipped seed."""
    return ExperimentConfig()


@dataclass(frozen=True)
class ModelResult:
    name: str
    train_mse: np.ndarray
    val_mse: np.ndarray
    test_mse: float
    excess_mse: float
    valid: bool = True
    fail_epoch: int | None = None


@dataclass(frozen=True)
class SimulationRecord:
    sim_index: int
    data_model: ContextualLinearModel
    results: tuple[ModelResult, ...]

    def result(self, name: str) -> ModelResult:
        for res in self.results:
            if res.name == name:
                return res
        raise KeyError(name)


@dataclass(frozen=True)
class SummaryStats:
    model_stats: dict[str, dict[str, float]]  # mean/median/q1/q3/min/max/n_valid
    mean_train_curves: dict[str, np.ndarray]
    mean_val_curves: dict[str, np.ndarray]


def _predict(entry: RosterModel, params, X: np.ndarray) -> np.ndarray:
    if isinstance(params, SCtxtNNParams):
        mode = GateMode.exact() if entry.from_construction else GateMode.smooth(entry.steepness)
        return forward_sctxtnn_batch(params, mode, X)[0]
    return forward_feedforward_batch(params, X)


def _domain_covering(dataset: LabeledDataset) -> RegressorDomain:
    # hyperrectangle enclosing every observed regressor, padded so the
    # construction's supremum bounds hold strictly at the data points
    reg = dataset.features[:, :-1]
    bounds = np.stack([reg.min(axis=0) - 1.0, reg.max(axis=0) + 1.0], axis=1)
    return RegressorDomain(bounds)


def run_simulation(config: ExperimentConfig, sim_index: int) -> SimulationRecord:
    """Pure function of (config, sim_index): one full simulation."""
    if not 0 <= sim_index < config.num_simulations:
        raise ValueError(f"sim_index {sim_index} out of range")
    root = RandomSource(config.seed).derive(f"sim-{sim_index}")
    data_model = sample_random_model(
        config.data_num_contexts, config.data_num_regressors,
        config.data_interior_cuts, config.data_domain,
        root.derive("model"), config.data_sample_intercepts)
    dataset = generate_dataset(
        data_model, config.n_total, config.noise_sd,
        (config.n_train, config.n_val, config.n_test), root.derive("data"))
    Xte, yte = dataset.subset(dataset.test_idx)

    results = []
    for entry in config.roster:
        if entry.from_construction:
            report = construct_exact(data_model, _domain_covering(dataset),
                                     grid_density=None)
            record = TrainingRecord(np.zeros(0), np.zeros(0), report.params, 0.0)
        else:
            try:
                record = train(entry.spec(config.data_num_regressors), dataset,
                               config.epochs, learning_rate=config.learning_rate,
                               rng=root.derive(f"init-{entry.name}"))
            except NonFiniteLossError as err:
                results.append(ModelResult(entry.name, np.zeros(0), np.zeros(0),
                                           float("nan"), float("nan"),
                                           valid=False, fail_epoch=err.epoch))
                continue
        preds = _predict(entry, record.params, Xte)
        resid = preds - yte
        test = float(resid @ resid) / yte.size
        results.append(ModelResult(entry.name, record.train_mse, record.val_mse,
                                   test, excess_mse(test, config.noise_sd)))
    return SimulationRecord(sim_index, data_model, tuple(results))


def _run_one(args):
    config, i = args
    return run_simulation(config, i)


def run_experiment(config: ExperimentConfig, workers: int = 1,
                   progress=None) -> tuple[list[SimulationRecord], SummaryStats]:
    """All simulations plus aggregation; records are returned in index order
    regardless of execution order."""
    indices = range(config.num_simulations)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one, [(config, i) for i in indices]))
    else:
        records = []
        for i in indices:
            records.append(run_simulation(config, i))
            if progress is not None:
                progress(i + 1, config.num_simulations)
    return records, summarize(records)


def summarize(records: list[SimulationRecord]) -> SummaryStats:
    """Per-model excess-MSE box statistics and epoch-wise mean loss curves.

    Quantiles use linear interpolation between order statistics (numpy's
    default, type 7). Invalid simulations are excluded and counted.
    """
    if not records:
        raise ValueError("no records to summarize")
    names = [res.name for res in records[0].results]
    model_stats: dict[str, dict[str, float]] = {}
    mean_tr: dict[str, np.ndarray] = {}
    mean_va: dict[str, np.ndarray] = {}
    any_valid = False
    for name in names:
        valid = [rec.result(name) for rec in records if rec.result(name).valid]
        if not valid:
            model_stats[name] = {"n_valid": 0}
            mean_tr[name] = np.zeros(0)
            mean_va[name] = np.zeros(0)
            continue
        any_valid = True
        excess = np.array([res.excess_mse for res in valid])
        q1, med, q3 = np.quantile(excess, [0.25, 0.5, 0.75])
        model_stats[name] = {
            "mean": float(np.mean(excess)),
            "median": float(med),
            "q1": float(q1),
            "q3": float(q3),
            "min": float(np.min(excess)),
            "max": float(np.max(excess)),
            "n_valid": len(valid),
        }
        mean_tr[name] = np.mean([res.train_mse for res in valid], axis=0)
        mean_va[name] = np.mean([res.val_mse for res in valid], axis=0)
    if not any_valid:
        raise ValueError("no valid simulation records")
    return SummaryStats(model_stats, mean_tr, mean_va)


def write_results_csv(records: list[SimulationRecord], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["sim", "model", "test_mse", "excess_mse"])
        for rec in records:
            for res in rec.results:
                if res.valid:
                    w.writerow([rec.sim_index, res.name,
                                repr(res.test_mse), repr(res.excess_mse)])


def write_curves_csv(summary: SummaryStats, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["model", "epoch", "mean_train_mse", "mean_val_mse"])
        for name, tr in summary.mean_train_curves.items():
            va = summary.mean_val_curves[name]
            for e in range(tr.shape[0]):
                w.writerow([name, e + 1, repr(float(tr[e])), repr(float(va[e]))])


def write_summary_json(summary: SummaryStats, path) -> None:
    with open(path, "w") as f:
        json.dump(summary.model_stats, f, indent=2, sort_keys=True)
        f.write("\n")


def write_config_json(config: ExperimentConfig, path) -> None:
    with open(path, "w") as f:
        json.dump(config.to_json_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
