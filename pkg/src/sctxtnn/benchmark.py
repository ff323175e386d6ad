"""Benchmark the numba training kernels against the pure-numpy fallback.

Run with ``python -m sctxtnn.benchmark``. Imports both backend modules
directly (ignoring SCTXTNN_BACKEND) and times identical full-batch training
workloads on each.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from .backends import numpy_backend
from .experiment import default_config, ExperimentConfig
from .model import generate_dataset, sample_random_model
from .networks import init_random
from .rng import RandomSource

try:
    from .backends import numba_backend
except ImportError:
    numba_backend = None


def _workload(n_train: int, n_val: int):
    cfg = default_config()
    rng = RandomSource(7).derive("benchmark")
    model = sample_random_model(cfg.data_num_contexts, cfg.data_num_regressors,
                                cfg.data_interior_cuts, cfg.data_domain,
                                rng.derive("model"))
    n = n_train + n_val
    ds = generate_dataset(model, n, cfg.noise_sd, (n_train, n_val, 0), rng.derive("data"))
    Xtr, ytr = ds.subset(ds.train_idx)
    Xva, yva = ds.subset(ds.val_idx)
    return cfg, rng, Xtr, ytr, Xva, yva


def _time_backend(backend, cfg: ExperimentConfig, rng, Xtr, ytr, Xva, yva,
                  epochs: int) -> dict[str, float]:
    results = {}
    for entry in cfg.roster:
        spec = entry.spec(cfg.data_num_regressors)
        theta0 = init_random(spec, rng.derive(f"init-{entry.name}")).to_flat()
        args = (Xtr, ytr, Xva, yva, epochs, cfg.learning_rate, 0.9, 0.999, 1e-8)
        if entry.kind == "sctxtnn":
            run = lambda: backend.sctxtnn_train(
                theta0.copy(), entry.num_contexts, cfg.data_num_regressors,
                entry.steepness, *args)
        else:
            sizes = np.asarray(entry.layer_sizes, dtype=np.int64)
            run = lambda: backend.ff_train(theta0.copy(), sizes, *args)
        run()  # warm up (numba compilation, caches)
        start = time.perf_counter()
        run()
        results[entry.name] = time.perf_counter() - start
    return results


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--epochs", type=int, default=2000)
    parser.add_argument("--n-train", type=int, default=1500)
    parser.add_argument("--n-val", type=int, default=1500)
    args = parser.parse_args(argv)

    cfg, rng, Xtr, ytr, Xva, yva = _workload(args.n_train, args.n_val)
    backends = [("numpy", numpy_backend)]
    if numba_backend is not None:
        backends.append(("numba", numba_backend))
    else:
        print("numba not available; timing numpy only")

    timings = {}
    for name, backend in backends:
        timings[name] = _time_backend(backend, cfg, rng.clone(), Xtr, ytr, Xva, yva,
                                      args.epochs)

    print(f"\n{args.epochs} full-batch epochs, n_train={args.n_train}:")
    header = f"{'model':<10}" + "".join(f"{name + ' [s]':>12}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for entry in cfg.roster:
        row = f"{entry.name:<10}"
        for name, _ in backends:
            row += f"{timings[name][entry.name]:>12.3f}"
        if len(backends) == 2:
            row += f"{timings['numpy'][entry.name] / timings['numba'][entry.name]:>9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
