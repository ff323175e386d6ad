"""Command-line interface.

Subcommands: construct, verify-construction, gen-data, train, experiment,
report. Exit codes: 0 success, 1 domain failure (verification or experiment),
2 input error. All file formats are owned by the library modules.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .construction import (
    ConstructionReport,
    ConstructionVerificationError,
    construct_exact,
    verify_construction,
)
from .experiment import (
    ExperimentConfig,
    default_config,
    run_experiment,
    write_config_json,
    write_curves_csv,
    write_results_csv,
    write_summary_json,
)
from .model import (
    ContextualLinearModel,
    LabeledDataset,
    RegressorDomain,
    generate_dataset,
)
from .networks import FeedForwardSpec, SCtxtNNSpec, save_params
from .rng import RandomSource
from .training import train as run_training

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2

CONSTRUCTION_TOLERANCE = 1e-9


class InputError(Exception):
    pass


def _load_json(path, what: str) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError:
        raise InputError(f"{what}: file not found: {path}")
    except json.JSONDecodeError as err:
        raise InputError(f"{what}: malformed JSON in {path}: {err}")


def _load_model(path) -> ContextualLinearModel:
    d = _load_json(path, "model")
    try:
        return ContextualLinearModel.from_json_dict(d)
    except (KeyError, TypeError, ValueError) as err:
        raise InputError(f"model {path}: {err}")


def _load_domain(path) -> RegressorDomain:
    d = _load_json(path, "domain")
    try:
        return RegressorDomain.from_json_dict(d)
    except (KeyError, TypeError, ValueError) as err:
        raise InputError(f"domain {path}: {err}")


def cmd_construct(args) -> int:
    model = _load_model(args.model)
    domain = _load_domain(args.domain)
    report = construct_exact(model, domain, suppression=args.suppression,
                             grid_density=args.grid)
    report.save(args.out)
    print(f"max_abs_error = {report.max_abs_error:.3e}")
    return EXIT_OK if report.max_abs_error < CONSTRUCTION_TOLERANCE else EXIT_FAILURE


def cmd_verify_construction(args) -> int:
    model = _load_model(args.model)
    domain = _load_domain(args.domain)
    d = _load_json(args.report, "report")
    try:
        report = ConstructionReport.from_json_dict(d)
    except (KeyError, TypeError, ValueError) as err:
        raise InputError(f"report {args.report}: {err}")
    try:
        err_val = verify_construction(report, model, domain, args.grid)
    except ConstructionVerificationError as err:
        print(f"verification failed: {err}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"max_abs_error = {err_val:.3e}")
    return EXIT_OK if err_val < CONSTRUCTION_TOLERANCE else EXIT_FAILURE


def cmd_gen_data(args) -> int:
    model = _load_model(args.model)
    try:
        sizes = tuple(int(v) for v in args.sizes.split(","))
        if len(sizes) != 3:
            raise ValueError
    except ValueError:
        raise InputError(f"--sizes must be three comma-separated integers, got {args.sizes!r}")
    rng = RandomSource(args.seed)
    dataset = generate_dataset(model, sum(sizes), args.noise_sd, sizes, rng)
    dataset.to_csv(args.out)
    print(f"wrote {dataset.num_rows} rows to {args.out}")
    return EXIT_OK


def _parse_arch(text: str, num_regressors: int):
    kind, _, rest = text.partition(":")
    if kind == "sctxtnn":
        try:
            return SCtxtNNSpec(int(rest), num_regressors)
        except ValueError:
            raise InputError(f"bad sctxtnn context count in --arch {text!r}")
    if kind == "ff":
        try:
            return FeedForwardSpec(tuple(int(v) for v in rest.split(",")))
        except ValueError:
            raise InputError(f"bad layer sizes in --arch {text!r}")
    raise InputError(f"--arch must be sctxtnn:C or ff:SIZES, got {text!r}")


def cmd_train(args) -> int:
    try:
        dataset = LabeledDataset.from_csv(args.data)
    except (OSError, ValueError) as err:
        raise InputError(f"dataset {args.data}: {err}")
    spec = _parse_arch(args.arch, dataset.num_regressors)
    if isinstance(spec, SCtxtNNSpec) and args.steepness is not None:
        spec = SCtxtNNSpec(spec.num_contexts, spec.num_regressors, args.steepness)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    record = run_training(spec, dataset, args.epochs, learning_rate=args.lr,
                          rng=RandomSource(args.seed).derive("init"))
    record.curves_to_csv(outdir / "curve.csv")
    save_params(record.params, outdir / "params.json")
    final = record.train_mse[-1] if record.train_mse.size else float("nan")
    print(f"trained {args.epochs} epochs in {record.wall_time:.1f}s, "
          f"final train MSE {final:.6g}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.print_default_config:
        print(json.dumps(default_config().to_json_dict(), indent=2, sort_keys=True))
        return EXIT_OK
    if args.config:
        try:
            config = ExperimentConfig.from_json_dict(_load_json(args.config, "config"))
        except (KeyError, TypeError, ValueError) as err:
            raise InputError(f"config {args.config}: {err}")
    else:
        config = default_config()
    if args.seed is not None:
        config = ExperimentConfig.from_json_dict({**config.to_json_dict(), "seed": args.seed})
    if args.out is None:
        raise InputError("--out DIR is required to run the experiment")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    results_path = outdir / "results.csv"
    if results_path.exists() and not args.force:
        raise InputError(f"{results_path} exists; pass --force to overwrite")

    def progress(done, total):
        if args.verbose:
            print(f"simulation {done}/{total}", flush=True)

    try:
        records, summary = run_experiment(config, workers=args.workers, progress=progress)
    except ValueError as err:
        print(f"experiment failed: {err}", file=sys.stderr)
        return EXIT_FAILURE
    write_results_csv(records, results_path)
    write_curves_csv(summary, outdir / "curves.csv")
    write_summary_json(summary, outdir / "summary.json")
    write_config_json(config, outdir / "config.json")
    n_valid = sum(s.get("n_valid", 0) for s in summary.model_stats.values())
    print(f"wrote results to {outdir} ({n_valid} valid model runs)")
    return EXIT_OK if n_valid > 0 else EXIT_FAILURE


def _read_results_csv(path):
    try:
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
    except OSError as err:
        raise InputError(f"results: {err}")
    if not rows or rows[0] != ["sim", "model", "test_mse", "excess_mse"]:
        raise InputError(f"malformed results CSV {path}")
    if len(rows) < 2:
        raise InputError(f"results CSV {path} has no data rows")
    excess: dict[str, list[float]] = {}
    try:
        for row in rows[1:]:
            excess.setdefault(row[1], []).append(float(row[3]))
    except (IndexError, ValueError) as err:
        raise InputError(f"malformed results CSV {path}: {err}")
    return excess


def _read_curves_csv(path):
    try:
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
    except OSError as err:
        raise InputError(f"curves: {err}")
    if not rows or rows[0] != ["model", "epoch", "mean_train_mse", "mean_val_mse"]:
        raise InputError(f"malformed curves CSV {path}")
    curves: dict[str, tuple[list[float], list[float]]] = {}
    try:
        for row in rows[1:]:
            tr, va = curves.setdefault(row[0], ([], []))
            tr.append(float(row[2]))
            va.append(float(row[3]))
    except (IndexError, ValueError) as err:
        raise InputError(f"malformed curves CSV {path}: {err}")
    return curves


def cmd_report(args) -> int:
    from .svgplot import box_plot_svg, loss_curves_svg

    outdir = Path(args.out)
    excess = _read_results_csv(outdir / "results.csv")
    curves = _read_curves_csv(outdir / "curves.csv")
    stats = {}
    for name, vals in excess.items():
        arr = np.asarray(vals)
        q1, med, q3 = np.quantile(arr, [0.25, 0.5, 0.75])
        stats[name] = {"min": float(arr.min()), "q1": float(q1), "median": float(med),
                       "q3": float(q3), "max": float(arr.max()), "mean": float(arr.mean())}
    try:
        curves_svg = loss_curves_svg(curves)
    except ValueError as err:
        raise InputError(f"curves: {err}")
    (outdir / "loss_curves.svg").write_text(curves_svg)
    (outdir / "excess_box.svg").write_text(box_plot_svg(stats))
    print(f"wrote loss_curves.svg and excess_box.svg to {outdir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sctxtnn",
        description="Contextual neural networks: exact construction, training, "
                    "and the simulation study.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build and verify an exact network")
    p.add_argument("model", help="contextual model JSON")
    p.add_argument("domain", help="regressor domain JSON")
    p.add_argument("out", help="construction report JSON to write")
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--suppression", choices=["per-unit", "paper-global"],
                   default="per-unit")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify-construction", help="re-verify a saved report")
    p.add_argument("report")
    p.add_argument("model")
    p.add_argument("domain")
    p.add_argument("--grid", type=int, default=200)
    p.set_defaults(func=cmd_verify_construction)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sizes", default="1500,1500,3000",
                   help="train,val,test sizes (comma separated)")
    p.add_argument("--noise-sd", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train one model on a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--arch", required=True, help="sctxtnn:C or ff:2,4,4,1")
    p.add_argument("--epochs", type=int, default=20000)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--steepness", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("experiment", help="run the simulation study")
    p.add_argument("--config", default=None, help="experiment config JSON")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--force", action="store_true",
                   help="overwrite an existing results.csv")
    p.add_argument("--print-default-config", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="emit SVG figures from experiment outputs")
    p.add_argument("--out", required=True, help="experiment output directory")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
