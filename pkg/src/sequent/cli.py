"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import runner
from .data import make_moons, make_spirals, write_csv
from .exceptions import ConfigurationError, TrainingError
from .training import evaluate
from .verify import run_checks

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3

# CLI flag dest -> flat config key
FLAG_KEYS = {
    "model": "model",
    "dataset": "dataset",
    "data_file": "data-file",
    "classes": "dataset.classes",
    "samples": "dataset.samples",
    "noise": "dataset.noise",
    "turns": "dataset.turns",
    "qubits": "qubits",
    "depth": "depth",
    "hidden": "hidden",
    "embed_axis": "embed-axis",
    "entangle_axis": "entangle-axis",
    "epochs": "epochs",
    "batch": "batch",
    "lr": "lr",
    "loss": "loss",
    "seeds": "seeds",
    "test_fraction": "test-fraction",
    "out": "out",
}


def _seed_list(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed list {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    return seeds


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="RunConfig JSON (flat dotted keys); flags override it")
    p.add_argument("--model", choices=runner.MODELS)
    p.add_argument("--dataset", choices=runner.DATASETS)
    p.add_argument("--data-file", help="CSV of feature columns plus an integer label column")
    p.add_argument("--classes", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--turns", type=float)
    p.add_argument("--qubits", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--embed-axis", choices=("X", "Y", "Z"))
    p.add_argument("--entangle-axis", choices=("X", "Y", "Z"))
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--loss", choices=("cross_entropy", "squared_error"))
    p.add_argument("--seed", "--seeds", dest="seeds", type=_seed_list)
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--out")


def resolve_run_config(args) -> runner.RunConfig:
    """Merge: built-in defaults < benchmark calibration for the dataset < config file < flags."""
    flat = runner.load_config_file(args.config) if args.config else {}
    flags = {FLAG_KEYS[k]: v for k, v in vars(args).items() if k in FLAG_KEYS and v is not None}
    merged = {**flat, **flags}
    model = merged.get("model", runner.RunConfig.model)
    dataset = merged.get("dataset", runner.RunConfig.dataset)
    base = runner.benchmark_config(model, dataset) if dataset != "csv" else runner.RunConfig()
    return runner.RunConfig.from_flat(merged, base=base).resolved()


def cmd_generate_data(args) -> int:
    # unset generator parameters follow the benchmark calibration
    config = runner.benchmark_config("classical", args.dataset).resolved()
    noise = config.noise if args.noise is None else args.noise
    if args.dataset == "moons":
        ds = make_moons(args.samples, noise, args.seed)
    else:
        ds = make_spirals(args.samples, noise, config.turns if args.turns is None else args.turns, args.seed)
    write_csv(ds, args.out)
    print(f"wrote {len(ds)} rows to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = resolve_run_config(args)
    summary = runner.train_runs(config)
    for seed, acc in zip(summary["seeds"], summary["test_accuracies"]):
        print(f"{config.model} on {config.dataset}, seed {seed}: test accuracy {acc:.4f}")
    if len(summary["seeds"]) > 1:
        print(f"median {summary['median_test_accuracy']:.4f} over {summary['n_seeds']} seeds")
    print(f"artifacts in {config.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model, stats, snap = runner.load_snapshot(args.snapshot)
    if args.data_file:
        from .data import load_features_csv
        data = load_features_csv(args.data_file, model.n_classes)
        if stats is not None:
            from .data import Dataset
            data = Dataset(stats.apply(data.features), data.labels, data.classes, data.provenance)
    else:
        config = runner.RunConfig.from_flat(snap["config"]).resolved()
        _, data, _ = runner.prepare_data(config, snap["seed"])
    accuracy, confusion = evaluate(model, data)
    print(json.dumps({"accuracy": accuracy, "confusion": confusion.tolist(), "n": len(data)}))
    return EXIT_OK


def cmd_grid(args) -> int:
    model, stats, _ = runner.load_snapshot(args.snapshot)
    rows = runner.decision_grid(model, stats, args.bounds, args.resolution)
    runner.write_grid(rows, args.out)
    print(f"wrote {len(rows)} grid rows to {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    started = time.perf_counter()
    results = run_checks()
    failed = [r.name for r in results if not r.passed]
    elapsed = time.perf_counter() - started
    if failed:
        print(f"verify FAILED ({elapsed:.1f}s): {', '.join(failed)}")
        return EXIT_VERIFY
    print(f"verify passed: {len(results)} checks in {elapsed:.1f}s")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    runner.run_benchmark(args.out, args.seeds, datasets=args.datasets, models=args.models, jobs=args.jobs)
    print(f"summary in {Path(args.out) / 'summary.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sequent", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-data", help="write a moons or spirals dataset as CSV")
    p.add_argument("--dataset", choices=("moons", "spirals"), default="moons")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--noise", type=float)
    p.add_argument("--turns", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate_data)

    p = sub.add_parser("train", help="train a model for one or more seeds")
    _add_run_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="accuracy and confusion matrix of a snapshot")
    p.add_argument("snapshot")
    p.add_argument("--data-file", help="evaluate on this CSV instead of the snapshot's own test split")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grid", help="export predictions over a 2-D grid as CSV")
    p.add_argument("snapshot")
    p.add_argument("--bounds", type=float, nargs=4, default=(-2.0, 2.0, -2.0, 2.0),
                   metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    p.add_argument("--resolution", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("verify", help="run the fast invariant checks")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("benchmark", help="all models on moons and spirals over several seeds")
    p.add_argument("--out", default="benchmark")
    p.add_argument("--seeds", type=_seed_list, default=[0, 1, 2, 3, 4])
    p.add_argument("--datasets", nargs="+", choices=("moons", "spirals"), default=["moons", "spirals"])
    p.add_argument("--models", nargs="+", choices=runner.MODELS, default=list(runner.MODELS))
    p.add_argument("--jobs", type=int, default=runner.default_jobs())
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
