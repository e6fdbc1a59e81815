"""Run configuration, single training runs with on-disk artifacts, and the
moons/spirals benchmark sweep."""

from __future__ import annotations

import csv
import json
import logging
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .data import Dataset, Standardization, load_features_csv, make_moons, make_spirals, split, standardize
from .estimators import ESTIMATORS
from .exceptions import ConfigurationError
from .models import model_from_dict, model_to_dict
from .training import evaluate

log = logging.getLogger(__name__)

MODELS = ("classical", "dqc", "sequent")
DATASETS = ("moons", "spirals", "csv")
DEFAULT_EPOCHS = {"classical": 4, "dqc": 4, "sequent": 2}
DEFAULT_NOISE = {"moons": 0.1, "spirals": 0.05, "csv": 0.0}
REPORT_FORMAT = "sequent-report/1"

# flat config key -> RunConfig field
KEYS = {
    "model": "model",
    "dataset": "dataset",
    "data-file": "data_file",
    "dataset.classes": "classes",
    "dataset.samples": "samples",
    "dataset.noise": "noise",
    "dataset.turns": "turns",
    "qubits": "qubits",
    "depth": "depth",
    "hidden": "hidden",
    "embed-axis": "embed_axis",
    "entangle-axis": "entangle_axis",
    "epochs": "epochs",
    "batch": "batch",
    "lr": "lr",
    "loss": "loss",
    "seeds": "seeds",
    "test-fraction": "test_fraction",
    "out": "out",
}
FIELD_KEYS = {v: k for k, v in KEYS.items()}


@dataclass(frozen=True)
class RunConfig:
    model: str = "sequent"
    dataset: str = "moons"
    data_file: str | None = None
    classes: int = 2
    samples: int = 2000
    noise: float | None = None
    turns: float = 1.5
    qubits: int = 6
    depth: int = 10
    hidden: int | None = None
    embed_axis: str = "Y"
    entangle_axis: str = "Y"
    epochs: int | None = None
    batch: int = 32
    lr: float = 0.1
    loss: str = "cross_entropy"
    seeds: tuple = (42,)
    test_fraction: float = 0.3
    out: str = "runs"

    @classmethod
    def from_flat(cls, flat: dict, base: RunConfig | None = None) -> RunConfig:
        unknown = sorted(set(flat) - set(KEYS))
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
        values = {KEYS[k]: v for k, v in flat.items()}
        if "seeds" in values:
            seeds = values["seeds"]
            values["seeds"] = tuple(seeds) if isinstance(seeds, (list, tuple)) else (seeds,)
        return replace(base or cls(), **values)

    def to_flat(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        return {FIELD_KEYS[f.name]: d[f.name] for f in fields(self)}

    def resolved(self) -> RunConfig:
        """Fill defaults that depend on other fields, then validate."""
        cfg = replace(
            self,
            noise=DEFAULT_NOISE.get(self.dataset, 0.0) if self.noise is None else self.noise,
            hidden=self.qubits if self.hidden is None else self.hidden,
            epochs=DEFAULT_EPOCHS.get(self.model, 1) if self.epochs is None else self.epochs,
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.model not in MODELS:
            raise ConfigurationError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.dataset not in DATASETS:
            raise ConfigurationError(f"dataset must be one of {DATASETS}, got {self.dataset!r}")
        if self.dataset == "csv" and not self.data_file:
            raise ConfigurationError("dataset 'csv' needs data-file")
        if not self.seeds:
            raise ConfigurationError("at least one seed is required")
        for s in self.seeds:
            if not isinstance(s, int) or isinstance(s, bool) or not 0 <= s < 2**64:
                raise ConfigurationError(f"seeds must be integers in [0, 2**64), got {s!r}")
        if self.hidden is not None and self.hidden != self.qubits:
            raise ConfigurationError(
                f"hidden width ({self.hidden}) must equal the qubit count ({self.qubits}) for a fair comparison"
            )
        if self.model != "classical" and self.qubits < self.classes:
            raise ConfigurationError(f"{self.classes} classes need at least {self.classes} qubits")
        if not 0 < self.test_fraction < 1:
            raise ConfigurationError("test-fraction must lie in (0, 1)")
        if self.epochs is not None and self.epochs < 0:
            raise ConfigurationError("epochs must be >= 0")
        if self.batch < 1:
            raise ConfigurationError("batch must be >= 1")


def load_config_file(path) -> dict:
    """Flat config dict from a RunConfig JSON file or from any artifact embedding one."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    if isinstance(doc, dict) and isinstance(doc.get("config"), dict):
        doc = doc["config"]
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: expected a JSON object")
    return doc


def benchmark_defaults() -> dict:
    text = resources.files("sequent").joinpath("configs/benchmark.json").read_text()
    return json.loads(text)


# -- single runs ------------------------------------------------------------

def build_dataset(config: RunConfig, seed: int) -> Dataset:
    if config.dataset == "moons":
        return make_moons(config.samples, config.noise, seed)
    if config.dataset == "spirals":
        return make_spirals(config.samples, config.noise, config.turns, seed)
    return load_features_csv(config.data_file, config.classes)


def prepare_data(config: RunConfig, seed: int):
    data = build_dataset(config, seed)
    train, test = split(data, config.test_fraction, seed)
    return standardize(train, test)


def make_estimator(config: RunConfig, seed: int):
    common = dict(epochs=config.epochs, batch_size=config.batch, learning_rate=config.lr,
                  loss=config.loss, random_state=seed)
    if config.model == "classical":
        return ESTIMATORS["classical"](hidden=config.hidden, **common)
    return ESTIMATORS[config.model](n_qubits=config.qubits, depth=config.depth, embed_axis=config.embed_axis,
                                    entangle_axis=config.entangle_axis, **common)


@dataclass
class RunResult:
    report: dict
    metrics: list
    snapshot: dict
    timing: dict


def run_one(config: RunConfig, seed: int, data=None) -> RunResult:
    config = config.resolved()
    train, test, stats = data if data is not None else prepare_data(config, seed)
    est = make_estimator(config, seed)
    est.fit(train.features, train.labels, eval_set=(test.features, test.labels))
    model = est.model_
    accuracy, confusion = evaluate(model, test)
    flat = replace(config, seeds=(seed,)).to_flat()
    phases = est.reports_
    report = {
        "format": REPORT_FORMAT,
        "config": flat,
        "seed": seed,
        "model": config.model,
        "dataset": train.provenance.removesuffix(" [train]"),
        "n_train": len(train),
        "n_test": len(test),
        "phases": [r.to_dict() for r in phases],
        "final_train_accuracy": phases[-1].final_train_accuracy,
        "final_test_accuracy": accuracy,
        "confusion": confusion.tolist(),
        "parameters": {"theta": int(model.theta().size), "phi": int(model.phi().size)},
    }
    if config.model == "sequent":
        last = phases[-1]
        report["phase2_trained_parameters"] = last.num_trained_parameters
        report["freeze_integrity"] = {
            "theta_before_phase2": last.digests["theta_before"],
            "theta_after_phase2": last.digests["theta_after"],
            "identical": last.digests["theta_before"] == last.digests["theta_after"],
        }
    metrics = [row for r in phases for row in r.csv_rows()]
    snapshot = model_to_dict(model, seed=seed, extra={
        "config": flat,
        "preprocessing": stats.to_dict(),
    })
    timing = {"seed": seed, "phases": {r.phase: r.wall_clock_seconds for r in phases}}
    return RunResult(report, metrics, snapshot, timing)


def _dump(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")


def write_artifacts(out: Path, seed: int, result: RunResult) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out / f"report_seed{seed}.json",
        "metrics": out / f"metrics_seed{seed}.csv",
        "snapshot": out / f"snapshot_seed{seed}.json",
        "timing": out / f"timing_seed{seed}.json",
    }
    _dump(paths["report"], result.report)
    _dump(paths["snapshot"], result.snapshot)
    _dump(paths["timing"], result.timing)
    with paths["metrics"].open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["phase", "epoch", "train_loss", "train_acc", "test_acc"])
        for phase, epoch, loss, train_acc, test_acc in result.metrics:
            writer.writerow([phase, epoch, repr(loss), repr(train_acc), "" if test_acc is None else repr(test_acc)])
    return paths


def summarize(accuracies: list[float]) -> dict:
    return {
        "median_test_accuracy": statistics.median(accuracies),
        "min_test_accuracy": min(accuracies),
        "max_test_accuracy": max(accuracies),
        "n_seeds": len(accuracies),
    }


def train_runs(config: RunConfig) -> dict:
    """Train one model per seed, writing artifacts plus a summary into ``config.out``."""
    config = config.resolved()
    # load every seed's data first so a bad input leaves nothing on disk
    prepared = {seed: prepare_data(config, seed) for seed in config.seeds}
    out = Path(config.out)
    accuracies = []
    for seed in config.seeds:
        result = run_one(config, seed, prepared[seed])
        write_artifacts(out, seed, result)
        accuracies.append(result.report["final_test_accuracy"])
    summary = {"config": config.to_flat(), "model": config.model, "dataset": config.dataset,
               "seeds": list(config.seeds), "test_accuracies": accuracies, **summarize(accuracies)}
    _dump(out / "summary.json", summary)
    return summary


# -- benchmark --------------------------------------------------------------

def benchmark_config(model: str, dataset: str, defaults: dict | None = None) -> RunConfig:
    defaults = benchmark_defaults() if defaults is None else defaults
    flat = dict(defaults.get("common", {}))
    flat.update(defaults.get("datasets", {}).get(dataset, {}))
    flat.update(defaults.get("models", {}).get(model, {}))
    flat.update({"model": model, "dataset": dataset})
    return RunConfig.from_flat(flat)


def _benchmark_job(args):
    config, seed, out = args
    result = run_one(config, seed)
    write_artifacts(Path(out), seed, result)
    return result.report["final_test_accuracy"], result.report


def run_benchmark(out, seeds, datasets=("moons", "spirals"), models=MODELS, jobs: int = 1, echo=print) -> list[dict]:
    out = Path(out)
    tasks = []
    for dataset in datasets:
        for model in models:
            config = replace(benchmark_config(model, dataset), seeds=tuple(seeds)).resolved()
            for seed in seeds:
                tasks.append(((dataset, model, seed), (config, seed, str(out / dataset / model))))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_benchmark_job, [t[1] for t in tasks]))
    else:
        outcomes = [_benchmark_job(t[1]) for t in tasks]
    per_key: dict[tuple, list] = {}
    for (key, _), (acc, _report) in zip(tasks, outcomes):
        per_key.setdefault(key[:2], []).append(acc)
    rows = []
    for dataset, model in sorted(per_key, key=lambda k: (k[0], MODELS.index(k[1]))):
        rows.append({"model": model, "dataset": dataset, **summarize(per_key[(dataset, model)])})
    out.mkdir(parents=True, exist_ok=True)
    with (out / "summary.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["model", "dataset", "median_test_accuracy",
                                                "min_test_accuracy", "max_test_accuracy", "n_seeds"])
        writer.writeheader()
        writer.writerows(rows)
    table = format_table(rows)
    (out / "summary.txt").write_text(table + "\n")
    if echo is not None:
        echo(table)
    return rows


def format_table(rows: list[dict]) -> str:
    lines = [f"{'dataset':<9} {'model':<10} {'median':>7} {'min':>7} {'max':>7} {'seeds':>5}"]
    for r in rows:
        lines.append(f"{r['dataset']:<9} {r['model']:<10} {r['median_test_accuracy']:>7.3f} "
                     f"{r['min_test_accuracy']:>7.3f} {r['max_test_accuracy']:>7.3f} {r['n_seeds']:>5}")
    return "\n".join(lines)


# -- snapshots and grids ----------------------------------------------------

def load_snapshot(path):
    """Model and its input standardization from a snapshot file."""
    path = Path(path)
    try:
        snap = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"snapshot not found: {path}") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"corrupt snapshot {path}: {exc}") from None
    if not isinstance(snap, dict):
        raise ConfigurationError(f"corrupt snapshot {path}: expected a JSON object")
    model = model_from_dict(snap)
    pre = snap.get("preprocessing")
    try:
        stats = Standardization.from_dict(pre) if pre else None
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"corrupt snapshot {path}: {exc}") from None
    return model, stats, snap


def decision_grid(model, stats, bounds, resolution: int) -> np.ndarray:
    """Rows of ``(x, y, predicted_class, score_0, ..., score_{k-1})`` over a uniform grid."""
    if resolution < 2:
        raise ConfigurationError("resolution must be >= 2")
    if model.n_features != 2:
        raise ConfigurationError(f"grids need a 2-feature model, this one has {model.n_features}")
    x0, x1, y0, y1 = bounds
    if not (x0 < x1 and y0 < y1):
        raise ConfigurationError(f"invalid bounds {bounds}")
    xs, ys = np.meshgrid(np.linspace(x0, x1, resolution), np.linspace(y0, y1, resolution), indexing="xy")
    points = np.column_stack((xs.ravel(), ys.ravel()))
    inputs = stats.apply(points) if stats is not None else points
    scores = model.forward(inputs)
    return np.column_stack((points, np.argmax(scores, axis=1), scores))


def write_grid(rows: np.ndarray, path) -> None:
    k = rows.shape[1] - 3
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "predicted_class"] + [f"score_{i}" for i in range(k)])
        for r in rows:
            writer.writerow([repr(float(r[0])), repr(float(r[1])), int(r[2])] + [repr(float(v)) for v in r[3:]])


def default_jobs() -> int:
    return max(1, min(os.cpu_count() or 1, 8))
