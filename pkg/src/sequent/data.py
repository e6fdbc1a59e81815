"""Benchmark datasets, splitting, standardization and CSV exchange."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError
from .rng import make_rng


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (N, n)
    labels: np.ndarray  # (N,)
    classes: int
    provenance: str = ""

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)
        if features.ndim != 2 or features.shape[0] == 0:
            raise ConfigurationError(f"features must be a non-empty (N, n) matrix, got {features.shape}")
        if labels.shape != (features.shape[0],):
            raise ConfigurationError("one label per feature row is required")
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise ConfigurationError("labels must be integers")
        labels = labels.astype(np.int64)
        if np.any(labels < 0) or np.any(labels >= self.classes):
            raise ConfigurationError(f"labels must lie in [0, {self.classes})")
        if not np.all(np.isfinite(features)):
            raise ConfigurationError("features must be finite")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.classes)

    def subset(self, index, provenance: str | None = None) -> Dataset:
        return Dataset(self.features[index], self.labels[index], self.classes,
                       self.provenance if provenance is None else provenance)


def _balanced_labels(n_samples: int) -> np.ndarray:
    n0 = (n_samples + 1) // 2
    return np.concatenate((np.zeros(n0, dtype=np.int64), np.ones(n_samples - n0, dtype=np.int64)))


def _check_sizes(n_samples, noise_std):
    if int(n_samples) != n_samples or n_samples < 2:
        raise ConfigurationError(f"n_samples must be an integer >= 2, got {n_samples}")
    if not noise_std >= 0:
        raise ConfigurationError(f"noise_std must be >= 0, got {noise_std}")


def make_moons(n_samples: int = 2000, noise_std: float = 0.1, seed: int = 0) -> Dataset:
    """Two interleaved half circles.

    Class 0 lies on ``(cos t, sin t)`` and class 1 on
    ``(1 - cos t, 0.5 - sin t)`` with ``t ~ U[0, pi]``.
    """
    _check_sizes(n_samples, noise_std)
    rng = make_rng(seed, "moons")
    labels = _balanced_labels(int(n_samples))
    t = rng.uniform(0.0, math.pi, size=labels.size)
    x = np.where(labels == 0, np.cos(t), 1.0 - np.cos(t))
    y = np.where(labels == 0, np.sin(t), 0.5 - np.sin(t))
    points = np.column_stack((x, y)) + noise_std * rng.standard_normal((labels.size, 2))
    return Dataset(points, labels, 2, f"moons(n={n_samples}, noise={noise_std}, seed={seed})")


def make_spirals(n_samples: int = 2000, noise_std: float = 0.05, turns: float = 1.5, seed: int = 0) -> Dataset:
    """Two spirals offset by half a turn.

    Class ``c`` sits at radius ``t`` and angle ``2 pi turns t + c pi`` with
    ``t ~ U(0, 1]``.
    """
    _check_sizes(n_samples, noise_std)
    if not turns > 0:
        raise ConfigurationError(f"turns must be > 0, got {turns}")
    rng = make_rng(seed, "spirals")
    labels = _balanced_labels(int(n_samples))
    t = 1.0 - rng.uniform(0.0, 1.0, size=labels.size)  # (0, 1]
    angle = 2.0 * math.pi * turns * t + labels * math.pi
    points = np.column_stack((t * np.cos(angle), t * np.sin(angle)))
    points = points + noise_std * rng.standard_normal(points.shape)
    return Dataset(points, labels, 2, f"spirals(n={n_samples}, noise={noise_std}, turns={turns}, seed={seed})")


def split(dataset: Dataset, test_fraction: float = 0.3, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Stratified shuffle split; each class contributes ``round(count * test_fraction)`` test rows."""
    if not 0 < test_fraction < 1:
        raise ConfigurationError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    rng = make_rng(seed, "split")
    train_idx, test_idx = [], []
    for c in range(dataset.classes):
        members = np.flatnonzero(dataset.labels == c)
        if members.size == 0:
            continue
        if members.size < 2:
            raise ConfigurationError(f"class {c} has fewer than 2 members; cannot stratify")
        members = rng.permutation(members)
        n_test = min(max(int(round(members.size * test_fraction)), 1), members.size - 1)
        test_idx.append(members[:n_test])
        train_idx.append(members[n_test:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return (dataset.subset(train_idx, dataset.provenance + " [train]"),
            dataset.subset(test_idx, dataset.provenance + " [test]"))


@dataclass(frozen=True)
class Standardization:
    mean: np.ndarray
    scale: np.ndarray

    def apply(self, features) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {"mean": [float(v) for v in self.mean], "scale": [float(v) for v in self.scale]}

    @classmethod
    def from_dict(cls, d: dict) -> Standardization:
        return cls(np.asarray(d["mean"], dtype=np.float64), np.asarray(d["scale"], dtype=np.float64))


def fit_standardization(features) -> Standardization:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ConfigurationError("cannot standardize an empty feature matrix")
    mean = features.mean(axis=0)
    scale = features.std(axis=0)
    flat = np.flatnonzero(~(scale > 0))
    if flat.size:
        raise ConfigurationError(f"feature {int(flat[0])} has zero variance")
    return Standardization(mean, scale)


def standardize(train: Dataset, test: Dataset):
    """Zero-mean, unit-variance features using training statistics for both sets."""
    stats = fit_standardization(train.features)
    return (Dataset(stats.apply(train.features), train.labels, train.classes, train.provenance),
            Dataset(stats.apply(test.features), test.labels, test.classes, test.provenance),
            stats)


def load_features_csv(path, classes: int) -> Dataset:
    """Read rows of ``v`` floats followed by an integer label (no header)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"feature file not found: {path}")
    rows, labels, width = [], [], None
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
                if width < 2:
                    raise ConfigurationError(f"{path}:{lineno}: need at least one feature and a label")
            elif len(row) != width:
                raise ConfigurationError(f"{path}:{lineno}: expected {width} columns, got {len(row)}")
            try:
                values = [float(cell) for cell in row[:-1]]
                label = int(row[-1])
            except ValueError as exc:
                raise ConfigurationError(f"{path}:{lineno}: {exc}") from None
            if not 0 <= label < classes:
                raise ConfigurationError(f"{path}:{lineno}: label {label} outside [0, {classes})")
            if not all(math.isfinite(v) for v in values):
                raise ConfigurationError(f"{path}:{lineno}: non-finite feature value")
            rows.append(values)
            labels.append(label)
    if not rows:
        raise ConfigurationError(f"{path}: no data rows")
    return Dataset(np.array(rows), np.array(labels), classes, f"csv({path})")


def write_csv(dataset: Dataset, path) -> None:
    """Write features and labels in the format read by :func:`load_features_csv`."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
