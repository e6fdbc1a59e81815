"""Training loops for the three regimes, plus evaluation.

All randomness (mini-batch order) comes from :func:`sequent.rng.make_rng`
keyed by the configured seed, so a run is a pure function of its inputs.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .ansatz import CircuitConfig
from .data import Dataset
from .exceptions import ConfigurationError, TrainingError
from .models import ClassicalBaseline, DQCModel, SequentModel, digest, swap_surrogate_for_vqc
from .neural import LOSSES, OptimizerState, adam_step
from .rng import make_rng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 4  # per phase for SEQUENT
    batch_size: int = 32
    learning_rate: float = 0.01
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    loss: str = "cross_entropy"

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigurationError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if not self.learning_rate >= 0:
            raise ConfigurationError("learning_rate must be >= 0")
        if self.loss not in LOSSES:
            raise ConfigurationError(f"loss must be one of {sorted(LOSSES)}")
        if int(self.seed) != self.seed or self.seed < 0 or self.seed >= 2**64:
            raise ConfigurationError("seed must be an integer in [0, 2**64)")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_acc: float
    test_acc: float | None


@dataclass
class TrainingReport:
    model: str
    phase: str
    config: dict
    trained_parameters: list[str]
    num_trained_parameters: int
    epochs: list[EpochMetrics] = field(default_factory=list)
    final_train_accuracy: float | None = None
    final_test_accuracy: float | None = None
    digests: dict = field(default_factory=dict)
    wall_clock_seconds: float = 0.0

    def to_dict(self, *, timing: bool = False) -> dict:
        """Serializable form.  Wall-clock time is left out unless asked for,
        so that identical runs serialize to identical bytes."""
        d = asdict(self)
        if not timing:
            d.pop("wall_clock_seconds")
        return d

    def csv_rows(self):
        for m in self.epochs:
            yield (self.phase, m.epoch, m.train_loss, m.train_acc, m.test_acc)


def evaluate(model, dataset: Dataset):
    """Argmax accuracy and confusion matrix (rows: true class, columns: predicted)."""
    if dataset is None or len(dataset) == 0:
        raise ConfigurationError("cannot evaluate on an empty dataset")
    k = max(dataset.classes, model.n_classes)
    pred = model.predict(dataset.features)
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (dataset.labels, pred), 1)
    return float(np.trace(confusion) / len(dataset)), confusion


def _check_data(model, train: Dataset, test: Dataset | None):
    if train is None or len(train) == 0:
        raise ConfigurationError("training data is empty")
    for ds in (train, test):
        if ds is None:
            continue
        if ds.n_features != model.n_features:
            raise ConfigurationError(f"model expects {model.n_features} features, data has {ds.n_features}")
        if ds.classes > model.n_classes:
            raise ConfigurationError(f"model has {model.n_classes} outputs, data has {ds.classes} classes")


def _digests(model) -> dict:
    return {"theta": digest(model.theta()), "phi": digest(model.phi())}


def _run_phase(model, train: Dataset, test: Dataset | None, config: TrainConfig, phase: str) -> TrainingReport:
    _check_data(model, train, test)
    names = model.trainable_names()
    size = int(model.get_vector(names).size)
    report = TrainingReport(
        model=model.kind,
        phase=phase,
        config=config.to_dict(),
        trained_parameters=names,
        num_trained_parameters=size,
    )
    before = _digests(model)
    opt = OptimizerState(size, config.learning_rate, config.beta1, config.beta2, config.eps)
    rng = make_rng(config.seed, f"batches/{model.kind}/{phase}")
    x, y = train.features, train.labels
    n = len(train)
    started = time.perf_counter()
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for step, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            with np.errstate(over="ignore", invalid="ignore"):  # non-finite values are caught below
                losses, _, grads = model.loss_and_grads(x[idx], y[idx], config.loss)
            batch_loss = float(np.sum(losses))
            if not np.isfinite(batch_loss):
                raise TrainingError(f"{model.kind}/{phase}: non-finite loss at epoch {epoch}, step {step}")
            flat = np.concatenate([grads[name].ravel() for name in names])
            try:
                updated = adam_step(opt, model.get_vector(names), flat)
            except TrainingError as exc:
                raise TrainingError(f"{model.kind}/{phase}: epoch {epoch}, step {step}: {exc}") from None
            model.set_vector(names, updated)
            total += batch_loss
        metrics = EpochMetrics(
            epoch=epoch,
            train_loss=total / n,
            train_acc=evaluate(model, train)[0],
            test_acc=evaluate(model, test)[0] if test is not None else None,
        )
        log.info("%s/%s epoch %d: loss %.4f train %.3f test %s", model.kind, phase, epoch,
                 metrics.train_loss, metrics.train_acc, metrics.test_acc)
        report.epochs.append(metrics)
    report.wall_clock_seconds = time.perf_counter() - started
    after = _digests(model)
    report.digests = {
        "theta_before": before["theta"], "theta_after": after["theta"],
        "phi_before": before["phi"], "phi_after": after["phi"],
    }
    report.final_train_accuracy = evaluate(model, train)[0]
    report.final_test_accuracy = evaluate(model, test)[0] if test is not None else None
    return report


def train_classical(model: ClassicalBaseline, train: Dataset, config: TrainConfig, test: Dataset | None = None):
    return _run_phase(model, train, test, config, "joint")


def train_dqc(model: DQCModel, train: Dataset, config: TrainConfig, test: Dataset | None = None):
    """Joint updates of the pre-layer, circuit angles and post-layer."""
    return _run_phase(model, train, test, config, "joint")


def train_sequent(model: SequentModel, circuit: CircuitConfig, train: Dataset, config: TrainConfig,
                  test: Dataset | None = None):
    """Two-phase training; ``model`` ends up carrying the quantum head.

    Phase 1 fits the compression and surrogate layers.  The surrogate is then
    replaced by the circuit, the classical weights are frozen, and phase 2
    fits the circuit angles alone.
    """
    if model.mode != "surrogate":
        raise ConfigurationError("SEQUENT training starts from a model in surrogate mode")
    phase1 = _run_phase(model, train, test, config, "phase1")
    swapped = swap_surrogate_for_vqc(model, circuit, make_rng(config.seed, "quantum-init"))
    model.head = swapped.head
    model.frozen_classical = True
    theta = digest(model.theta())
    phase2 = _run_phase(model, train, test, config, "phase2")
    if phase2.digests["theta_after"] != theta:
        raise TrainingError("classical weights changed during the quantum phase")
    return phase1, phase2
