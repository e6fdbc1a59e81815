"""scikit-learn compatible wrappers around the three training regimes.

The estimators follow the usual conventions (constructor only stores
hyperparameters, fitted state ends in ``_``) so they work with
``Pipeline``, ``clone``, ``GridSearchCV`` and friends::

    from sklearn.pipeline import make_pipeline
    clf = make_pipeline(Standardizer(), SequentClassifier(random_state=42))
    clf.fit(X, y).score(X_test, y_test)
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .ansatz import CircuitConfig
from .data import Dataset, fit_standardization
from .exceptions import ConfigurationError
from .models import ClassicalBaseline, DQCModel, SequentModel
from .neural import softmax
from .rng import make_rng
from .training import TrainConfig, train_classical, train_dqc, train_sequent

DEFAULT_LEARNING_RATE = 0.1


class Standardizer(TransformerMixin, BaseEstimator):
    """Zero-mean, unit-variance scaling that refuses constant features."""

    def fit(self, X, y=None):
        X = check_array(X)
        self.stats_ = fit_standardization(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "stats_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return self.stats_.apply(X)


class _HybridClassifier(ClassifierMixin, BaseEstimator):
    kind: str

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            seed=self.random_state,
            loss=self.loss,
        )

    def _encode(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_, codes = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise ValueError("need at least two classes")
        self.n_features_in_ = X.shape[1]
        return X, codes

    def _dataset(self, X, codes, tag):
        return Dataset(X, codes, len(self.classes_), tag)

    def _eval_dataset(self, eval_set):
        if eval_set is None:
            return None
        Xe, ye = check_X_y(*eval_set)
        lookup = {c: i for i, c in enumerate(self.classes_)}
        try:
            codes = np.array([lookup[v] for v in ye])
        except KeyError as exc:
            raise ValueError(f"eval_set contains unseen label {exc.args[0]!r}") from None
        return self._dataset(Xe, codes, "eval_set")

    def fit(self, X, y, eval_set=None):
        """Train on ``(X, y)``; ``eval_set=(X_test, y_test)`` adds per-epoch test accuracy."""
        X, codes = self._encode(X, y)
        config = self._train_config()
        train = self._dataset(X, codes, "fit")
        test = self._eval_dataset(eval_set)
        rng = make_rng(config.seed, f"init/{self.kind}")
        self.model_ = self._build(X.shape[1], len(self.classes_), rng)
        self.reports_ = self._train(train, test, config)
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        logits = self.model_.forward(X)
        if logits.shape[1] == 2:
            return logits[:, 1] - logits[:, 0]
        return logits

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        return softmax(self.model_.forward(check_array(X)))

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.classes_[self.model_.predict(check_array(X))]


class ClassicalClassifier(_HybridClassifier):
    """Two-layer tanh network, the classical reference point."""

    kind = "classical"

    def __init__(self, hidden=6, epochs=4, batch_size=32, learning_rate=DEFAULT_LEARNING_RATE,
                 loss="cross_entropy", random_state=0):
        self.hidden = hidden
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.loss = loss
        self.random_state = random_state

    def _build(self, n_features, n_classes, rng):
        return ClassicalBaseline.build(n_features, n_classes, self.hidden, rng)

    def _train(self, train, test, config):
        return [train_classical(self.model_, train, config, test)]


class _CircuitMixin:
    def _circuit(self, num_outputs) -> CircuitConfig:
        return CircuitConfig(self.n_qubits, self.depth, num_outputs, self.embed_axis, self.entangle_axis)


class DQCClassifier(_CircuitMixin, _HybridClassifier):
    """Dressed quantum circuit: dense layer, circuit, dense layer, trained jointly."""

    kind = "dqc"

    def __init__(self, n_qubits=6, depth=10, embed_axis="Y", entangle_axis="Y", epochs=4, batch_size=32,
                 learning_rate=DEFAULT_LEARNING_RATE, loss="cross_entropy", random_state=0):
        self.n_qubits = n_qubits
        self.depth = depth
        self.embed_axis = embed_axis
        self.entangle_axis = entangle_axis
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.loss = loss
        self.random_state = random_state

    def _build(self, n_features, n_classes, rng):
        return DQCModel.build(n_features, n_classes, self._circuit(self.n_qubits), rng)

    def _train(self, train, test, config):
        return [train_dqc(self.model_, train, config, test)]


class SequentClassifier(_CircuitMixin, _HybridClassifier):
    """Compression layer plus circuit, trained classical-first then quantum-only.

    ``epochs`` is applied to each of the two phases.  After ``fit``,
    ``reports_`` holds one report per phase.
    """

    kind = "sequent"

    def __init__(self, n_qubits=6, depth=10, embed_axis="Y", entangle_axis="Y", epochs=2, batch_size=32,
                 learning_rate=DEFAULT_LEARNING_RATE, loss="cross_entropy", random_state=0):
        self.n_qubits = n_qubits
        self.depth = depth
        self.embed_axis = embed_axis
        self.entangle_axis = entangle_axis
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.loss = loss
        self.random_state = random_state

    def _build(self, n_features, n_classes, rng):
        if n_classes > self.n_qubits:
            raise ConfigurationError(f"{n_classes} classes need at least {n_classes} qubits")
        return SequentModel.build(n_features, n_classes, self.n_qubits, rng)

    def _train(self, train, test, config):
        circuit = self._circuit(len(self.classes_))
        return list(train_sequent(self.model_, circuit, train, config, test))


ESTIMATORS = {"classical": ClassicalClassifier, "dqc": DQCClassifier, "sequent": SequentClassifier}
