"""Hybrid quantum-classical classifiers on a dense statevector simulator.

Three architectures share one simulator and one training loop:

* :class:`ClassicalClassifier` - two-layer tanh network,
* :class:`DQCClassifier` - dense layer, variational circuit, dense layer,
  trained jointly,
* :class:`SequentClassifier` - compression layer pre-trained with a
  surrogate classical head, then frozen while a circuit head is trained.
"""

from .ansatz import CircuitConfig, QuantumParams, input_jacobian, param_shift_grad, vqc_forward
from .data import Dataset, load_features_csv, make_moons, make_spirals, split, standardize
from .estimators import ClassicalClassifier, DQCClassifier, SequentClassifier, Standardizer
from .exceptions import ConfigurationError, TrainingError
from .models import (
    ClassicalBaseline,
    DQCModel,
    SequentModel,
    identity_collapse_check,
    swap_surrogate_for_vqc,
)
from .training import TrainConfig, TrainingReport, evaluate, train_classical, train_dqc, train_sequent

__version__ = "0.1.0"

__all__ = [
    "CircuitConfig",
    "ClassicalBaseline",
    "ClassicalClassifier",
    "ConfigurationError",
    "DQCClassifier",
    "DQCModel",
    "Dataset",
    "QuantumParams",
    "SequentClassifier",
    "SequentModel",
    "Standardizer",
    "TrainConfig",
    "TrainingError",
    "TrainingReport",
    "evaluate",
    "identity_collapse_check",
    "input_jacobian",
    "load_features_csv",
    "make_moons",
    "make_spirals",
    "param_shift_grad",
    "split",
    "standardize",
    "swap_surrogate_for_vqc",
    "train_classical",
    "train_dqc",
    "train_sequent",
    "vqc_forward",
]
