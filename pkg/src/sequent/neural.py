"""Dense layers, losses and the Adam optimizer, in plain numpy.

Inputs may be a single vector ``(in_dim,)`` or a batch ``(batch, in_dim)``.
For batches, :func:`dense_backward` returns parameter gradients summed over
the batch rows in index order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, TrainingError

HALF_PI = np.pi / 2


class Activation(str, enum.Enum):
    IDENTITY = "identity"
    TANH = "tanh"
    SCALED_TANH = "scaled_tanh"  # (pi/2) * tanh, maps into rotation angles

    def __call__(self, a: np.ndarray) -> np.ndarray:
        if self is Activation.IDENTITY:
            return a
        if self is Activation.TANH:
            return np.tanh(a)
        return HALF_PI * np.tanh(a)

    def derivative(self, a: np.ndarray) -> np.ndarray:
        if self is Activation.IDENTITY:
            return np.ones_like(a)
        t = np.tanh(a)
        if self is Activation.TANH:
            return 1.0 - t * t
        return HALF_PI * (1.0 - t * t)


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray  # (out_dim,)
    activation: Activation = Activation.IDENTITY

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        self.activation = Activation(self.activation)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ConfigurationError(
                f"inconsistent layer shapes: weights {self.weights.shape}, bias {self.bias.shape}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ConfigurationError("layer parameters must be finite")

    @classmethod
    def initialize(cls, in_dim: int, out_dim: int, activation, rng: np.random.Generator):
        """Uniform(-1/sqrt(in_dim), 1/sqrt(in_dim)) weights, zero bias."""
        bound = 1.0 / np.sqrt(in_dim)
        w = rng.uniform(-bound, bound, size=(out_dim, in_dim))
        return cls(w, np.zeros(out_dim), activation)

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    def copy(self) -> DenseLayer:
        return DenseLayer(self.weights.copy(), self.bias.copy(), self.activation)


def _check_input(layer: DenseLayer, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] != layer.in_dim:
        raise ConfigurationError(f"expected input of width {layer.in_dim}, got shape {x.shape}")
    return x


def dense_forward(layer: DenseLayer, x) -> np.ndarray:
    x = _check_input(layer, x)
    return layer.activation(x @ layer.weights.T + layer.bias)


def dense_backward(layer: DenseLayer, x, upstream):
    """Chain rule through one layer.

    Returns ``(grad_weights, grad_bias, grad_input)``; parameter gradients
    are summed over batch rows, ``grad_input`` keeps the batch shape.
    """
    x = _check_input(layer, x)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != x.shape[:-1] + (layer.out_dim,):
        raise ConfigurationError(
            f"upstream shape {upstream.shape} does not match output {x.shape[:-1] + (layer.out_dim,)}"
        )
    pre = x @ layer.weights.T + layer.bias
    delta = upstream * layer.activation.derivative(pre)
    if x.ndim == 1:
        grad_w = np.outer(delta, x)
        grad_b = delta
    else:
        grad_w = delta.T @ x
        grad_b = delta.sum(axis=0)
    return grad_w, grad_b, delta @ layer.weights


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _check_targets(logits, target):
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim == 0 or logits.shape[-1] == 0:
        raise ConfigurationError("logits must be non-empty")
    target = np.asarray(target)
    k = logits.shape[-1]
    if target.shape != logits.shape[:-1]:
        raise ConfigurationError(f"target shape {target.shape} does not match logits {logits.shape}")
    if np.any((target < 0) | (target >= k)):
        raise ConfigurationError(f"target class out of range for {k} logits")
    return logits, target.astype(np.intp), k


def softmax_cross_entropy(logits, target_class):
    """Per-sample ``-log softmax(logits)[target]`` and its gradient."""
    logits, target, k = _check_targets(logits, target_class)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=-1))
    picked = np.take_along_axis(shifted, target[..., None], axis=-1)[..., 0]
    loss = log_z - picked
    grad = softmax(logits) - np.eye(k)[target]
    return (float(loss) if loss.ndim == 0 else loss), grad


def squared_error(logits, target_class):
    """Per-sample ``sum_k (onehot_k - logits_k)^2`` and its gradient."""
    logits, target, k = _check_targets(logits, target_class)
    residual = logits - np.eye(k)[target]
    loss = np.sum(residual**2, axis=-1)
    return (float(loss) if loss.ndim == 0 else loss), 2.0 * residual


LOSSES = {"cross_entropy": softmax_cross_entropy, "squared_error": squared_error}


@dataclass
class OptimizerState:
    """Adam state for one flat parameter vector."""

    size: int
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigurationError("learning_rate must be non-negative")
        if self.m is None:
            self.m = np.zeros(self.size)
        if self.v is None:
            self.v = np.zeros(self.size)


def adam_step(state: OptimizerState, params, grads) -> np.ndarray:
    """One bias-corrected Adam update; mutates ``state``, returns new params."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != (state.size,) or grads.shape != (state.size,):
        raise ConfigurationError(
            f"expected flat vectors of size {state.size}, got {params.shape} and {grads.shape}"
        )
    if not np.all(np.isfinite(grads)):
        bad = np.flatnonzero(~np.isfinite(grads))
        raise TrainingError(f"non-finite gradient at {bad.size} entries (first index {bad[0]})")
    state.step += 1
    with np.errstate(over="ignore"):
        state.v = state.beta2 * state.v + (1 - state.beta2) * grads**2
    state.m = state.beta1 * state.m + (1 - state.beta1) * grads
    m_hat = state.m / (1 - state.beta1**state.step)
    v_hat = state.v / (1 - state.beta2**state.step)
    with np.errstate(over="ignore"):
        updated = params - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    if not (np.all(np.isfinite(state.v)) and np.all(np.isfinite(updated))):
        raise TrainingError("optimizer state overflowed (gradients too large)")
    return updated
