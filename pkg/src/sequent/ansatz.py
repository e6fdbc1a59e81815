"""The layered variational circuit and its parameter-shift derivatives.

Circuit layout for ``num_qubits`` qubits and ``depth`` layers::

    H on every qubit, R_embed(z_q) on qubit q
    repeat depth times:
        CNOT(q -> q+1) for q = 0 .. num_qubits-2   (open chain)
        R_entangle(phi[layer, q]) on qubit q
    read <Z> on qubits 0 .. num_outputs-1

Every trainable or data-dependent angle enters through exactly one Pauli
rotation, so the two-point shift rule with shift pi/2 is exact for both
``phi`` and ``z``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import statevector as sv
from .exceptions import ConfigurationError

SHIFT = np.pi / 2


@dataclass(frozen=True)
class CircuitConfig:
    num_qubits: int
    depth: int
    num_outputs: int
    embed_axis: str = "Y"
    entangle_axis: str = "Y"

    def __post_init__(self):
        if not 1 <= self.num_qubits <= sv.MAX_QUBITS:
            raise ConfigurationError(f"num_qubits must be in [1, {sv.MAX_QUBITS}]")
        if self.depth < 0:
            raise ConfigurationError("depth must be >= 0")
        if not 1 <= self.num_outputs <= self.num_qubits:
            raise ConfigurationError(
                f"num_outputs must be in [1, num_qubits={self.num_qubits}], got {self.num_outputs}"
            )
        for name in ("embed_axis", "entangle_axis"):
            if getattr(self, name) not in sv.AXES:
                raise ConfigurationError(f"{name} must be one of {sv.AXES}")

    @property
    def num_params(self) -> int:
        return self.depth * self.num_qubits

    def to_dict(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "depth": self.depth,
            "num_outputs": self.num_outputs,
            "embed_axis": self.embed_axis,
            "entangle_axis": self.entangle_axis,
        }


@dataclass
class QuantumParams:
    """Entangling-layer angles, shape ``(depth, num_qubits)``."""

    angles: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=np.float64)
        if self.angles.ndim != 2:
            raise ConfigurationError("angles must be a (depth, num_qubits) matrix")
        if not np.all(np.isfinite(self.angles)):
            raise ConfigurationError("quantum angles must be finite")

    @classmethod
    def initialize(cls, config: CircuitConfig, rng: np.random.Generator, scale: float = 0.01):
        return cls(rng.uniform(-scale, scale, size=(config.depth, config.num_qubits)))

    def check(self, config: CircuitConfig) -> None:
        if self.angles.shape != (config.depth, config.num_qubits):
            raise ConfigurationError(
                f"angles shape {self.angles.shape} does not match "
                f"(depth={config.depth}, num_qubits={config.num_qubits})"
            )


def _check_inputs(z, config: CircuitConfig) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 0 or z.shape[-1] != config.num_qubits:
        raise ConfigurationError(
            f"expected {config.num_qubits} embedding angles, got shape {z.shape}"
        )
    return z


def _dtype(config: CircuitConfig):
    # H, RY and CNOT keep amplitudes real
    if config.embed_axis == "Y" and config.entangle_axis == "Y":
        return np.float64
    return np.complex128


def embed(z, config: CircuitConfig) -> sv.StateVector:
    """Hadamard on every qubit, then an ``embed_axis`` rotation by ``z_q``.

    ``z`` may have leading batch dimensions; they become the state's batch.
    """
    z = _check_inputs(z, config)
    state = sv.init_zero(config.num_qubits, z.shape[:-1], dtype=_dtype(config))
    for q in range(config.num_qubits):
        state = sv.apply_hadamard(state, q)
    for q in range(config.num_qubits):
        state = sv.apply_rotation(state, q, config.embed_axis, z[..., q])
    return state


def _cnot_chain(state: sv.StateVector, config: CircuitConfig) -> sv.StateVector:
    for q in range(config.num_qubits - 1):
        state = sv.apply_cnot(state, q, q + 1)
    return state


def _rotate_all(state: sv.StateVector, angles: np.ndarray, config: CircuitConfig) -> sv.StateVector:
    for q in range(config.num_qubits):
        state = sv.apply_rotation(state, q, config.entangle_axis, angles[..., q])
    return state


def entangle_layer(state: sv.StateVector, layer_angles, config: CircuitConfig) -> sv.StateVector:
    layer_angles = np.asarray(layer_angles, dtype=np.float64)
    if layer_angles.ndim == 0 or layer_angles.shape[-1] != config.num_qubits:
        raise ConfigurationError(
            f"expected {config.num_qubits} layer angles, got shape {layer_angles.shape}"
        )
    return _rotate_all(_cnot_chain(state, config), layer_angles, config)


def _readout(state: sv.StateVector, config: CircuitConfig) -> np.ndarray:
    # (sigma, *batch)
    return np.stack([sv.expect_z(state, k) for k in range(config.num_outputs)])


def vqc_evaluate(z, params: QuantumParams, config: CircuitConfig, *, wrt_params=True, wrt_inputs=True):
    """Outputs plus the requested shift-rule derivatives in one batched pass.

    Returns ``(outputs, grad_params, jacobian)`` with shapes
    ``(*batch, sigma)``, ``(*batch, sigma, depth, eta)`` and
    ``(*batch, sigma, eta)``; derivatives not requested are ``None``.

    Each shifted evaluation is a full circuit run, but the branch that
    shifts ``phi[l, q]`` is forked from the unshifted state right before
    layer ``l``'s rotations instead of being re-simulated from scratch.
    """
    z = _check_inputs(z, config)
    params.check(config)
    lead = z.shape[:-1]
    eta, depth, sigma = config.num_qubits, config.depth, config.num_outputs
    z2 = z.reshape(-1, eta)
    n = z2.shape[0]
    angles = params.angles
    shifts = SHIFT * np.stack((np.eye(eta), -np.eye(eta)), axis=1)  # (branch, +/-, qubit)

    if wrt_inputs:
        offsets = np.concatenate((np.zeros((1, eta)), shifts.reshape(2 * eta, eta)))
    else:
        offsets = np.zeros((1, eta))
    state = embed(offsets[:, None, :] + z2[None, :, :], config)  # batch (1 [+ 2 eta], n)

    track = wrt_params and depth > 0
    if track:
        branches = np.empty((2**eta, depth * eta, 2, n), dtype=_dtype(config))
    for layer in range(depth):
        done = layer * eta
        if track and done:
            old = entangle_layer(sv.StateVector(eta, branches[:, :done]), angles[layer], config)
            branches[:, :done] = old.amplitudes
        state = _cnot_chain(state, config)
        if track:
            base = state.amplitudes[:, 0]
            fork = sv.StateVector(eta, np.broadcast_to(base[:, None, None, :], (2**eta, eta, 2, n)))
            fork = _rotate_all(fork, (angles[layer] + shifts)[:, :, None, :], config)
            branches[:, done:done + eta] = fork.amplitudes
        state = _rotate_all(state, angles[layer], config)

    values = _readout(state, config)  # (sigma, 1 [+ 2 eta], n)
    outputs = values[:, 0].T.reshape(lead + (sigma,))

    grad = None
    if track:
        shifted = _readout(sv.StateVector(eta, branches), config)  # (sigma, P, 2, n)
        diff = (shifted[:, :, 0] - shifted[:, :, 1]) / 2.0
        grad = np.moveaxis(diff, -1, 0).reshape(lead + (sigma, depth, eta))
    elif wrt_params:
        grad = np.zeros(lead + (sigma, 0, eta))

    jac = None
    if wrt_inputs:
        shifted = values[:, 1:].reshape(sigma, eta, 2, n)
        diff = (shifted[:, :, 0] - shifted[:, :, 1]) / 2.0
        jac = np.moveaxis(diff, -1, 0).reshape(lead + (sigma, eta))
    return outputs, grad, jac


def vqc_forward(z, params: QuantumParams, config: CircuitConfig) -> np.ndarray:
    """Expectations ``<Z_k>`` for k < num_outputs; accepts a batch of inputs."""
    return vqc_evaluate(z, params, config, wrt_params=False, wrt_inputs=False)[0]


def param_shift_grad(z, params: QuantumParams, config: CircuitConfig) -> np.ndarray:
    """d output_k / d phi[l, q], shape ``(*batch, sigma, depth, eta)``."""
    return vqc_evaluate(z, params, config, wrt_inputs=False)[1]


def input_jacobian(z, params: QuantumParams, config: CircuitConfig) -> np.ndarray:
    """d output_k / d z_q, shape ``(*batch, sigma, eta)``."""
    return vqc_evaluate(z, params, config, wrt_params=False)[2]
