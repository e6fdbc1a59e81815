"""Dense statevector simulation for small qubit registers.

Basis convention: qubit ``q`` is bit ``q`` of the basis-state index, so
qubit 0 is the least significant bit.  ``|01>`` written as a bit string
``q1 q0`` therefore lives at index 1.

A state may carry trailing batch dimensions: ``amplitudes`` has shape
``(2**num_qubits, *batch)`` and rotation angles broadcast against
``batch``.  Keeping the batch innermost makes every gate a contiguous
vector operation.  All gate functions are pure and return a new state.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import ConfigurationError

MAX_QUBITS = 24
AXES = ("X", "Y", "Z")

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.ndim == 0 or self.amplitudes.shape[0] != 2**self.num_qubits:
            raise ConfigurationError(
                f"expected {2**self.num_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.amplitudes.shape[1:]

    def norm(self) -> np.ndarray:
        return np.linalg.norm(self.amplitudes, axis=0)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _check_qubits(num_qubits) -> int:
    if isinstance(num_qubits, bool) or not isinstance(num_qubits, (int, np.integer)):
        raise ConfigurationError(f"num_qubits must be an integer, got {num_qubits!r}")
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}")
    return int(num_qubits)


def _check_index(state: StateVector, qubit, name="qubit") -> int:
    if isinstance(qubit, bool) or not isinstance(qubit, (int, np.integer)):
        raise ConfigurationError(f"{name} must be an integer, got {qubit!r}")
    if not 0 <= qubit < state.num_qubits:
        raise ConfigurationError(
            f"{name} {qubit} out of range for a {state.num_qubits}-qubit register"
        )
    return int(qubit)


def _split(state: StateVector, qubit: int) -> np.ndarray:
    # (high, 2, low, *batch): axis 1 is the value of the selected bit
    n = state.num_qubits
    return state.amplitudes.reshape((2 ** (n - 1 - qubit), 2, 2**qubit) + state.batch_shape)


def init_zero(num_qubits: int, batch_shape: tuple[int, ...] = (), dtype=np.complex128) -> StateVector:
    """Return ``|0...0>``, optionally replicated over ``batch_shape``.

    ``dtype=np.float64`` is allowed for circuits made only of H, RY and
    CNOT, which keep amplitudes real; X/Z rotations promote to complex.
    """
    n = _check_qubits(num_qubits)
    amps = np.zeros((2**n,) + tuple(batch_shape), dtype=dtype)
    amps[0] = 1.0
    return StateVector(n, amps)


def apply_hadamard(state: StateVector, qubit: int) -> StateVector:
    q = _check_index(state, qubit)
    v = _split(state, q)
    a0, a1 = v[:, 0], v[:, 1]
    out = np.empty_like(v)
    np.add(a0, a1, out=out[:, 0])
    np.subtract(a0, a1, out=out[:, 1])
    out *= _INV_SQRT2
    return StateVector(state.num_qubits, out.reshape(state.amplitudes.shape))


def apply_rotation(state: StateVector, qubit: int, axis: str, angle) -> StateVector:
    """Apply ``exp(-i * angle/2 * P)`` for ``P`` in {X, Y, Z} to one qubit.

    ``angle`` is a scalar or an array broadcastable to the state's batch
    shape (one angle per batched state).
    """
    q = _check_index(state, qubit)
    if axis not in AXES:
        raise ConfigurationError(f"rotation axis must be one of {AXES}, got {axis!r}")
    angle = np.asarray(angle, dtype=np.float64)
    if not np.all(np.isfinite(angle)):
        raise ConfigurationError("rotation angle must be finite")
    half = np.broadcast_to(angle, state.batch_shape) / 2.0
    c, s = np.cos(half), np.sin(half)
    v = _split(state, q)
    a0, a1 = v[:, 0], v[:, 1]
    out = np.empty(v.shape, dtype=v.dtype if axis == "Y" else np.result_type(v.dtype, np.complex128))
    if axis == "Y":
        out[:, 0] = c * a0 - s * a1
        out[:, 1] = s * a0 + c * a1
    elif axis == "X":
        out[:, 0] = c * a0 - 1j * s * a1
        out[:, 1] = -1j * s * a0 + c * a1
    else:
        out[:, 0] = (c - 1j * s) * a0
        out[:, 1] = (c + 1j * s) * a1
    return StateVector(state.num_qubits, out.reshape(state.amplitudes.shape))


@lru_cache(maxsize=None)
def _cnot_permutation(num_qubits: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(2**num_qubits)
    fires = (idx >> control) & 1
    return idx ^ (fires << target)


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    c = _check_index(state, control, "control")
    t = _check_index(state, target, "target")
    if c == t:
        raise ConfigurationError("control and target must differ")
    perm = _cnot_permutation(state.num_qubits, c, t)
    return StateVector(state.num_qubits, np.take(state.amplitudes, perm, axis=0))


@lru_cache(maxsize=None)
def _z_signs(num_qubits: int, qubit: int) -> np.ndarray:
    bits = (np.arange(2**num_qubits) >> qubit) & 1
    return 1.0 - 2.0 * bits


def expect_z(state: StateVector, qubit: int):
    """Pauli-Z expectation of one qubit; a float, or an array over the batch."""
    q = _check_index(state, qubit)
    value = np.clip(np.tensordot(_z_signs(state.num_qubits, q), state.probabilities(), axes=1), -1.0, 1.0)
    return float(value) if np.ndim(value) == 0 else value
