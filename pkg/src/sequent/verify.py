"""Fast self-checks: simulator against dense matrices, gradients against
finite differences, and the structural properties the models rely on.

The simulator is always reached through the ``statevector`` module
attributes, so a patched gate (fault injection) is seen by the checks.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import ansatz
from . import statevector as sv
from .ansatz import CircuitConfig, QuantumParams
from .models import DQCModel, IdentityBlock, SequentModel, ClassicalBaseline, identity_collapse_check, swap_surrogate_for_vqc
from .neural import Activation, DenseLayer
from .rng import make_rng

I2 = np.eye(2, dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
# basis index = q0 + 2*q1
CNOT_01 = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)
CNOT_10 = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if axis == "X":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if axis == "Y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    return np.array([[c - 1j * s, 0], [0, c + 1j * s]])


def _on_qubit(u: np.ndarray, qubit: int) -> np.ndarray:
    # two-qubit register; kron puts its first factor on the high bit
    return np.kron(I2, u) if qubit == 0 else np.kron(u, I2)


def random_gates(rng: np.random.Generator, num_qubits: int, length: int) -> list[tuple]:
    gates = []
    for _ in range(length):
        kind = rng.integers(3 if num_qubits > 1 else 2)
        if kind == 0:
            gates.append(("H", int(rng.integers(num_qubits))))
        elif kind == 1:
            axis = ("X", "Y", "Z")[rng.integers(3)]
            gates.append(("R", int(rng.integers(num_qubits)), axis, float(rng.uniform(-2 * np.pi, 2 * np.pi))))
        else:
            c, t = rng.choice(num_qubits, size=2, replace=False)
            gates.append(("CNOT", int(c), int(t)))
    return gates


def simulate(gates, num_qubits: int) -> np.ndarray:
    state = sv.init_zero(num_qubits)
    for gate in gates:
        if gate[0] == "H":
            state = sv.apply_hadamard(state, gate[1])
        elif gate[0] == "R":
            state = sv.apply_rotation(state, gate[1], gate[2], gate[3])
        else:
            state = sv.apply_cnot(state, gate[1], gate[2])
    return state.amplitudes


def dense_oracle(gates) -> np.ndarray:
    """Two-qubit reference: explicit 4x4 matrix products."""
    psi = np.zeros(4, dtype=complex)
    psi[0] = 1
    for gate in gates:
        if gate[0] == "H":
            u = _on_qubit(H, gate[1])
        elif gate[0] == "R":
            u = _on_qubit(rotation_matrix(gate[2], gate[3]), gate[1])
        else:
            u = CNOT_01 if gate[1:] == (0, 1) else CNOT_10
        psi = u @ psi
    return psi


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def check_simulator_oracle(n_sequences: int = 1000, seed: int = 1) -> CheckResult:
    rng = make_rng(seed, "verify/oracle")
    worst = 0.0
    for _ in range(n_sequences):
        gates = random_gates(rng, 2, int(rng.integers(1, 21)))
        worst = max(worst, float(np.max(np.abs(simulate(gates, 2) - dense_oracle(gates)))))
    return CheckResult("simulator_oracle", worst < 1e-12,
                       f"{n_sequences} two-qubit sequences, max deviation {worst:.2e} (tol 1e-12)")


def check_norm(n_sequences: int = 50, seed: int = 2, num_qubits: int | None = None) -> CheckResult:
    """Norm drift over random sequences; qubit count drawn from 1..6 unless fixed."""
    rng = make_rng(seed, "verify/norm")
    worst = 0.0
    for _ in range(n_sequences):
        n = num_qubits or int(rng.integers(1, 7))
        amps = simulate(random_gates(rng, n, int(rng.integers(1, 101))), n)
        worst = max(worst, abs(float(np.linalg.norm(amps)) - 1.0))
    return CheckResult("norm_preservation", worst < 1e-10,
                       f"{n_sequences} sequences up to length 100 on {num_qubits or '<= 6'} qubits, max |norm-1| {worst:.2e} (tol 1e-10)")


def check_roundtrip(n_trials: int = 200, seed: int = 3) -> CheckResult:
    rng = make_rng(seed, "verify/roundtrip")
    worst = 0.0
    for _ in range(n_trials):
        n = int(rng.integers(2, 5))
        raw = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
        state = sv.StateVector(n, raw / np.linalg.norm(raw))
        (gate,) = random_gates(rng, n, 1)
        if gate[0] == "H":
            out = sv.apply_hadamard(sv.apply_hadamard(state, gate[1]), gate[1])
        elif gate[0] == "R":
            out = sv.apply_rotation(sv.apply_rotation(state, gate[1], gate[2], gate[3]), gate[1], gate[2], -gate[3])
        else:
            out = sv.apply_cnot(sv.apply_cnot(state, gate[1], gate[2]), gate[1], gate[2])
        worst = max(worst, float(np.max(np.abs(out.amplitudes - state.amplitudes))))
    return CheckResult("unitarity_roundtrip", worst < 1e-12,
                       f"{n_trials} gate/inverse pairs, max deviation {worst:.2e} (tol 1e-12)")


def _random_circuit(rng, max_qubits=4, max_depth=3, axes=None):
    eta = int(rng.integers(1, max_qubits + 1))
    depth = int(rng.integers(0, max_depth + 1))
    sigma = int(rng.integers(1, eta + 1))
    embed_axis, entangle_axis = axes or (sv.AXES[rng.integers(3)], sv.AXES[rng.integers(3)])
    config = CircuitConfig(eta, depth, sigma, embed_axis, entangle_axis)
    params = QuantumParams(rng.uniform(-np.pi, np.pi, size=(depth, eta)))
    z = rng.uniform(-np.pi / 2, np.pi / 2, size=eta)
    return config, params, z


def finite_difference_vqc(z, params: QuantumParams, config: CircuitConfig, step: float = 1e-4):
    """Central differences of the forward pass w.r.t. angles and inputs."""
    def f(zz, angles):
        return ansatz.vqc_forward(zz, QuantumParams(angles), config)

    grad = np.zeros((config.num_outputs,) + params.angles.shape)
    for idx in np.ndindex(params.angles.shape):
        up, down = params.angles.copy(), params.angles.copy()
        up[idx] += step
        down[idx] -= step
        grad[(slice(None),) + idx] = (f(z, up) - f(z, down)) / (2 * step)
    jac = np.zeros((config.num_outputs, config.num_qubits))
    for q in range(config.num_qubits):
        up, down = np.array(z, dtype=float), np.array(z, dtype=float)
        up[q] += step
        down[q] -= step
        jac[:, q] = (f(up, params.angles) - f(down, params.angles)) / (2 * step)
    return grad, jac


def check_parameter_shift(n_instances: int = 200, seed: int = 4) -> CheckResult:
    rng = make_rng(seed, "verify/shift")
    worst = 0.0
    for _ in range(n_instances):
        config, params, z = _random_circuit(rng)
        grad = ansatz.param_shift_grad(z, params, config)
        jac = ansatz.input_jacobian(z, params, config)
        fd_grad, fd_jac = finite_difference_vqc(z, params, config)
        worst = max(worst, float(np.max(np.abs(grad - fd_grad), initial=0.0)),
                    float(np.max(np.abs(jac - fd_jac))))
    return CheckResult("parameter_shift_vs_finite_difference", worst < 1e-5,
                       f"{n_instances} random circuits (eta<=4, depth<=3), max deviation {worst:.2e} (tol 1e-5)")


def finite_difference_model(model, x, y, loss="cross_entropy", step: float = 1e-4) -> dict:
    """Central differences of the batch-mean loss for every trainable parameter."""
    params = model.parameters()
    out = {}
    for name in model.trainable_names():
        arr = params[name]
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            keep = arr[idx]
            arr[idx] = keep + step
            up = np.mean(model.loss_and_grads(x, y, loss)[0])
            arr[idx] = keep - step
            down = np.mean(model.loss_and_grads(x, y, loss)[0])
            arr[idx] = keep
            g[idx] = (up - down) / (2 * step)
        out[name] = g
    return out


def _model_instances(rng):
    n, k = 3, 2
    for eta in (2, 3):
        for depth in (1, 2):
            yield DQCModel.build(n, k, CircuitConfig(eta, depth, eta), rng)
            seq = SequentModel.build(n, k, eta, rng)
            yield seq
            quantum = swap_surrogate_for_vqc(seq, CircuitConfig(eta, depth, k), rng)
            quantum.set_vector(["phi"], rng.uniform(-np.pi, np.pi, size=depth * eta))
            yield quantum
            unfrozen = swap_surrogate_for_vqc(seq, CircuitConfig(eta, depth, k), rng)
            unfrozen.frozen_classical = False
            yield unfrozen
    yield ClassicalBaseline.build(n, k, 3, rng)


def check_model_gradients(seed: int = 5, rtol: float = 1e-4, atol: float = 1e-7) -> CheckResult:
    rng = make_rng(seed, "verify/models")
    worst = 0.0
    count = 0
    for model in _model_instances(rng):
        x = rng.standard_normal((4, model.n_features))
        y = rng.integers(0, model.n_classes, size=4)
        for loss in ("cross_entropy", "squared_error"):
            grads = model.loss_and_grads(x, y, loss)[2]
            fd = finite_difference_model(model, x, y, loss)
            if set(grads) != set(fd):
                return CheckResult("model_gradients_vs_finite_difference", False,
                                   f"{model.kind}: gradient keys {sorted(grads)} != trainable {sorted(fd)}")
            for name in fd:
                excess = np.abs(grads[name] - fd[name]) - (atol + rtol * np.abs(fd[name]))
                worst = max(worst, float(np.max(excess / (atol + rtol * np.abs(fd[name])), initial=-1.0)))
            count += 1
    # worst <= 0 means every entry is inside atol + rtol*|fd|
    return CheckResult("model_gradients_vs_finite_difference", worst <= 0,
                       f"{count} model/loss combinations, rtol {rtol} (atol {atol})")


def check_identity_collapse(n_inputs: int = 100, seed: int = 6) -> CheckResult:
    rng = make_rng(seed, "verify/collapse")
    pre = DenseLayer(rng.standard_normal((6, 2)), rng.standard_normal(6), Activation.SCALED_TANH)
    post = DenseLayer(rng.standard_normal((2, 6)), rng.standard_normal(2), Activation.IDENTITY)
    samples = rng.standard_normal((n_inputs, 2))
    dev = identity_collapse_check(pre, post, samples)
    stub = DQCModel(pre, IdentityBlock(6), post)
    y = rng.integers(0, 2, size=n_inputs)
    g_stub = stub.loss_and_grads(samples, y)[2]
    g_net = ClassicalBaseline(pre, post).loss_and_grads(samples, y)[2]
    pairs = {"pre.weights": "hidden.weights", "pre.bias": "hidden.bias",
             "post.weights": "output.weights", "post.bias": "output.bias"}
    gdev = max(float(np.max(np.abs(g_stub[a] - g_net[b]))) for a, b in pairs.items())
    ok = dev < 1e-12 and gdev < 1e-12
    return CheckResult("identity_collapse", ok,
                       f"output deviation {dev:.2e}, gradient deviation {gdev:.2e} (tol 1e-12)")


def check_all_z(n_draws: int = 100, seed: int = 7) -> CheckResult:
    rng = make_rng(seed, "verify/allz")
    worst = 0.0
    for _ in range(n_draws):
        config, params, z = _random_circuit(rng, axes=("Z", "Z"))
        worst = max(worst, float(np.max(np.abs(ansatz.vqc_forward(z, params, config)))))
    return CheckResult("all_z_degeneracy", worst < 1e-12,
                       f"{n_draws} all-Z circuits, max |output| {worst:.2e} (tol 1e-12)")


CHECKS = (
    check_simulator_oracle,
    check_norm,
    check_roundtrip,
    check_parameter_shift,
    check_model_gradients,
    check_identity_collapse,
    check_all_z,
)


def run_checks(echo=print) -> list[CheckResult]:
    results = []
    for check in CHECKS:
        started = time.perf_counter()
        try:
            result = check()
        except Exception as exc:  # a crash is a failed check, reported by name
            result = CheckResult(check.__name__.removeprefix("check_"), False, f"raised {exc!r}")
        result.seconds = time.perf_counter() - started
        if echo is not None:
            echo(result.line())
        results.append(result)
    return results
