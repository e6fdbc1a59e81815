import json

import numpy as np
import pytest

from sequent.ansatz import CircuitConfig, QuantumParams
from sequent.exceptions import ConfigurationError
from sequent.models import (
    ClassicalBaseline,
    DQCModel,
    IdentityBlock,
    QuantumBlock,
    SequentModel,
    SurrogateHead,
    backward,
    forward,
    identity_collapse_check,
    model_from_dict,
    model_to_dict,
    swap_surrogate_for_vqc,
    theta_digest,
)
from sequent.neural import Activation, DenseLayer, OptimizerState, adam_step
from sequent.rng import make_rng
from sequent.verify import finite_difference_model


@pytest.fixture
def rng():
    return make_rng(123, "tests/models")


def _quantum_sequent(rng, eta=3, depth=2, k=2, n=2):
    return swap_surrogate_for_vqc(SequentModel.build(n, k, eta, rng), CircuitConfig(eta, depth, k), rng)


class TestForward:
    def test_classical_shapes(self, rng):
        model = ClassicalBaseline.build(2, 2, 6, rng)
        assert forward(model, rng.standard_normal((7, 2))).shape == (7, 2)
        assert forward(model, np.zeros(2)).shape == (2,)

    def test_dqc_logits_finite(self, rng):
        model = DQCModel.build(2, 2, CircuitConfig(3, 2, 3), rng)
        out = model.forward(rng.standard_normal((1000, 2)) * 10)
        assert np.all(np.isfinite(out))

    def test_quantum_head_logits_bounded(self, rng):
        model = _quantum_sequent(rng)
        model.set_vector(["phi"], rng.uniform(-np.pi, np.pi, 6))
        out = model.forward(rng.standard_normal((1000, 2)) * 5)
        assert out.shape == (1000, 2)
        assert np.all(np.abs(out) <= 1.0)

    def test_surrogate_mode_is_two_dense_layers(self):
        comp = DenseLayer(np.eye(2), np.zeros(2), Activation.SCALED_TANH)
        sur = DenseLayer(np.eye(2), np.zeros(2), Activation.IDENTITY)
        model = SequentModel(comp, SurrogateHead(sur))
        x = np.array([[0.3, -1.2], [2.0, 0.1]])
        np.testing.assert_allclose(model.forward(x), (np.pi / 2) * np.tanh(x), atol=1e-15)

    def test_wrong_feature_count(self, rng):
        with pytest.raises(ConfigurationError):
            ClassicalBaseline.build(2, 2, 4, rng).forward(np.zeros((3, 5)))

    def test_predict_argmax(self):
        model = ClassicalBaseline(DenseLayer(np.eye(2), np.zeros(2), Activation.IDENTITY),
                                  DenseLayer(np.eye(2), np.zeros(2), Activation.IDENTITY))
        np.testing.assert_array_equal(model.predict(np.array([[0.1, 0.5], [0.5, 0.1]])), [1, 0])


class TestConstruction:
    def test_dqc_needs_all_qubits_measured(self, rng):
        with pytest.raises(ConfigurationError):
            DQCModel.build(2, 2, CircuitConfig(3, 1, 2), rng)

    def test_dqc_too_many_classes(self, rng):
        with pytest.raises(ConfigurationError):
            DQCModel.build(2, 4, CircuitConfig(3, 1, 3), rng)

    def test_sequent_too_many_classes(self, rng):
        with pytest.raises(ConfigurationError):
            SequentModel.build(2, 4, 3, rng)


class TestGradients:
    @pytest.mark.parametrize("loss", ["cross_entropy", "squared_error"])
    @pytest.mark.parametrize("which", ["classical", "dqc", "surrogate", "quantum", "unfrozen"])
    def test_against_finite_difference(self, rng, which, loss):
        if which == "classical":
            model = ClassicalBaseline.build(3, 2, 4, rng)
        elif which == "dqc":
            model = DQCModel.build(3, 2, CircuitConfig(3, 2, 3), rng)
        elif which == "surrogate":
            model = SequentModel.build(3, 2, 3, rng)
        else:
            model = _quantum_sequent(rng, n=3)
            model.set_vector(["phi"], rng.uniform(-np.pi, np.pi, 6))
            model.frozen_classical = which == "quantum"
        x = rng.standard_normal((5, 3))
        y = rng.integers(0, 2, 5)
        grads = backward(model, x, y, loss)
        fd = finite_difference_model(model, x, y, loss)
        assert set(grads) == set(fd)
        for name in fd:
            np.testing.assert_allclose(grads[name], fd[name], rtol=1e-4, atol=1e-7, err_msg=name)

    def test_frozen_has_only_phi(self, rng):
        model = _quantum_sequent(rng)
        grads = backward(model, rng.standard_normal((4, 2)), np.array([0, 1, 0, 1]))
        assert list(grads) == ["phi"]
        assert grads["phi"].shape == (2, 3)

    def test_single_sample(self, rng):
        model = ClassicalBaseline.build(2, 2, 3, rng)
        loss, logits, grads = model.loss_and_grads(np.array([0.1, 0.2]), 1)
        assert np.ndim(loss) == 0 and logits.shape == (2,)
        batch = model.loss_and_grads(np.array([[0.1, 0.2]]), np.array([1]))[2]
        for name in grads:
            np.testing.assert_allclose(grads[name], batch[name], atol=1e-15)


class TestIdentityCollapse:
    def test_outputs(self, rng):
        pre = DenseLayer(rng.standard_normal((6, 2)), rng.standard_normal(6), Activation.SCALED_TANH)
        post = DenseLayer(rng.standard_normal((2, 6)), rng.standard_normal(2), Activation.IDENTITY)
        assert identity_collapse_check(pre, post, rng.standard_normal((100, 2))) < 1e-12

    def test_stub_structure(self, rng):
        pre = DenseLayer(rng.standard_normal((4, 2)), np.zeros(4), Activation.SCALED_TANH)
        post = DenseLayer(rng.standard_normal((2, 4)), np.zeros(2), Activation.IDENTITY)
        stub = DQCModel(pre, IdentityBlock(4), post)
        assert "phi" not in stub.parameters()

    def test_mismatch(self, rng):
        pre = DenseLayer(np.zeros((3, 2)), np.zeros(3), Activation.TANH)
        post = DenseLayer(np.zeros((2, 4)), np.zeros(2), Activation.IDENTITY)
        with pytest.raises(ConfigurationError):
            identity_collapse_check(pre, post, np.zeros((1, 2)))


class TestSwap:
    def test_swap_installs_circuit(self, rng):
        seq = SequentModel.build(2, 2, 6, rng)
        quantum = swap_surrogate_for_vqc(seq, CircuitConfig(6, 10, 2), 7)
        assert quantum.mode == "quantum"
        assert quantum.frozen_classical
        assert quantum.trainable_names() == ["phi"]
        assert quantum.phi().size == 60
        assert np.all(np.abs(quantum.phi()) <= 0.01)
        np.testing.assert_array_equal(quantum.compression.weights, seq.compression.weights)
        np.testing.assert_array_equal(quantum.compression.bias, seq.compression.bias)

    def test_swap_is_seeded(self, rng):
        seq = SequentModel.build(2, 2, 3, rng)
        a = swap_surrogate_for_vqc(seq, CircuitConfig(3, 2, 2), 5).phi()
        b = swap_surrogate_for_vqc(seq, CircuitConfig(3, 2, 2), 5).phi()
        np.testing.assert_array_equal(a, b)

    def test_compression_weights_are_copied(self, rng):
        seq = SequentModel.build(2, 2, 3, rng)
        quantum = swap_surrogate_for_vqc(seq, CircuitConfig(3, 1, 2), 0)
        quantum.compression.weights[0, 0] += 1.0
        assert seq.compression.weights[0, 0] != quantum.compression.weights[0, 0]

    def test_already_quantum(self, rng):
        with pytest.raises(ConfigurationError, match="already"):
            swap_surrogate_for_vqc(_quantum_sequent(rng), CircuitConfig(3, 2, 2), 0)

    def test_output_mismatch(self, rng):
        with pytest.raises(ConfigurationError):
            swap_surrogate_for_vqc(SequentModel.build(2, 2, 3, rng), CircuitConfig(3, 2, 3), 0)

    def test_qubit_mismatch(self, rng):
        with pytest.raises(ConfigurationError):
            swap_surrogate_for_vqc(SequentModel.build(2, 2, 3, rng), CircuitConfig(4, 2, 2), 0)

    def test_compression_frozen_over_many_steps(self, rng):
        model = _quantum_sequent(rng)
        before = theta_digest(model)
        comp = model.compression.weights.copy()
        opt = OptimizerState(model.phi().size, learning_rate=0.05)
        for _ in range(100):
            x = rng.standard_normal((8, 2))
            y = rng.integers(0, 2, 8)
            grads = backward(model, x, y)
            names = model.trainable_names()
            new = adam_step(opt, model.get_vector(names), np.concatenate([grads[n].ravel() for n in names]))
            model.set_vector(names, new)
        assert theta_digest(model) == before
        np.testing.assert_array_equal(model.compression.weights, comp)


class TestSnapshot:
    @pytest.mark.parametrize("which", ["classical", "dqc", "surrogate", "quantum"])
    def test_roundtrip_bit_exact(self, rng, which):
        if which == "classical":
            model = ClassicalBaseline.build(2, 3, 5, rng)
        elif which == "dqc":
            model = DQCModel.build(2, 2, CircuitConfig(3, 2, 3, "X", "Y"), rng)
            model.set_vector(["phi"], rng.uniform(-3, 3, 6))
        elif which == "surrogate":
            model = SequentModel.build(2, 2, 4, rng)
        else:
            model = _quantum_sequent(rng)
            model.set_vector(["phi"], rng.uniform(-3, 3, 6))
        snap = json.loads(json.dumps(model_to_dict(model, seed=9)))
        restored = model_from_dict(snap)
        assert type(restored) is type(model)
        np.testing.assert_array_equal(restored.theta(), model.theta())
        np.testing.assert_array_equal(restored.phi(), model.phi())
        x = rng.standard_normal((20, 2))
        np.testing.assert_array_equal(restored.forward(x), model.forward(x))

    def test_bad_format(self):
        with pytest.raises(ConfigurationError, match="format"):
            model_from_dict({"format": "nope"})

    def test_truncated(self, rng):
        snap = model_to_dict(ClassicalBaseline.build(2, 2, 3, rng))
        snap["theta"] = snap["theta"][:-1]
        with pytest.raises(ConfigurationError):
            model_from_dict(snap)

    def test_missing_key(self, rng):
        snap = model_to_dict(ClassicalBaseline.build(2, 2, 3, rng))
        del snap["architecture"]
        with pytest.raises(ConfigurationError, match="corrupt"):
            model_from_dict(snap)


def test_quantum_block_checks_params():
    with pytest.raises(ConfigurationError):
        QuantumBlock(CircuitConfig(2, 1, 2), QuantumParams(np.zeros((2, 2))))
