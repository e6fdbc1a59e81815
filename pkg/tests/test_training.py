import json

import numpy as np
import pytest

from sequent.ansatz import CircuitConfig
from sequent.data import Dataset, make_moons, split, standardize
from sequent.exceptions import ConfigurationError, TrainingError
from sequent.models import ClassicalBaseline, DQCModel, SequentModel, theta_digest
from sequent.rng import make_rng
from sequent.training import TrainConfig, evaluate, train_classical, train_dqc, train_sequent


@pytest.fixture(scope="module")
def moons():
    train, test = split(make_moons(200, 0.1, seed=1), 0.3, seed=1)
    train, test, _ = standardize(train, test)
    return train, test


def _classical(seed=0):
    return ClassicalBaseline.build(2, 2, 6, make_rng(seed, "init"))


class TestConfig:
    @pytest.mark.parametrize("kwargs", [dict(epochs=-1), dict(batch_size=0), dict(learning_rate=-1.0),
                                        dict(loss="hinge"), dict(seed=-3), dict(learning_rate=float("nan"))])
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigurationError):
            TrainConfig(**kwargs)


class TestClassical:
    def test_separable_points(self):
        x = np.array([[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]])
        ds = Dataset(x, np.array([0, 0, 1, 1]), 2, "four points")
        model = _classical()
        report = train_classical(model, ds, TrainConfig(epochs=200, batch_size=4, learning_rate=0.01))
        assert report.final_train_accuracy == 1.0
        assert len(report.epochs) == 200

    def test_zero_epochs(self, moons):
        model = _classical()
        before = model.theta().copy()
        report = train_classical(model, moons[0], TrainConfig(epochs=0))
        assert report.epochs == []
        np.testing.assert_array_equal(model.theta(), before)
        assert report.digests["theta_before"] == report.digests["theta_after"]

    def test_deterministic(self, moons):
        reports = []
        for _ in range(2):
            model = _classical(3)
            report = train_classical(model, moons[0], TrainConfig(epochs=2, seed=3), moons[1])
            reports.append(json.dumps(report.to_dict(), sort_keys=True))
        assert reports[0] == reports[1]

    def test_report_contents(self, moons):
        report = train_classical(_classical(), moons[0], TrainConfig(epochs=2), moons[1])
        assert report.num_trained_parameters == 6 * 2 + 6 + 2 * 6 + 2
        assert [m.epoch for m in report.epochs] == [1, 2]
        assert all(0 <= m.train_acc <= 1 and 0 <= m.test_acc <= 1 for m in report.epochs)
        assert "wall_clock_seconds" not in report.to_dict()
        assert report.to_dict(timing=True)["wall_clock_seconds"] >= 0
        rows = list(report.csv_rows())
        assert rows[0][:2] == ("joint", 1)

    def test_divergence_is_reported(self, moons):
        model = _classical()
        model.output.weights[...] = 1e300
        with pytest.raises(TrainingError, match=r"classical/joint: epoch 1, step \d+"):
            train_classical(model, moons[0], TrainConfig(epochs=1))

    def test_shape_mismatch(self):
        ds = Dataset(np.zeros((4, 3)), np.array([0, 1, 0, 1]), 2, "t")
        with pytest.raises(ConfigurationError):
            train_classical(_classical(), ds, TrainConfig(epochs=1))


class TestDQC:
    def test_zero_learning_rate(self, moons):
        model = DQCModel.build(2, 2, CircuitConfig(3, 2, 3), make_rng(0, "init"))
        theta, phi = model.theta().copy(), model.phi().copy()
        train_dqc(model, moons[0].subset(np.arange(8)), TrainConfig(epochs=1, batch_size=8, learning_rate=0.0))
        np.testing.assert_array_equal(model.theta(), theta)
        np.testing.assert_array_equal(model.phi(), phi)

    def test_loss_decreases(self, moons):
        model = DQCModel.build(2, 2, CircuitConfig(3, 2, 3), make_rng(0, "init"))
        x, y = moons[0].features, moons[0].labels
        start = np.mean(model.loss_and_grads(x, y)[0])
        report = train_dqc(model, moons[0], TrainConfig(epochs=2, learning_rate=0.05))
        assert report.epochs[-1].train_loss < start
        assert report.num_trained_parameters == 3 * 2 + 3 + 6 + 2 * 3 + 2


class TestSequent:
    def test_two_phases(self, moons):
        model = SequentModel.build(2, 2, 3, make_rng(0, "init"))
        circuit = CircuitConfig(3, 2, 2)
        p1, p2 = train_sequent(model, circuit, moons[0], TrainConfig(epochs=1, learning_rate=0.05), moons[1])
        assert model.mode == "quantum" and model.frozen_classical
        assert p1.phase == "phase1" and p2.phase == "phase2"
        assert p2.trained_parameters == ["phi"]
        assert p2.num_trained_parameters == circuit.num_params
        assert p2.digests["theta_before"] == p2.digests["theta_after"] == theta_digest(model)
        assert p2.digests["phi_before"] != p2.digests["phi_after"]
        assert p1.digests["theta_before"] != p1.digests["theta_after"]

    def test_benchmark_shape_counts(self, moons):
        model = SequentModel.build(2, 2, 6, make_rng(0, "init"))
        _, p2 = train_sequent(model, CircuitConfig(6, 10, 2), moons[0].subset(np.arange(16)),
                              TrainConfig(epochs=1, batch_size=16))
        assert p2.num_trained_parameters == 60

    def test_requires_surrogate(self, moons):
        model = SequentModel.build(2, 2, 3, make_rng(0, "init"))
        train_sequent(model, CircuitConfig(3, 1, 2), moons[0].subset(np.arange(4)), TrainConfig(epochs=0))
        with pytest.raises(ConfigurationError, match="surrogate"):
            train_sequent(model, CircuitConfig(3, 1, 2), moons[0], TrainConfig(epochs=0))

    def test_swap_error_surfaces(self, moons):
        model = SequentModel.build(2, 2, 3, make_rng(0, "init"))
        with pytest.raises(ConfigurationError):
            train_sequent(model, CircuitConfig(3, 1, 3), moons[0], TrainConfig(epochs=0))


class TestEvaluate:
    def test_perfect(self):
        model = _classical()
        ds = Dataset(np.zeros((3, 2)), model.predict(np.zeros((3, 2))), 2, "t")
        acc, confusion = evaluate(model, ds)
        assert acc == 1.0
        assert confusion.sum() == 3 and np.trace(confusion) == 3

    def test_confusion_layout(self):
        model = _classical()
        pred = model.predict(np.zeros((1, 2)))[0]
        ds = Dataset(np.zeros((4, 2)), np.array([0, 0, 1, 1]), 2, "t")
        acc, confusion = evaluate(model, ds)
        assert acc == 0.5
        np.testing.assert_array_equal(confusion[:, pred], [2, 2])

    def test_empty(self):
        with pytest.raises(ConfigurationError):
            evaluate(_classical(), None)
