import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sequent import statevector as sv
from sequent.exceptions import ConfigurationError
from sequent.verify import random_gates, simulate

import oracle

S2 = 1 / math.sqrt(2)


def amps(state):
    return state.amplitudes


class TestInitZero:
    @pytest.mark.parametrize("n,expected", [(1, [1, 0]), (2, [1, 0, 0, 0])])
    def test_small(self, n, expected):
        np.testing.assert_array_equal(amps(sv.init_zero(n)), expected)

    def test_six_qubits(self):
        state = sv.init_zero(6)
        assert amps(state).shape == (64,)
        assert amps(state)[0] == 1
        assert np.linalg.norm(amps(state)) == 1

    @pytest.mark.parametrize("n", [0, 25, -1, 2.5])
    def test_out_of_range(self, n):
        with pytest.raises(ConfigurationError):
            sv.init_zero(n)

    def test_batched(self):
        state = sv.init_zero(2, (3, 5))
        assert amps(state).shape == (4, 3, 5)
        assert np.all(amps(state)[0] == 1)


class TestHadamard:
    def test_plus_state(self):
        np.testing.assert_allclose(amps(sv.apply_hadamard(sv.init_zero(1), 0)), [S2, S2], atol=1e-15)

    def test_second_qubit(self):
        # (|00> + |10>)/sqrt2 with qubit 1 the high bit -> indices 0 and 2
        out = amps(sv.apply_hadamard(sv.init_zero(2), 1))
        np.testing.assert_allclose(out, [S2, 0, S2, 0], atol=1e-15)

    def test_involution(self):
        rng = np.random.default_rng(0)
        raw = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        state = sv.StateVector(3, raw / np.linalg.norm(raw))
        for q in range(3):
            twice = sv.apply_hadamard(sv.apply_hadamard(state, q), q)
            np.testing.assert_allclose(amps(twice), amps(state), atol=1e-12)

    def test_bad_index(self):
        with pytest.raises(ConfigurationError):
            sv.apply_hadamard(sv.init_zero(2), 2)


class TestRotation:
    def test_ry_pi_flips(self):
        out = amps(sv.apply_rotation(sv.init_zero(1), 0, "Y", math.pi))
        np.testing.assert_allclose(out, [0, 1], atol=1e-15)

    @pytest.mark.parametrize("theta", [0.0, 0.3, 1.0, 2.5, -4.0])
    def test_rz_keeps_z(self, theta):
        assert sv.expect_z(sv.apply_rotation(sv.init_zero(1), 0, "Z", theta), 0) == pytest.approx(1.0, abs=1e-15)

    def test_ry_undoes_hadamard(self):
        state = sv.apply_rotation(sv.apply_hadamard(sv.init_zero(1), 0), 0, "Y", -math.pi / 2)
        # oracle: RY(-pi/2) @ H @ |0>
        expected = oracle.rot("Y", -math.pi / 2) @ oracle.H @ np.array([1, 0])
        np.testing.assert_allclose(amps(state), expected, atol=1e-15)
        assert sv.expect_z(state, 0) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("axis", ["X", "Y", "Z"])
    def test_matches_matrix(self, axis):
        rng = np.random.default_rng(1)
        raw = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        state = sv.StateVector(3, raw / np.linalg.norm(raw))
        for q in range(3):
            out = amps(sv.apply_rotation(state, q, axis, 0.77))
            np.testing.assert_allclose(out, oracle.on_qubit(oracle.rot(axis, 0.77), q, 3) @ raw / np.linalg.norm(raw),
                                       atol=1e-14)

    def test_per_state_angles(self):
        angles = np.array([0.0, math.pi])
        out = amps(sv.apply_rotation(sv.init_zero(1, (2,)), 0, "Y", angles))
        np.testing.assert_allclose(out, [[1, 0], [0, 1]], atol=1e-15)

    @pytest.mark.parametrize("angle", [math.nan, math.inf])
    def test_non_finite(self, angle):
        with pytest.raises(ConfigurationError):
            sv.apply_rotation(sv.init_zero(1), 0, "Y", angle)

    def test_bad_axis(self):
        with pytest.raises(ConfigurationError):
            sv.apply_rotation(sv.init_zero(1), 0, "W", 0.1)


class TestCnot:
    def test_fires(self):
        # qubit0 = 1 -> index 1; after CNOT(0->1) both set -> index 3
        state = sv.StateVector(2, np.array([0, 1, 0, 0], dtype=complex))
        np.testing.assert_array_equal(amps(sv.apply_cnot(state, 0, 1)), [0, 0, 0, 1])

    def test_zero_state_fixed(self):
        np.testing.assert_array_equal(amps(sv.apply_cnot(sv.init_zero(2), 0, 1)), [1, 0, 0, 0])

    def test_involution(self):
        rng = np.random.default_rng(2)
        raw = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        state = sv.StateVector(4, raw)
        for c, t in [(0, 1), (3, 0), (2, 1)]:
            np.testing.assert_array_equal(amps(sv.apply_cnot(sv.apply_cnot(state, c, t), c, t)), raw)

    def test_matches_matrix(self):
        raw = np.arange(8, dtype=complex)
        for c, t in [(0, 1), (1, 0), (0, 2), (2, 1)]:
            np.testing.assert_array_equal(amps(sv.apply_cnot(sv.StateVector(3, raw), c, t)),
                                          oracle.cnot(c, t, 3) @ raw)

    @pytest.mark.parametrize("c,t", [(0, 0), (0, 2), (-1, 0)])
    def test_bad_indices(self, c, t):
        with pytest.raises(ConfigurationError):
            sv.apply_cnot(sv.init_zero(2), c, t)


class TestExpectZ:
    def test_basis_states(self):
        assert sv.expect_z(sv.init_zero(1), 0) == 1.0
        assert sv.expect_z(sv.StateVector(1, np.array([0, 1], dtype=complex)), 0) == -1.0

    def test_plus(self):
        assert abs(sv.expect_z(sv.apply_hadamard(sv.init_zero(1), 0), 0)) < 1e-12

    def test_bit_order(self):
        state = sv.StateVector(2, np.array([0, 1, 0, 0], dtype=complex))  # qubit0 = 1
        assert sv.expect_z(state, 0) == -1.0
        assert sv.expect_z(state, 1) == 1.0

    def test_out_of_range(self):
        with pytest.raises(ConfigurationError):
            sv.expect_z(sv.init_zero(2), 5)


def _gate_sequences(num_qubits, max_len):
    return st.integers(0, 2**32 - 1).flatmap(
        lambda seed: st.integers(1, max_len).map(
            lambda length: random_gates(np.random.default_rng(seed), num_qubits, length)))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(st.just(n), _gate_sequences(n, 100))))
def test_norm_preserved(case):
    n, gates = case
    assert abs(np.linalg.norm(simulate(gates, n)) - 1) < 1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: st.tuples(st.just(n), _gate_sequences(n, 30))))
def test_expect_z_bounded(case):
    n, gates = case
    state = sv.StateVector(n, simulate(gates, n))
    for q in range(n):
        assert -1.0 <= sv.expect_z(state, q) <= 1.0


@settings(max_examples=200, deadline=None)
@given(_gate_sequences(2, 20))
def test_two_qubit_oracle(gates):
    psi = np.zeros(4, dtype=complex)
    psi[0] = 1
    for g in gates:
        if g[0] == "H":
            psi = oracle.on_qubit(oracle.H, g[1], 2) @ psi
        elif g[0] == "R":
            psi = oracle.on_qubit(oracle.rot(g[2], g[3]), g[1], 2) @ psi
        else:
            psi = oracle.cnot(g[1], g[2], 2) @ psi
    np.testing.assert_allclose(simulate(gates, 2), psi, atol=1e-12, rtol=0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gate_then_inverse(seed):
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    state = sv.StateVector(3, raw / np.linalg.norm(raw))
    q = int(rng.integers(3))
    theta = float(rng.uniform(-10, 10))
    for axis in "XYZ":
        back = sv.apply_rotation(sv.apply_rotation(state, q, axis, theta), q, axis, -theta)
        np.testing.assert_allclose(back.amplitudes, state.amplitudes, atol=1e-12, rtol=0)
