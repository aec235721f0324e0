import numpy as np
from django.test import SimpleTestCase, override_settings

from maqa import gates
from maqa.exceptions import DimensionMismatch, NonUnitary, NumericalError, RegisterTooLarge
from maqa.qsim import (
    Observable,
    StateVector,
    UnitaryGate,
    apply_controlled,
    apply_unitary,
    expectation_on_data,
    expectation_terms,
    kron,
    kron_all,
    validate_unitary,
)
from maqa.utils import make_rng

from .helpers import dense_expand, dense_expectation, max_diff


class KronTests(SimpleTestCase):
    def test_entries_follow_block_layout(self):
        rng = make_rng(1)
        a = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        b = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        product = kron(a, b)
        self.assertEqual(product.shape, (6, 6))
        for i in range(2):
            for j in range(3):
                for k in range(3):
                    for l in range(2):
                        self.assertEqual(product[i * 3 + k, j * 2 + l], a[i, j] * b[k, l])

    def test_empty_product_is_scalar_one(self):
        self.assertEqual(kron_all([]).tolist(), [[1]])


class ApplyUnitaryTests(SimpleTestCase):
    def test_hadamard_on_zero(self):
        state = apply_unitary(StateVector.basis(1), gates.gate("H"), [0])
        expected = np.array([1, 1]) / np.sqrt(2)
        self.assertLessEqual(max_diff(state.amps, expected), 1e-12)

    def test_identity_leaves_amplitudes_bitwise_unchanged(self):
        state = gates.random_state(4, make_rng(3))
        out = apply_unitary(state, gates.identity(2), [1, 3])
        self.assertTrue(np.array_equal(out.amps, state.amps))

    def test_two_qubit_gate_on_non_adjacent_targets(self):
        rng = make_rng(5)
        state = gates.random_state(4, rng)
        u = gates.random_unitary(2, rng)
        out = apply_unitary(state, u, [0, 2])
        expected = dense_expand(u.matrix, [0, 2], 4) @ state.amps
        self.assertLessEqual(max_diff(out.amps, expected), 1e-12)

    def test_reversed_target_order(self):
        rng = make_rng(6)
        state = gates.random_state(3, rng)
        u = gates.random_unitary(2, rng)
        out = apply_unitary(state, u, [2, 0])
        expected = dense_expand(u.matrix, [2, 0], 3) @ state.amps
        self.assertLessEqual(max_diff(out.amps, expected), 1e-12)

    def test_matches_kron_expansion_on_random_registers(self):
        rng = make_rng(11)
        for _ in range(40):
            num_qubits = int(rng.integers(1, 7))
            k = int(rng.integers(1, min(num_qubits, 3) + 1))
            targets = [int(t) for t in rng.permutation(num_qubits)[:k]]
            state = gates.random_state(num_qubits, rng)
            u = gates.random_unitary(k, rng)
            out = apply_unitary(state, u, targets)
            expected = dense_expand(u.matrix, targets, num_qubits) @ state.amps
            self.assertLessEqual(max_diff(out.amps, expected), 1e-12)

    def test_contiguous_targets_equal_identity_padding(self):
        rng = make_rng(12)
        state = gates.random_state(5, rng)
        u = gates.random_unitary(2, rng)
        out = apply_unitary(state, u, [1, 2])
        full = kron_all([np.eye(2), u.matrix, np.eye(4)])
        self.assertLessEqual(max_diff(out.amps, full @ state.amps), 1e-12)

    def test_norm_preserved_over_many_gates(self):
        rng = make_rng(13)
        state = gates.random_state(6, rng)
        for _ in range(50):
            target = int(rng.integers(0, 6))
            state = apply_unitary(state, gates.random_unitary(1, rng), [target])
        self.assertLessEqual(abs(state.norm() - 1.0), 1e-12)

    def test_rounded_gate_output_is_renormalized(self):
        rounded = UnitaryGate(0.70710678118 * np.array([[1, 1], [1, -1]]))
        state = apply_unitary(StateVector.basis(1), rounded, [0])
        self.assertLessEqual(abs(state.norm() - 1.0), 1e-12)
        self.assertLessEqual(max_diff(state.amps, [2**-0.5, 2**-0.5]), 1e-11)
        bell = apply_controlled(
            StateVector(np.array([1, 0, 1, 0]) / np.sqrt(2)), 0, 1, rounded, [1]
        )
        self.assertLessEqual(abs(bell.norm() - 1.0), 1e-12)

    def test_rejects_bad_targets(self):
        state = StateVector.basis(3)
        with self.assertRaises(DimensionMismatch):
            apply_unitary(state, gates.gate("X"), [3])
        with self.assertRaises(DimensionMismatch):
            apply_unitary(state, gates.identity(2), [1, 1])
        with self.assertRaises(DimensionMismatch):
            apply_unitary(state, gates.identity(2), [0])


class ApplyControlledTests(SimpleTestCase):
    def test_control_off_leaves_state_unchanged(self):
        state = StateVector.basis(2, 0)
        out = apply_controlled(state, 0, 1, gates.gate("X"), [1])
        self.assertTrue(np.array_equal(out.amps, state.amps))

    def test_bell_state(self):
        state = apply_unitary(StateVector.basis(2), gates.gate("H"), [0])
        out = apply_controlled(state, 0, 1, gates.gate("X"), [1])
        expected = np.array([1, 0, 0, 1]) / np.sqrt(2)
        self.assertLessEqual(max_diff(out.amps, expected), 1e-12)

    def test_zero_control_equals_conjugation_by_x(self):
        rng = make_rng(21)
        for _ in range(25):
            state = gates.random_state(3, rng)
            u = gates.random_unitary(1, rng)
            flip = gates.gate("X")
            direct = apply_controlled(state, 1, 0, u, [2])
            conjugated = apply_unitary(state, flip, [1])
            conjugated = apply_controlled(conjugated, 1, 1, u, [2])
            conjugated = apply_unitary(conjugated, flip, [1])
            self.assertLessEqual(max_diff(direct.amps, conjugated.amps), 1e-12)

    def test_matches_dense_block_matrix(self):
        rng = make_rng(22)
        state = gates.random_state(4, rng)
        u = gates.random_unitary(2, rng)
        out = apply_controlled(state, 2, 1, u, [3, 0])
        projector_on = np.diag([0, 1])
        controlled = kron_all([np.eye(4), np.diag([1, 0]), np.eye(2)]) + dense_expand(
            kron(u.matrix, projector_on), [3, 0, 2], 4
        )
        self.assertLessEqual(max_diff(out.amps, controlled @ state.amps), 1e-12)

    def test_control_cannot_be_a_target(self):
        with self.assertRaises(DimensionMismatch):
            apply_controlled(StateVector.basis(2), 0, 1, gates.gate("X"), [0])


class ExpectationTests(SimpleTestCase):
    def test_identity_observable_reads_one(self):
        state = gates.random_state(3, make_rng(31))
        identity = Observable(np.eye(4), label="I")
        self.assertAlmostEqual(expectation_on_data(state, identity, 2), 1.0, delta=1e-12)

    def test_projector_on_zero_state(self):
        self.assertEqual(expectation_on_data(StateVector.basis(2), gates.projector(1), 1), 0.0)

    def test_matches_dense_path(self):
        rng = make_rng(32)
        for n_data in (1, 2, 3):
            state = gates.random_state(4, rng)
            m = gates.random_hermitian(n_data, rng)
            value = expectation_on_data(state, m, n_data)
            expected = dense_expectation(state.amps, m.matrix, n_data)
            self.assertAlmostEqual(value, expected.real, delta=1e-12)

    def test_imaginary_residue_is_negligible(self):
        rng = make_rng(33)
        state = gates.random_state(5, rng)
        _, imag = expectation_terms(state, gates.random_hermitian(2, rng), 2)
        self.assertLessEqual(abs(imag), 1e-12)

    def test_observable_must_fit_data_register(self):
        with self.assertRaises(DimensionMismatch):
            expectation_on_data(StateVector.basis(3), gates.projector(2), 1)


class ValidationTests(SimpleTestCase):
    def test_identity_is_unitary(self):
        self.assertEqual(validate_unitary(np.eye(4)).deviation, 0.0)

    def test_scaled_identity_rejected_with_deviation(self):
        with self.assertRaises(NonUnitary) as ctx:
            validate_unitary(2 * np.eye(2))
        self.assertAlmostEqual(ctx.exception.deviation, 3.0)

    def test_rotations_are_unitary(self):
        rng = make_rng(41)
        for theta in rng.uniform(-10, 10, size=1000):
            self.assertLessEqual(gates.ry(theta).certificate.deviation, 1e-10)

    def test_non_square_rejected(self):
        with self.assertRaises(DimensionMismatch):
            UnitaryGate(np.ones((2, 3)))

    def test_state_norm_checked(self):
        with self.assertRaises(NumericalError):
            StateVector(np.array([1.0, 1.0]))

    def test_state_is_read_only(self):
        state = StateVector.basis(1)
        with self.assertRaises(ValueError):
            state.amps[0] = 0

    @override_settings(MAQA_MAX_QUBITS=3)
    def test_register_cap(self):
        with self.assertRaises(RegisterTooLarge):
            StateVector.basis(4)


class GatePresetTests(SimpleTestCase):
    def test_rotation_preset_matches_constructor(self):
        self.assertLessEqual(max_diff(gates.preset("Ry(0.3)").matrix, gates.ry(0.3).matrix), 0.0)

    def test_tensor_presets_order(self):
        g = gates.tensor_presets(["X", "I"])
        self.assertLessEqual(max_diff(g.matrix, kron(gates.FIXED_GATES["X"], np.eye(2))), 0.0)

    def test_unknown_preset(self):
        from maqa.exceptions import InvalidSpec

        with self.assertRaises(InvalidSpec):
            gates.preset("T")

    def test_ladder_maps_basis_states(self):
        ladder = gates.controlled_flip_ladder(3)
        # |100> -> |110> -> |111>
        out = apply_unitary(StateVector.basis(3, 0b100), ladder, [0, 1, 2])
        self.assertEqual(int(np.argmax(np.abs(out.amps))), 0b111)
