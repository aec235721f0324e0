from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from maqa import gates
from maqa.engine import GateCounter, trajectory_step
from maqa.ensemble import (
    EnsembleSpec,
    classical_average,
    ensemble_step_xflip,
    learner_angles_from_steps,
    random_learner_angles,
    run_bagging_demo,
    step_angles_for_learners,
    uniform_weights_check,
)
from maqa.exceptions import InvalidSpec
from maqa.qsim import StateVector
from maqa.utils import make_rng

from .helpers import max_diff


class XFlipStepTests(SimpleTestCase):
    def test_matches_mixed_control_step(self):
        rng = make_rng(1)
        for _ in range(1000):
            d = int(rng.integers(1, 4))
            n = int(rng.integers(1, 3))
            i = int(rng.integers(1, d + 1))
            state = gates.random_state(d + n, rng)
            g1 = gates.random_unitary(n, rng)
            g2 = gates.random_unitary(n, rng)
            expected = trajectory_step(state, i, g1, g2, d, n)
            actual = ensemble_step_xflip(state, i, g1, g2, d, n)
            self.assertLessEqual(max_diff(actual.amps, expected.amps), 1e-12)

    def test_identity_pair(self):
        state = gates.random_state(3, make_rng(2))
        out = ensemble_step_xflip(state, 2, gates.identity(1), gates.identity(1), 2, 1)
        self.assertLessEqual(max_diff(out.amps, state.amps), 1e-15)

    def test_bell_state(self):
        state = StateVector(np.array([1, 0, 1, 0]) / np.sqrt(2))
        counter = GateCounter()
        out = ensemble_step_xflip(state, 1, gates.gate("X"), gates.identity(1), 1, 1, counter)
        self.assertLessEqual(max_diff(out.amps, np.array([1, 0, 0, 1]) / np.sqrt(2)), 1e-15)
        self.assertEqual(counter.controlled_g, 2)


class DecompositionTests(SimpleTestCase):
    def test_additive_learners_round_trip(self):
        rng = make_rng(3)
        steps = rng.uniform(-np.pi, np.pi, size=(3, 2, 2))
        learners = learner_angles_from_steps(steps)
        rebuilt = learner_angles_from_steps(step_angles_for_learners(learners))
        self.assertLessEqual(max_diff(rebuilt, learners), 1e-12)

    def test_non_additive_learners_rejected(self):
        learners = np.array([[0.0], [0.0], [0.0], [1.0]])
        with self.assertRaises(InvalidSpec):
            step_angles_for_learners(learners)

    def test_single_learner_must_be_trivial(self):
        self.assertEqual(step_angles_for_learners(np.zeros((1, 1))).shape, (0, 2, 1))
        with self.assertRaises(InvalidSpec):
            step_angles_for_learners(np.array([[0.5]]))

    def test_learner_count_must_be_power_of_two(self):
        with self.assertRaises(InvalidSpec):
            step_angles_for_learners(np.zeros((3, 1)))


class BaggingTests(SimpleTestCase):
    def test_identical_learners(self):
        spec = EnsembleSpec(d=2, n=1, weak_learner_angles=np.full((4, 1), 0.8))
        report = run_bagging_demo(spec, [1.0, 0.0])
        self.assertAlmostEqual(report.quantum_avg, np.sin(0.4) ** 2, delta=1e-12)
        self.assertAlmostEqual(report.classical_avg, report.quantum_avg, delta=1e-12)

    def test_two_opposite_learners_average_to_half(self):
        spec = EnsembleSpec(d=1, n=1, weak_learner_angles=[[0.0], [np.pi]])
        report = run_bagging_demo(spec, [1.0, 0.0])
        self.assertAlmostEqual(report.quantum_avg, 0.5, delta=1e-12)
        self.assertTrue(report.passed)

    def test_random_ensembles_match_classical_average(self):
        rng = make_rng(4)
        for d in (1, 2, 3):
            for n in (1, 2):
                for _ in range(5):
                    learners = random_learner_angles(d, n, rng)
                    f_gate = gates.random_unitary(n, rng)
                    observable = gates.random_hermitian(n, rng)
                    spec = EnsembleSpec(
                        d=d, n=n, f_gate=f_gate, observable=observable, weak_learner_angles=learners
                    )
                    x = rng.standard_normal(2**n)
                    report = run_bagging_demo(spec, x)
                    self.assertLessEqual(report.abs_diff, 1e-10)
                    self.assertAlmostEqual(
                        report.classical_avg,
                        classical_average(learners, x, f_gate, observable),
                        delta=0.0,
                    )

    def test_assignment_table(self):
        learners = random_learner_angles(2, 1, make_rng(5))
        report = run_bagging_demo(EnsembleSpec(d=2, n=1, weak_learner_angles=learners), [0.3, 0.4])
        table = report.as_dict()["assignment"]
        self.assertEqual(len(table), 4)
        self.assertEqual(table[3]["bits"], "11")
        self.assertEqual([s["gate"] for s in table[3]["steps"]], ["G1,1", "G2,1"])
        self.assertEqual([s["gate"] for s in table[0]["steps"]], ["G1,2", "G2,2"])
        for row in table:
            total = sum(s["angles"][0] for s in row["steps"])
            self.assertAlmostEqual(total, row["total_angles"][0], delta=1e-12)

    def test_pass_flag_follows_given_tolerance(self):
        spec = EnsembleSpec(d=1, n=1, weak_learner_angles=[[0.3], [1.1]])
        exact = classical_average(spec.weak_learner_angles, [1.0, 0.0], spec.f_gate, spec.observable)
        with mock.patch("maqa.ensemble.classical_average", return_value=exact + 5e-10):
            strict = run_bagging_demo(spec, [1.0, 0.0])
            loose = run_bagging_demo(spec, [1.0, 0.0], tolerance=1e-9)
        self.assertFalse(strict.passed)
        self.assertTrue(loose.passed)
        self.assertEqual(loose.as_dict()["tolerance"], 1e-9)

    def test_learners_required(self):
        with self.assertRaises(InvalidSpec):
            run_bagging_demo(EnsembleSpec(d=1, n=1), [1.0, 0.0])

    def test_learner_count_must_match_d(self):
        with self.assertRaises(InvalidSpec):
            EnsembleSpec(d=2, n=1, weak_learner_angles=np.zeros((3, 1)))


class UniformWeightTests(SimpleTestCase):
    def test_every_trajectory_weighted_equally(self):
        for d in range(0, 6):
            learners = random_learner_angles(d, 1, make_rng(d))
            spec = EnsembleSpec(d=d, n=1, weak_learner_angles=learners)
            weights = uniform_weights_check(spec, [1.0, 2.0])
            self.assertEqual(len(weights), 2**d)
            for weight in weights:
                self.assertAlmostEqual(weight, 1 / 2**d, delta=1e-12)
