import json
import os
import tempfile

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase

from maqa.config import (
    build_control_gates,
    build_ensemble,
    build_maqa_spec,
    build_qslp,
    default_config,
    dump_config,
    parse_config,
    parse_d_values,
    validate_config_data,
)
from maqa.engine import run_maqa
from maqa.exceptions import ConfigError, NonHermitian, NonUnitary

TWO_IDENTITY = {"matrix": [[[2, 0], [0, 0]], [[0, 0], [2, 0]]]}


def minimal_aggregate(**overrides):
    spec = {
        "d": 1,
        "n": 1,
        "beta_amps": "uniform",
        "x": [0.6, 0.8],
        "gate_pairs": [["identity", "identity"]],
        "f_gate": "identity",
        "observable": "projector",
    }
    spec.update(overrides)
    return {"mode": "aggregate", "seed": 1, "spec": spec}


class ConfigFileTestCase(SimpleTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def write(self, content, name="config.json"):
        path = os.path.join(self.tmp, name)
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(content if isinstance(content, str) else json.dumps(content))
        return path


class ParseConfigTests(ConfigFileTestCase):
    def test_minimal_identity_config(self):
        config = parse_config(self.write(minimal_aggregate()))
        self.assertEqual(config.mode, "aggregate")
        self.assertEqual(config.seed, 1)
        spec = build_maqa_spec(config.spec, config.seed)
        aggregate = run_maqa(spec).aggregate
        # every trajectory is the identity, so the value is |x_1|^2 of the normalized input
        self.assertAlmostEqual(aggregate.quantum_value, 0.64, delta=1e-12)
        self.assertAlmostEqual(aggregate.oracle_value, 0.64, delta=1e-12)

    def test_defaults_filled_in(self):
        config = validate_config_data({"mode": "aggregate", "spec": {"d": 2, "n": 1}})
        self.assertEqual(config.spec["gate_pairs"], "random")
        self.assertEqual(config.spec["beta_amps"], "uniform")
        self.assertEqual(config.spec["N"], 100)
        self.assertIsNone(config.seed)

    def test_non_unitary_gate_names_its_field(self):
        data = minimal_aggregate(gate_pairs=[[TWO_IDENTITY, "identity"]])
        with self.assertRaises(NonUnitary) as ctx:
            parse_config(self.write(data))
        self.assertEqual(ctx.exception.field, "spec.gate_pairs[0][0]")
        self.assertAlmostEqual(ctx.exception.deviation, 3.0)

    def test_hadamard_typed_to_eleven_digits_runs(self):
        h = 0.70710678118
        rounded = {"matrix": [[[h, 0], [h, 0]], [[h, 0], [-h, 0]]]}
        config = parse_config(self.write(minimal_aggregate(gate_pairs=[[rounded, "identity"]])))
        aggregate = run_maqa(build_maqa_spec(config.spec, config.seed)).aggregate
        self.assertLessEqual(aggregate.abs_diff, 1e-9)

    def test_non_hermitian_observable_names_its_field(self):
        data = minimal_aggregate(observable={"matrix": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]})
        with self.assertRaises(NonHermitian) as ctx:
            parse_config(self.write(data))
        self.assertEqual(ctx.exception.field, "spec.observable")

    def test_unknown_field_rejected(self):
        data = minimal_aggregate(bogus=1)
        with self.assertRaises(ConfigError) as ctx:
            parse_config(self.write(data))
        self.assertEqual(ctx.exception.field, "spec.bogus")

    def test_unknown_top_level_field_rejected(self):
        data = minimal_aggregate()
        data["extra"] = True
        with self.assertRaises(ConfigError) as ctx:
            parse_config(self.write(data))
        self.assertEqual(ctx.exception.field, "extra")

    def test_missing_required_field(self):
        with self.assertRaises(ConfigError) as ctx:
            validate_config_data({"mode": "aggregate", "spec": {"n": 1}})
        self.assertEqual(ctx.exception.field, "spec.d")

    def test_unknown_mode(self):
        with self.assertRaises(ConfigError) as ctx:
            validate_config_data({"mode": "teleport"})
        self.assertEqual(ctx.exception.field, "mode")

    def test_negative_seed(self):
        with self.assertRaises(ConfigError) as ctx:
            validate_config_data({"mode": "resources", "seed": -1})
        self.assertEqual(ctx.exception.field, "seed")

    def test_complex_ensemble_input_rejected(self):
        data = {"mode": "ensemble", "spec": {"d": 1, "n": 1, "x": [[0.6, 0.1], [0.8, 0.0]]}}
        with self.assertRaises(ConfigError) as ctx:
            validate_config_data(data)
        self.assertTrue(ctx.exception.field.startswith("spec.x"))

    def test_unknown_preset(self):
        with self.assertRaises(ConfigError) as ctx:
            validate_config_data(minimal_aggregate(f_gate="T"))
        self.assertEqual(ctx.exception.field, "spec.f_gate")

    def test_wrong_pair_count(self):
        with self.assertRaises(ConfigError) as ctx:
            validate_config_data(minimal_aggregate(d=2))
        self.assertEqual(ctx.exception.field, "spec.gate_pairs")

    def test_malformed_json_reports_line(self):
        path = self.write('{\n  "mode": "aggregate",\n  "seed": \n}\n')
        with self.assertRaises(ConfigError) as ctx:
            parse_config(path)
        self.assertEqual(ctx.exception.line, 4)
        self.assertTrue(str(ctx.exception).startswith("line 4: "))

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            parse_config(os.path.join(self.tmp, "absent.json"))

    def test_not_an_object(self):
        with self.assertRaises(ConfigError):
            validate_config_data([1, 2])


class DumpConfigTests(ConfigFileTestCase):
    def test_dump_and_parse_give_equal_configs(self):
        original = parse_config(self.write(minimal_aggregate(observable="ZI", n=2, x=[1, 0, 0, 1],
                                                             gate_pairs=[["random", ["X", "H"]]],
                                                             f_gate="identity")))
        again = parse_config(self.write(dump_config(original), name="dumped.json"))
        self.assertEqual(original.as_dict(), again.as_dict())
        self.assertEqual(dump_config(original), dump_config(again))

    def test_dump_is_sorted_json(self):
        text = dump_config(default_config("resources"))
        self.assertEqual(text, json.dumps(json.loads(text), sort_keys=True, indent=2) + "\n")


class DRangeTests(SimpleTestCase):
    def test_range(self):
        self.assertEqual(parse_d_values("1..8"), list(range(1, 9)))

    def test_single_value(self):
        self.assertEqual(parse_d_values("3"), [3])
        self.assertEqual(parse_d_values(4), [4])

    def test_bad_values(self):
        for value in ("5..2", "abc", "1..40", True):
            with self.assertRaises(ValueError):
                parse_d_values(value)


class BuilderTests(SimpleTestCase):
    def test_random_pieces_follow_the_seed(self):
        config = validate_config_data({"mode": "aggregate", "spec": {"d": 2, "n": 2, "beta_amps": "random"}})
        first = build_maqa_spec(config.spec, 5)
        second = build_maqa_spec(config.spec, 5)
        other = build_maqa_spec(config.spec, 6)
        self.assertTrue(np.array_equal(first.beta_amps, second.beta_amps))
        self.assertTrue(np.array_equal(first.gate_pairs[1][0].matrix, second.gate_pairs[1][0].matrix))
        self.assertFalse(np.array_equal(first.x_hat, other.x_hat))

    def test_ry_angle_beta(self):
        config = validate_config_data(
            {"mode": "aggregate", "spec": {"d": 1, "n": 1, "beta_amps": {"ry_angles": [np.pi / 2]}}}
        )
        spec = build_maqa_spec(config.spec, 0)
        self.assertAlmostEqual(spec.weights[0], 0.5, delta=1e-12)

    def test_gate_size_mismatch(self):
        config = validate_config_data(minimal_aggregate(f_gate=["X", "X"]))
        with self.assertRaises(ConfigError) as ctx:
            build_maqa_spec(config.spec, 0)
        self.assertEqual(ctx.exception.field, "spec.f_gate")

    def test_qslp_defaults(self):
        config = validate_config_data({"mode": "qslp-train", "spec": {"d": 2, "n": 1}})
        spec, dataset = build_qslp(config.spec, 7)
        self.assertEqual(len(spec.theta), 4)
        self.assertEqual(len(dataset), 10)
        self.assertEqual(config.spec["epochs"], 100)
        self.assertEqual(config.spec["learning_rate"], 0.5)

    def test_qslp_dataset_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "data.csv")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write("x0,x1,label\n1,0,0\n0,1,1\n")
            config = validate_config_data({"mode": "qslp-train", "spec": {"d": 1, "n": 1, "dataset": path}})
            _, dataset = build_qslp(config.spec, 0)
        self.assertEqual([label for _, label in dataset.points], [0.0, 1.0])

    def test_ensemble_learners(self):
        config = validate_config_data(
            {"mode": "ensemble", "spec": {"d": 1, "n": 1, "learner_angles": [[0.1], [0.2]]}}
        )
        spec, x = build_ensemble(config.spec, 0)
        self.assertEqual(spec.weak_learner_angles.shape, (2, 1))
        self.assertEqual(list(x), [1.0])

    def test_control_gates(self):
        config = validate_config_data({"mode": "verify-appendix", "spec": {"control_gates": ["H", "H", "random"]}})
        control = build_control_gates(config.spec, 3)
        self.assertEqual(len(control), 3)
        self.assertIsNone(build_control_gates(default_config("verify-appendix").spec, 3))


class SampleConfigTests(SimpleTestCase):
    def test_shipped_configs_parse(self):
        folder = settings.BASE_DIR / "configs"
        paths = sorted(folder.glob("*.json"))
        self.assertTrue(paths)
        for path in paths:
            config = parse_config(path)
            self.assertEqual(config.mode, path.stem.split("-identity")[0])
