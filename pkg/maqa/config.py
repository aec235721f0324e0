"""
Experiment configs: JSON in, validated ExperimentConfig out, and the builders
that turn a validated config into simulator objects.

Matrices are written row-major as [re, im] pairs. Gates may also be named
presets (I, X, Y, Z, H, Rx(t), Ry(t), Rz(t)), a list of presets tensored
together, "identity" or "random" (drawn from the run's seed).
"""

import json
import re
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from rest_framework import serializers

from . import gates
from .engine import ClassicalParams, MaqaSpec, product_beta_amps, uniform_beta_amps
from .ensemble import EnsembleSpec, random_learner_angles
from .exceptions import ConfigError, MaqaError, NonHermitian, NonUnitary
from .qsim import Observable, UnitaryGate, validate_unitary
from .qslp import QslpSpec, ToyDataset, make_toy_dataset, random_qslp_spec
from .utils import canonical_json, make_rng

MODES = ("aggregate", "qslp-train", "ensemble", "verify-appendix", "resources")

_D_RANGE_RE = re.compile(r"^\s*(\d+)\s*\.\.\s*(\d+)\s*$")
MAX_SEED = 2**64 - 1


def _is_pair(value) -> bool:
    return (
        isinstance(value, (list, tuple))
        and len(value) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    )


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def pairs_to_complex(values) -> np.ndarray:
    """[re, im] pairs (or plain reals) -> complex vector."""
    return np.array(
        [complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v) for v in values],
        dtype=complex,
    )


def matrix_from_pairs(rows) -> np.ndarray:
    return np.array([pairs_to_complex(row) for row in rows], dtype=complex)


# ============================================================================
# SCHEMA
# ============================================================================


class StrictSerializer(serializers.Serializer):
    """Serializer that rejects keys it does not declare."""

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({name: ["Unknown field."] for name in unknown})
        return super().to_internal_value(data)


class ComplexVectorField(serializers.Field):
    """List of reals or [re, im] pairs; "random" when allow_random is set."""

    def __init__(self, allow_random=False, **kwargs):
        self.allow_random = allow_random
        super().__init__(**kwargs)

    def to_internal_value(self, data):
        if self.allow_random and data == "random":
            return data
        if not isinstance(data, list) or not data:
            raise serializers.ValidationError("Expected a non-empty list of numbers or [re, im] pairs.")
        for entry in data:
            if not (_is_number(entry) or _is_pair(entry)):
                raise serializers.ValidationError(f"Bad vector entry {entry!r}.")
        return data

    def to_representation(self, value):
        return value


class BetaField(ComplexVectorField):
    """"uniform", "random", {"ry_angles": [...]} or an explicit amplitude vector."""

    def to_internal_value(self, data):
        if data in ("uniform", "random"):
            return data
        if isinstance(data, dict):
            if set(data) != {"ry_angles"} or not isinstance(data["ry_angles"], list):
                raise serializers.ValidationError('Expected {"ry_angles": [angles]}.')
            if not all(_is_number(a) for a in data["ry_angles"]):
                raise serializers.ValidationError("ry_angles must be numbers.")
            return data
        return super().to_internal_value(data)


class MatrixField(serializers.Field):
    """{"matrix": rows of [re, im] pairs}; shape is checked, unitarity later."""

    presets = ()

    def to_internal_value(self, data):
        if isinstance(data, str) and data in self.presets:
            return data
        if isinstance(data, dict):
            if set(data) != {"matrix"}:
                raise serializers.ValidationError('Expected {"matrix": [[[re, im], ...], ...]}.')
            rows = data["matrix"]
            if not isinstance(rows, list) or not rows:
                raise serializers.ValidationError("Matrix must be a non-empty list of rows.")
            for row in rows:
                if not isinstance(row, list) or len(row) != len(rows):
                    raise serializers.ValidationError("Matrix must be square.")
                if not all(_is_pair(entry) for entry in row):
                    raise serializers.ValidationError("Matrix entries must be [re, im] pairs.")
            return data
        return self.to_internal_preset(data)

    def to_internal_preset(self, data):
        raise serializers.ValidationError(f"Unrecognized value {data!r}.")

    def to_representation(self, value):
        return value


class GateField(MatrixField):
    presets = ("identity", "random")

    def to_internal_preset(self, data):
        names = [data] if isinstance(data, str) else data
        if not isinstance(names, list) or not names or not all(isinstance(n, str) for n in names):
            raise serializers.ValidationError(f"Unrecognized gate {data!r}.")
        try:
            for name in names:
                gates.preset(name)
        except MaqaError as exc:
            raise serializers.ValidationError(str(exc))
        return data


class ObservableField(MatrixField):
    presets = ("projector", "identity", "random")

    def to_internal_preset(self, data):
        if isinstance(data, str) and data and set(data.upper()) <= set("IXYZ"):
            return data
        raise serializers.ValidationError(
            f"Unrecognized observable {data!r}; use projector, identity, random, a Pauli string or a matrix."
        )


class GatePairsField(serializers.Field):
    """"random" or a list of [G_{i,1}, G_{i,2}] pairs."""

    def to_internal_value(self, data):
        if data == "random":
            return data
        if not isinstance(data, list):
            raise serializers.ValidationError('Expected "random" or a list of gate pairs.')
        gate_field = GateField()
        validated = []
        for i, pair in enumerate(data):
            if not isinstance(pair, list) or len(pair) != 2:
                raise serializers.ValidationError(f"Pair {i} must hold exactly two gates.")
            try:
                validated.append([gate_field.to_internal_value(g) for g in pair])
            except serializers.ValidationError as exc:
                raise serializers.ValidationError(f"Pair {i}: {_first_message(exc.detail)[1]}")
        return validated

    def to_representation(self, value):
        return value


class DValuesField(serializers.Field):
    """"a..b", a single integer, or a list of integers."""

    def to_internal_value(self, data):
        try:
            return parse_d_values(data)
        except ValueError as exc:
            raise serializers.ValidationError(str(exc))

    def to_representation(self, value):
        return value


class ConfigSerializer(StrictSerializer):
    mode = serializers.ChoiceField(choices=MODES)
    seed = serializers.IntegerField(min_value=0, max_value=MAX_SEED, required=False)
    output_path = serializers.CharField(required=False)
    spec = serializers.DictField(required=False, default=dict)


class AggregateSpecSerializer(StrictSerializer):
    d = serializers.IntegerField(min_value=0, max_value=19)
    n = serializers.IntegerField(min_value=1, max_value=20)
    beta_amps = BetaField(required=False, default="uniform")
    x = ComplexVectorField(allow_random=True, required=False, default="random")
    gate_pairs = GatePairsField(required=False, default="random")
    f_gate = GateField(required=False, default="identity")
    observable = ObservableField(required=False, default="projector")
    N = serializers.IntegerField(min_value=1, required=False, default=100)
    alpha = serializers.FloatField(min_value=1, required=False, default=1.0)
    beta = serializers.FloatField(min_value=1, required=False, default=1.0)
    workers = serializers.IntegerField(min_value=1, required=False, default=1)

    def validate(self, attrs):
        pairs = attrs["gate_pairs"]
        if pairs != "random" and len(pairs) != attrs["d"]:
            raise serializers.ValidationError(
                {"gate_pairs": [f"Expected {attrs['d']} pairs, got {len(pairs)}."]}
            )
        return attrs


class QslpSpecSerializer(StrictSerializer):
    d = serializers.IntegerField(min_value=0, max_value=19)
    n = serializers.IntegerField(min_value=1, max_value=20)
    theta = serializers.ListField(child=serializers.FloatField(), required=False)
    beta_params = serializers.ListField(child=serializers.FloatField(), required=False)
    f_gate = GateField(required=False, default="identity")
    dataset = serializers.CharField(required=False, default="toy")
    epochs = serializers.IntegerField(min_value=1, required=False, default=100)
    learning_rate = serializers.FloatField(min_value=0, required=False, default=0.5)
    fd_step = serializers.FloatField(required=False, default=1e-4)

    def validate_fd_step(self, value):
        if value <= 0:
            raise serializers.ValidationError("fd_step must be positive.")
        return value

    def validate(self, attrs):
        if ("theta" in attrs) != ("beta_params" in attrs):
            raise serializers.ValidationError("theta and beta_params must be given together.")
        return attrs


class EnsembleSpecSerializer(StrictSerializer):
    d = serializers.IntegerField(min_value=0, max_value=19)
    n = serializers.IntegerField(min_value=1, max_value=20)
    learner_angles = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField()), required=False
    )
    # real amplitudes only
    x = serializers.ListField(
        child=serializers.FloatField(), min_length=1, required=False, default=[1.0]
    )
    f_gate = GateField(required=False, default="identity")
    observable = ObservableField(required=False, default="projector")


class AppendixSpecSerializer(StrictSerializer):
    control_gates = serializers.ListField(child=GateField(), min_length=3, max_length=3, required=False)
    tolerance = serializers.FloatField(min_value=0, required=False, default=1e-12)


class ResourcesSpecSerializer(StrictSerializer):
    d_values = DValuesField(required=False, default=list(range(1, 9)))
    n = serializers.IntegerField(min_value=1, max_value=12, required=False, default=1)
    N = serializers.IntegerField(min_value=1, required=False, default=100)
    p = serializers.IntegerField(min_value=1, required=False)
    alpha = serializers.FloatField(min_value=1, required=False, default=1.0)
    beta = serializers.FloatField(min_value=1, required=False, default=1.0)


SPEC_SERIALIZERS = {
    "aggregate": AggregateSpecSerializer,
    "qslp-train": QslpSpecSerializer,
    "ensemble": EnsembleSpecSerializer,
    "verify-appendix": AppendixSpecSerializer,
    "resources": ResourcesSpecSerializer,
}


def parse_d_values(value) -> List[int]:
    if isinstance(value, bool):
        raise ValueError("Expected 'a..b', an integer, or a list of integers")
    if isinstance(value, int):
        values = [value]
    elif isinstance(value, list) and all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        values = list(value)
    elif isinstance(value, str):
        match = _D_RANGE_RE.match(value)
        if match:
            low, high = int(match.group(1)), int(match.group(2))
            if low > high:
                raise ValueError(f"Empty range '{value}'")
            values = list(range(low, high + 1))
        elif value.strip().isdigit():
            values = [int(value)]
        else:
            raise ValueError(f"Cannot read d range '{value}'; use a..b or an integer")
    else:
        raise ValueError("Expected 'a..b', an integer, or a list of integers")
    if not values or any(v < 0 or v > 19 for v in values):
        raise ValueError("d values must lie in 0..19")
    return values


def check_seed(seed, field: str = "seed") -> int:
    """Seeds feed numpy.random.default_rng, which takes integers in 0..2**64-1."""
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED:
        raise ConfigError(f"seed must be an integer in 0..{MAX_SEED}, got {seed!r}", field=field)
    return seed


# ============================================================================
# PARSING
# ============================================================================


@dataclass
class ExperimentConfig:
    mode: str
    spec: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    output_path: Optional[str] = None

    def as_dict(self) -> dict:
        data = {"mode": self.mode, "spec": self.spec}
        if self.seed is not None:
            data["seed"] = self.seed
        if self.output_path is not None:
            data["output_path"] = self.output_path
        return data


def _first_message(detail, path=""):
    """Walk a DRF error detail down to (field path, message) of the first error."""
    if isinstance(detail, dict):
        name, inner = next(iter(detail.items()))
        if name == "non_field_errors":
            return _first_message(inner, path)
        return _first_message(inner, f"{path}.{name}" if path else str(name))
    if isinstance(detail, list) and detail:
        return _first_message(detail[0], path)
    return (path, str(detail)) if path is not None else str(detail)


def _raise_schema_error(errors, prefix=""):
    field_path, message = _first_message(errors)
    if prefix:
        field_path = f"{prefix}.{field_path}" if field_path else prefix
    raise ConfigError(message, field=field_path or None)


def _check_matrices(mode: str, spec: dict):
    """Reject explicit matrices that are not unitary/Hermitian, naming the field."""
    candidates = []
    for name in ("f_gate",):
        candidates.append((f"spec.{name}", spec.get(name), "gate"))
    pairs = spec.get("gate_pairs")
    if isinstance(pairs, list):
        for i, pair in enumerate(pairs):
            for j, g in enumerate(pair):
                candidates.append((f"spec.gate_pairs[{i}][{j}]", g, "gate"))
    for k, g in enumerate(spec.get("control_gates") or []):
        candidates.append((f"spec.control_gates[{k}]", g, "gate"))
    candidates.append(("spec.observable", spec.get("observable"), "observable"))

    for path, value, kind in candidates:
        if not isinstance(value, dict):
            continue
        matrix = matrix_from_pairs(value["matrix"])
        if kind == "gate":
            try:
                validate_unitary(matrix)
            except NonUnitary as exc:
                raise NonUnitary(exc.deviation, field=path) from exc
        else:
            try:
                Observable(matrix)
            except NonHermitian as exc:
                raise NonHermitian(exc.deviation, field=path) from exc


def validate_config_data(data) -> ExperimentConfig:
    """
    Validate an already-decoded config dict.

    Raises:
        ConfigError: schema violation, with the offending field path
        NonUnitary / NonHermitian: an explicit matrix fails its check
    """
    if not isinstance(data, dict):
        raise ConfigError("Config must be a JSON object")
    top = ConfigSerializer(data=data)
    if not top.is_valid():
        _raise_schema_error(top.errors)
    mode = top.validated_data["mode"]
    spec_serializer = SPEC_SERIALIZERS[mode](data=top.validated_data["spec"])
    if not spec_serializer.is_valid():
        _raise_schema_error(spec_serializer.errors, prefix="spec")
    spec = json.loads(json.dumps(dict(spec_serializer.validated_data)))
    _check_matrices(mode, spec)
    return ExperimentConfig(
        mode=mode,
        spec=spec,
        seed=top.validated_data.get("seed"),
        output_path=top.validated_data.get("output_path"),
    )


def parse_config(path) -> ExperimentConfig:
    """
    Read and validate a JSON config file.

    Raises:
        ConfigError: unreadable file, malformed JSON (with line) or schema violation
        NonUnitary / NonHermitian: an explicit matrix fails its check
    """
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"Cannot read config: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Malformed JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from exc
    return validate_config_data(data)


def default_config(mode: str) -> ExperimentConfig:
    """Config for modes that can run without a file (verify-appendix, resources)."""
    return validate_config_data({"mode": mode})


def dump_config(config: ExperimentConfig) -> str:
    """Canonical JSON text; parsing it again gives an equal ExperimentConfig."""
    return canonical_json(config.as_dict())


# ============================================================================
# BUILDERS
# ============================================================================


def _resolve_gate(value, n: int, rng: np.random.Generator, label: str) -> UnitaryGate:
    if value == "identity":
        return gates.identity(n)
    if value == "random":
        return gates.random_unitary(n, rng, label=label)
    if isinstance(value, dict):
        gate = UnitaryGate(matrix_from_pairs(value["matrix"]), label=label)
    elif isinstance(value, list):
        gate = gates.tensor_presets(value)
    else:
        gate = gates.preset(value)
    if gate.dim_qubits != n:
        raise ConfigError(f"Gate acts on {gate.dim_qubits} qubit(s), expected {n}", field=label)
    return gate


def _resolve_observable(value, n: int, rng: np.random.Generator) -> Observable:
    if value == "projector":
        return gates.projector(n)
    if value == "identity":
        return Observable(np.eye(2**n, dtype=complex), label="I")
    if value == "random":
        return gates.random_hermitian(n, rng)
    if isinstance(value, dict):
        return Observable(matrix_from_pairs(value["matrix"]), label="M")
    if len(value) != n:
        raise ConfigError(f"Pauli string '{value}' does not cover {n} qubit(s)", field="spec.observable")
    return gates.pauli_string(list(value))


def build_maqa_spec(spec: dict, seed: int) -> MaqaSpec:
    """aggregate-mode spec -> MaqaSpec. Random pieces are drawn in a fixed order."""
    d, n = spec["d"], spec["n"]
    rng = make_rng(seed)
    raw_pairs = spec["gate_pairs"]
    if raw_pairs == "random":
        raw_pairs = [["random", "random"]] * d
    pairs = tuple(
        (
            _resolve_gate(g1, n, rng, f"spec.gate_pairs[{i}][0]"),
            _resolve_gate(g2, n, rng, f"spec.gate_pairs[{i}][1]"),
        )
        for i, (g1, g2) in enumerate(raw_pairs)
    )

    beta = spec["beta_amps"]
    if beta == "uniform":
        beta_amps = uniform_beta_amps(d)
    elif beta == "random":
        beta_amps = gates.random_amplitudes(2**d, rng)
    elif isinstance(beta, dict):
        beta_amps = product_beta_amps(beta["ry_angles"])
    else:
        beta_amps = pairs_to_complex(beta)

    x = gates.random_amplitudes(2**n, rng) if spec["x"] == "random" else pairs_to_complex(spec["x"])
    return MaqaSpec(
        d=d,
        n=n,
        beta_amps=beta_amps,
        x_raw=x,
        gate_pairs=pairs,
        f_gate=_resolve_gate(spec["f_gate"], n, rng, "spec.f_gate"),
        observable=_resolve_observable(spec["observable"], n, rng),
        seed=seed,
    )


def build_classical_params(spec: dict, p: int) -> ClassicalParams:
    return ClassicalParams(N=spec["N"], p=spec.get("p") or p, alpha=spec["alpha"], beta=spec["beta"])


def build_qslp(spec: dict, seed: int, base_dir=None):
    """qslp-train spec -> (QslpSpec, ToyDataset)."""
    d, n = spec["d"], spec["n"]
    f_gate = _resolve_gate(spec["f_gate"], n, make_rng(seed), "spec.f_gate")
    if "theta" in spec:
        qslp_spec = QslpSpec(
            d=d, n=n, theta=spec["theta"], beta_params=spec["beta_params"], f_gate=f_gate, seed=seed
        )
    else:
        qslp_spec = random_qslp_spec(d, n, seed, f_gate=f_gate)
    if spec["dataset"] == "toy":
        dataset = make_toy_dataset(seed)
    else:
        try:
            dataset = ToyDataset.from_csv(spec["dataset"])
        except (OSError, ValueError) as exc:
            raise ConfigError(f"Cannot load dataset: {exc}", field="spec.dataset") from exc
    return qslp_spec, dataset


def build_ensemble(spec: dict, seed: int):
    """ensemble spec -> (EnsembleSpec, x)."""
    d, n = spec["d"], spec["n"]
    rng = make_rng(seed)
    angles = spec.get("learner_angles")
    if angles is None:
        angles = random_learner_angles(d, n, rng)
    ensemble_spec = EnsembleSpec(
        d=d,
        n=n,
        f_gate=_resolve_gate(spec["f_gate"], n, rng, "spec.f_gate"),
        observable=_resolve_observable(spec["observable"], n, rng),
        weak_learner_angles=angles,
    )
    return ensemble_spec, np.asarray(spec["x"], dtype=float)


def build_control_gates(spec: dict, seed: int):
    raw = spec.get("control_gates")
    if raw is None:
        return None
    rng = make_rng(seed)
    return [_resolve_gate(g, 1, rng, f"spec.control_gates[{k}]") for k, g in enumerate(raw)]
