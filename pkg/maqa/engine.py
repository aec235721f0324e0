"""
Multiple-aggregator circuit: state preparation, trajectory generation,
interference and measurement, plus the classical trajectory oracle that the
circuit is checked against.

Registers follow the simulator convention: control qubits c_1..c_d are qubits
0..d-1 (c_1 most significant) and the n data qubits follow, so the control
block of trajectory h starts at basis index h * 2**n.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import sqrt
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import gates
from .exceptions import DimensionMismatch, InvalidSpec, RegisterTooLarge
from .qsim import (
    NORM_TOL,
    UNITARY_TOL,
    Observable,
    StateVector,
    UnitaryGate,
    apply_controlled,
    apply_unitary,
    expectation_on_data,
    kron,
    kron_all,
    max_qubits,
)
from .utils import get_setting, make_rng, to_pairs

logger = logging.getLogger(__name__)

APPENDIX_TOLERANCE = 1e-12

GatePair = Tuple[UnitaryGate, UnitaryGate]


# ============================================================================
# DOMAIN TYPES
# ============================================================================


def encode_input(x_raw, n: int) -> np.ndarray:
    """
    Amplitude encoding: zero-pad x to 2**n entries and L2-normalize.

    Raises:
        InvalidSpec: x is empty, too long for n qubits, or the zero vector
    """
    x = np.asarray(x_raw, dtype=complex).reshape(-1)
    if len(x) == 0 or len(x) > 2**n:
        raise InvalidSpec(f"Input of length {len(x)} does not fit {n} data qubit(s)")
    norm = np.linalg.norm(x)
    if norm == 0:
        raise InvalidSpec("Input vector is the zero vector")
    padded = np.zeros(2**n, dtype=complex)
    padded[: len(x)] = x / norm
    return padded


def uniform_beta_amps(d: int) -> np.ndarray:
    """Control amplitudes of H^{(x)d}|0...0>: every trajectory weighted 1/2**d."""
    return np.full(2**d, 1 / sqrt(2**d), dtype=complex)


def product_beta_amps(angles: Sequence[float]) -> np.ndarray:
    """
    Control amplitudes of Ry(a_1) (x) ... (x) Ry(a_d) applied to |0...0>.

    angles[0] rotates c_1, the most significant control qubit.
    """
    factors = [np.array([np.cos(a / 2), np.sin(a / 2)], dtype=complex) for a in angles]
    if not factors:
        return np.ones(1, dtype=complex)
    amps = factors[0]
    for factor in factors[1:]:
        amps = np.kron(amps, factor)
    return amps


@dataclass(frozen=True, eq=False)
class MaqaSpec:
    """Full description of one aggregation experiment."""

    d: int
    n: int
    beta_amps: np.ndarray
    x_raw: np.ndarray
    gate_pairs: Tuple[GatePair, ...]
    f_gate: UnitaryGate
    observable: Observable
    seed: int = 0
    x_hat: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.d < 0:
            raise InvalidSpec(f"d must be >= 0, got {self.d}")
        if self.n < 1:
            raise InvalidSpec(f"n must be >= 1, got {self.n}")
        if self.d + self.n > max_qubits():
            raise RegisterTooLarge(
                f"d + n = {self.d + self.n} exceeds the {max_qubits()}-qubit cap"
            )

        beta = np.array(self.beta_amps, dtype=complex).reshape(-1)
        if len(beta) != 2**self.d:
            raise InvalidSpec(f"beta_amps has {len(beta)} entries, expected {2 ** self.d}")
        drift = abs(float(np.linalg.norm(beta)) - 1.0)
        if drift > NORM_TOL:
            raise InvalidSpec(f"beta_amps must have unit norm (off by {drift:.3e})")

        pairs = tuple(tuple(pair) for pair in self.gate_pairs)
        if len(pairs) != self.d:
            raise InvalidSpec(f"Expected {self.d} gate pairs, got {len(pairs)}")
        for i, pair in enumerate(pairs, start=1):
            if len(pair) != 2:
                raise InvalidSpec(f"Gate pair {i} must hold exactly two gates")
            for j, g in enumerate(pair, start=1):
                if g.dim_qubits != self.n:
                    raise DimensionMismatch(
                        f"G({i},{j}) acts on {g.dim_qubits} qubits, data register has {self.n}"
                    )
        if self.f_gate.dim_qubits != self.n:
            raise DimensionMismatch(f"F acts on {self.f_gate.dim_qubits} qubits, expected {self.n}")
        if self.observable.dim_qubits != self.n:
            raise DimensionMismatch(
                f"Observable acts on {self.observable.dim_qubits} qubits, expected {self.n}"
            )

        x_hat = encode_input(self.x_raw, self.n)
        beta.setflags(write=False)
        x_hat.setflags(write=False)
        object.__setattr__(self, "beta_amps", beta)
        object.__setattr__(self, "x_raw", np.array(self.x_raw, dtype=complex).reshape(-1))
        object.__setattr__(self, "gate_pairs", pairs)
        object.__setattr__(self, "x_hat", x_hat)

    @property
    def trajectory_count(self) -> int:
        return 2**self.d

    @property
    def weights(self) -> np.ndarray:
        return np.abs(self.beta_amps) ** 2


@dataclass(frozen=True)
class TrajectoryIndex:
    """Trajectory label h in [0, 2**d); bits[0] is b_1, the bit of control qubit c_1."""

    h: int
    d: int

    def __post_init__(self):
        if not 0 <= self.h < 2**self.d:
            raise InvalidSpec(f"Trajectory {self.h} out of range for d={self.d}")

    @property
    def bits(self) -> Tuple[int, ...]:
        return tuple((self.h >> (self.d - 1 - k)) & 1 for k in range(self.d))

    @property
    def label(self) -> str:
        return "".join(str(b) for b in self.bits)

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "TrajectoryIndex":
        h = 0
        for bit in bits:
            if bit not in (0, 1):
                raise InvalidSpec(f"Trajectory bits must be 0 or 1, got {bit}")
            h = (h << 1) | bit
        return cls(h=h, d=len(bits))


@dataclass
class GateCounter:
    """Tally of gate applications performed by one circuit run."""

    controlled_g: int = 0
    f: int = 0


@dataclass(frozen=True)
class TrajectoryComponent:
    h: int
    label: str
    weight: float
    component: float


@dataclass(frozen=True)
class AggregateResult:
    oracle_value: float
    per_trajectory: Tuple[TrajectoryComponent, ...]
    quantum_value: Optional[float] = None
    abs_diff: Optional[float] = None

    @property
    def weight_sum(self) -> float:
        total = 0.0
        for row in self.per_trajectory:
            total += row.weight
        return total

    def with_quantum(self, quantum_value: float) -> "AggregateResult":
        return AggregateResult(
            oracle_value=self.oracle_value,
            per_trajectory=self.per_trajectory,
            quantum_value=quantum_value,
            abs_diff=abs(quantum_value - self.oracle_value),
        )

    def as_dict(self) -> dict:
        return {
            "quantum_value": self.quantum_value,
            "oracle_value": self.oracle_value,
            "abs_diff": self.abs_diff,
            "weight_sum": self.weight_sum,
            "per_trajectory": [
                {"h": r.h, "bits": r.label, "weight": r.weight, "component": r.component}
                for r in self.per_trajectory
            ],
        }


@dataclass(frozen=True)
class ClassicalParams:
    """Inputs of the classical cost model H * N**alpha * p**beta."""

    N: int
    p: int
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha < 1 or self.beta < 1:
            raise InvalidSpec(
                f"Cost exponents must be >= 1, got alpha={self.alpha}, beta={self.beta}"
            )
        if self.N < 1 or self.p < 1:
            raise InvalidSpec(f"N and p must be >= 1, got N={self.N}, p={self.p}")

    @classmethod
    def default_for(cls, spec: MaqaSpec) -> "ClassicalParams":
        return cls(N=100, p=len(spec.x_raw))


@dataclass(frozen=True)
class ClassicalCostModel:
    H: int
    N: int
    p: int
    alpha: float
    beta: float
    cost: float


@dataclass(frozen=True)
class ResourceReport:
    d: int
    controlled_g_applications: int
    f_applications: int
    trajectory_count: int
    classical_cost_model: ClassicalCostModel

    def as_dict(self) -> dict:
        model = self.classical_cost_model
        return {
            "d": self.d,
            "controlled_g_applications": self.controlled_g_applications,
            "f_applications": self.f_applications,
            "trajectory_count": self.trajectory_count,
            "classical_cost_model": {
                "H": model.H,
                "N": model.N,
                "p": model.p,
                "alpha": model.alpha,
                "beta": model.beta,
                "cost": model.cost,
            },
        }


@dataclass(frozen=True)
class MaqaRun:
    aggregate: AggregateResult
    resources: ResourceReport


# ============================================================================
# CIRCUIT STEPS
# ============================================================================


def prepare_state(spec: MaqaSpec) -> StateVector:
    """Step 1: sum_h alpha_h |h> (x) |x_hat>."""
    return StateVector(kron(spec.beta_amps.reshape(-1, 1), spec.x_hat.reshape(-1, 1)).reshape(-1))


def _check_register(state: StateVector, d: int, n: int):
    if state.num_qubits != d + n:
        raise DimensionMismatch(
            f"State has {state.num_qubits} qubits, expected d + n = {d + n}"
        )


def trajectory_step(
    state: StateVector,
    i: int,
    g1: UnitaryGate,
    g2: UnitaryGate,
    d: int,
    n: int,
    counter: GateCounter = None,
) -> StateVector:
    """
    Step i of trajectory generation: C1(g1) then C0(g2) on the data register.

    Step i is controlled by c_{d+1-i}, i.e. qubit d - i; step 1 therefore
    controls on the least significant control qubit.
    """
    if not 1 <= i <= d:
        raise InvalidSpec(f"Step index {i} out of range 1..{d}")
    _check_register(state, d, n)
    control = d - i
    data = list(range(d, d + n))
    state = apply_controlled(state, control, 1, g1, data)
    state = apply_controlled(state, control, 0, g2, data)
    if counter is not None:
        counter.controlled_g += 2
    logger.debug("step %d: controlled on qubit %d", i, control)
    return state


def build_trajectories(
    state: StateVector, spec: MaqaSpec, counter: GateCounter = None
) -> StateVector:
    """Step 2: after d steps the block of trajectory h holds alpha_h G(Theta_h)|x_hat>."""
    for i, (g1, g2) in enumerate(spec.gate_pairs, start=1):
        state = trajectory_step(state, i, g1, g2, spec.d, spec.n, counter=counter)
    return state


def trajectory_unitary(h: Union[int, TrajectoryIndex], spec: MaqaSpec) -> UnitaryGate:
    """
    G(Theta_h) = G_{d,sel(b_1)} ... G_{1,sel(b_d)}, where sel(1) = 1 and sel(0) = 2.

    Step i reads bit b_{d+1-i}; the product is written right-to-left in
    application order.
    """
    if not isinstance(h, TrajectoryIndex):
        h = TrajectoryIndex(h=int(h), d=spec.d)
    if h.d != spec.d:
        raise InvalidSpec(f"Trajectory built for d={h.d}, spec has d={spec.d}")
    bits = h.bits
    product = np.eye(2**spec.n, dtype=complex)
    deviation = 0.0
    for i, (g1, g2) in enumerate(spec.gate_pairs, start=1):
        selected = g1 if bits[spec.d - i] == 1 else g2
        product = selected.matrix @ product
        deviation += selected.certificate.deviation
    # deviations of the factors add up, each scaled by at most the dimension
    tolerance = max(UNITARY_TOL, 2 * 2**spec.n * deviation)
    return UnitaryGate(product, label=f"G[{h.label}]", tolerance=tolerance)


def apply_interference(
    state: StateVector, f: UnitaryGate, counter: GateCounter = None
) -> StateVector:
    """Step 3: one application of F on the data register acts on every trajectory."""
    n = f.dim_qubits
    if n > state.num_qubits:
        raise DimensionMismatch(f"F acts on {n} qubits, state has {state.num_qubits}")
    state = apply_unitary(state, f, list(range(state.num_qubits - n, state.num_qubits)))
    if counter is not None:
        counter.f += 1
    return state


def measure_aggregate(state: StateVector, m: Observable, d: int, n: int) -> float:
    """Step 4: <I (x) M> on the data register = sum_h |alpha_h|^2 g(x; Theta_h)."""
    _check_register(state, d, n)
    return expectation_on_data(state, m, n)


def run_circuit(spec: MaqaSpec, counter: GateCounter = None) -> StateVector:
    """Steps 1-3; the returned state is ready for measurement."""
    state = prepare_state(spec)
    state = build_trajectories(state, spec, counter=counter)
    return apply_interference(state, spec.f_gate, counter=counter)


# ============================================================================
# CLASSICAL ORACLE
# ============================================================================


def _component(h: int, spec: MaqaSpec) -> float:
    u = trajectory_unitary(h, spec)
    psi = spec.f_gate.matrix @ (u.matrix @ spec.x_hat)
    return float(np.vdot(psi, spec.observable.matrix @ psi).real)


def oracle_aggregate(spec: MaqaSpec, workers: int = None) -> AggregateResult:
    """
    Classical ground truth: enumerate all 2**d trajectories explicitly.

    Components may be evaluated on a thread pool; the weighted sum is always
    accumulated in ascending h so the result does not depend on `workers`.
    """
    if workers is None:
        workers = int(get_setting("MAQA_ORACLE_WORKERS", 1))
    trajectories = range(spec.trajectory_count)
    if workers > 1 and spec.trajectory_count > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            components = list(pool.map(lambda h: _component(h, spec), trajectories))
    else:
        components = [_component(h, spec) for h in trajectories]

    weights = spec.weights
    rows = []
    total = 0.0
    for h, component in zip(trajectories, components):
        weight = float(weights[h])
        total += weight * component
        rows.append(
            TrajectoryComponent(
                h=h,
                label=TrajectoryIndex(h=h, d=spec.d).label,
                weight=weight,
                component=component,
            )
        )
    return AggregateResult(oracle_value=total, per_trajectory=tuple(rows))


# ============================================================================
# RESOURCES AND FULL RUN
# ============================================================================


def classical_cost(H: int, params: ClassicalParams) -> ClassicalCostModel:
    return ClassicalCostModel(
        H=H,
        N=params.N,
        p=params.p,
        alpha=params.alpha,
        beta=params.beta,
        cost=float(H * params.N**params.alpha * params.p**params.beta),
    )


def count_resources(
    spec: MaqaSpec, classical_params: ClassicalParams, counter: GateCounter = None
) -> ResourceReport:
    """
    Gate tallies of the circuit next to the classical aggregation cost.

    Without a counter from an earlier run, the circuit is executed once to
    take the tallies.
    """
    if counter is None:
        counter = GateCounter()
        run_circuit(spec, counter=counter)
    return ResourceReport(
        d=spec.d,
        controlled_g_applications=counter.controlled_g,
        f_applications=counter.f,
        trajectory_count=spec.trajectory_count,
        classical_cost_model=classical_cost(spec.trajectory_count, classical_params),
    )


def run_maqa(
    spec: MaqaSpec, classical_params: ClassicalParams = None, workers: int = None
) -> MaqaRun:
    """Run steps 1-4, the classical oracle, and the resource count."""
    logger.info("Running aggregation circuit d=%d n=%d seed=%d", spec.d, spec.n, spec.seed)
    counter = GateCounter()
    state = run_circuit(spec, counter=counter)
    quantum_value = measure_aggregate(state, spec.observable, spec.d, spec.n)
    aggregate = oracle_aggregate(spec, workers=workers).with_quantum(quantum_value)
    resources = count_resources(
        spec, classical_params or ClassicalParams.default_for(spec), counter=counter
    )
    logger.info(
        "Aggregate quantum=%.17g oracle=%.17g diff=%.3e",
        aggregate.quantum_value,
        aggregate.oracle_value,
        aggregate.abs_diff,
    )
    return MaqaRun(aggregate=aggregate, resources=resources)


def random_maqa_spec(
    d: int, n: int, seed: int, observable: Observable = None, x_len: int = None
) -> MaqaSpec:
    """Seeded spec with random gate pairs, control amplitudes, input, F and observable."""
    rng = make_rng(seed)
    pairs = tuple(
        (
            gates.random_unitary(n, rng, label=f"G{i},1"),
            gates.random_unitary(n, rng, label=f"G{i},2"),
        )
        for i in range(1, d + 1)
    )
    x_raw = gates.random_amplitudes(x_len or 2**n, rng)
    return MaqaSpec(
        d=d,
        n=n,
        beta_amps=gates.random_amplitudes(2**d, rng),
        x_raw=x_raw,
        gate_pairs=pairs,
        f_gate=gates.random_unitary(n, rng, label="F"),
        observable=observable or gates.random_hermitian(n, rng),
        seed=seed,
    )


def resource_sweep(
    d_values: Sequence[int], n: int = 1, classical_params: ClassicalParams = None, seed: int = 0
) -> List[ResourceReport]:
    """Instrumented gate counts for each d, next to the classical 2**d cost."""
    reports = []
    for d in d_values:
        spec = random_maqa_spec(d, n, seed + d)
        params = classical_params or ClassicalParams.default_for(spec)
        reports.append(count_resources(spec, params))
    return reports


# ============================================================================
# APPENDIX CHECK (d = 3)
# ============================================================================

# label, coefficient of each control qubit, gates in product order (step, member)
APPENDIX_EXPANSION = (
    ("000", ("a1", "a2", "a3"), ((3, 2), (2, 2), (1, 2))),
    ("001", ("a1", "a2", "b3"), ((3, 2), (2, 2), (1, 1))),
    ("010", ("a1", "b2", "a3"), ((3, 2), (2, 1), (1, 2))),
    ("011", ("a1", "b2", "b3"), ((3, 2), (2, 1), (1, 1))),
    ("100", ("b1", "a2", "a3"), ((3, 1), (2, 2), (1, 2))),
    ("101", ("b1", "a2", "b3"), ((3, 1), (2, 2), (1, 1))),
    ("110", ("b1", "b2", "a3"), ((3, 1), (2, 1), (1, 2))),
    ("111", ("b1", "b2", "b3"), ((3, 1), (2, 1), (1, 1))),
)


@dataclass(frozen=True)
class AppendixCheck:
    label: str
    coefficient: str
    gates: str
    beta: complex
    max_diff: float
    passed: bool


@dataclass(frozen=True)
class AppendixReport:
    seed: int
    tolerance: float
    checks: Tuple[AppendixCheck, ...]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def max_diff(self) -> float:
        return max(check.max_diff for check in self.checks)

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "max_diff": self.max_diff,
            "checks": [
                {
                    "label": c.label,
                    "coefficient": c.coefficient,
                    "gates": c.gates,
                    "beta": to_pairs([c.beta])[0],
                    "max_diff": c.max_diff,
                    "passed": c.passed,
                }
                for c in self.checks
            ],
        }


def verify_appendix(
    seed: int,
    control_gates: Sequence[UnitaryGate] = None,
    tolerance: float = APPENDIX_TOLERANCE,
) -> AppendixReport:
    """
    Build the d=3 circuit with S_beta = B_1 (x) B_2 (x) B_3 and compare every
    control block against the closed-form expansion beta*_h G(Theta_h)|x_hat>.

    B_k|0> = a_k|0> + b_k|1>; the expansion table is written out literally so
    it does not share code with trajectory_unitary.
    """
    rng = make_rng(seed)
    d, n = 3, 1
    if control_gates is None:
        control_gates = [gates.random_unitary(1, rng, label=f"B{k}") for k in (1, 2, 3)]
    if len(control_gates) != d:
        raise InvalidSpec(f"Expected 3 control gates, got {len(control_gates)}")
    pairs = tuple(
        (
            gates.random_unitary(n, rng, label=f"G{i},1"),
            gates.random_unitary(n, rng, label=f"G{i},2"),
        )
        for i in (1, 2, 3)
    )
    x_raw = gates.random_amplitudes(2**n, rng)

    spec = MaqaSpec(
        d=d,
        n=n,
        beta_amps=kron_all([b.matrix[:, :1] for b in control_gates]).reshape(-1),
        x_raw=x_raw,
        gate_pairs=pairs,
        f_gate=gates.identity(n),
        observable=gates.projector(n),
        seed=seed,
    )

    # S_beta applied gate by gate to |000>|x_hat>
    initial = np.zeros(2 ** (d + n), dtype=complex)
    initial[: 2**n] = spec.x_hat
    state = StateVector(initial)
    for qubit, b in enumerate(control_gates):
        state = apply_unitary(state, b, [qubit])
    state = build_trajectories(state, spec)

    coefficients = {}
    for k, b in enumerate(control_gates, start=1):
        coefficients[f"a{k}"] = b.matrix[0, 0]
        coefficients[f"b{k}"] = b.matrix[1, 0]

    checks = []
    for label, coefficient_names, selection in APPENDIX_EXPANSION:
        beta = complex(np.prod([coefficients[name] for name in coefficient_names]))
        vector = spec.x_hat
        for step, member in reversed(selection):
            vector = pairs[step - 1][member - 1].matrix @ vector
        expected = beta * vector
        actual = state.block(int(label, 2), n)
        diff = float(np.max(np.abs(actual - expected)))
        checks.append(
            AppendixCheck(
                label=label,
                coefficient="*".join(coefficient_names),
                gates=" ".join(f"G{s},{m}" for s, m in selection),
                beta=beta,
                max_diff=diff,
                passed=diff <= tolerance,
            )
        )

    report = AppendixReport(seed=seed, tolerance=tolerance, checks=tuple(checks))
    if report.passed:
        logger.info("Appendix check passed for seed %d (max diff %.3e)", seed, report.max_diff)
    else:
        logger.warning("Appendix check FAILED for seed %d (max diff %.3e)", seed, report.max_diff)
    return report
