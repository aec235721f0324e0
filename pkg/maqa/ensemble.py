"""
Quantum ensemble as a special case of the aggregation circuit: uniform
control weights, |0>-controlled gates built from X flips, and a bagging demo
over weak learners modelled as Y rotations.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import gates
from .engine import (
    GateCounter,
    MaqaSpec,
    TrajectoryIndex,
    encode_input,
    measure_aggregate,
    oracle_aggregate,
    run_circuit,
    uniform_beta_amps,
)
from .exceptions import DimensionMismatch, InvalidSpec
from .qsim import Observable, StateVector, UnitaryGate, apply_controlled, apply_unitary

logger = logging.getLogger(__name__)

BAGGING_TOLERANCE = 1e-10
DECOMPOSITION_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """
    Ensemble experiment. Control amplitudes are always uniform.

    weak_learner_angles, when given, holds 2**d vectors of n Y-rotation angles,
    one per learner; gate_pairs are then derived from them.
    """

    d: int
    n: int
    gate_pairs: Tuple[Tuple[UnitaryGate, UnitaryGate], ...] = ()
    f_gate: UnitaryGate = None
    observable: Observable = None
    weak_learner_angles: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.f_gate is None:
            object.__setattr__(self, "f_gate", gates.identity(self.n))
        if self.observable is None:
            object.__setattr__(self, "observable", gates.projector(self.n))
        if self.weak_learner_angles is not None:
            angles = np.array(self.weak_learner_angles, dtype=float)
            if angles.ndim == 1:
                angles = angles.reshape(-1, 1)
            if angles.shape[0] != 2**self.d:
                raise InvalidSpec(
                    f"Expected {2 ** self.d} weak learners for d={self.d}, got {angles.shape[0]}"
                )
            if angles.shape[1] != self.n:
                raise InvalidSpec(f"Each learner needs {self.n} angle(s), got {angles.shape[1]}")
            object.__setattr__(self, "weak_learner_angles", angles)

    def to_maqa_spec(self, x, pairs=None) -> MaqaSpec:
        return MaqaSpec(
            d=self.d,
            n=self.n,
            beta_amps=uniform_beta_amps(self.d),
            x_raw=x,
            gate_pairs=pairs if pairs is not None else self.gate_pairs,
            f_gate=self.f_gate,
            observable=self.observable,
        )


# ============================================================================
# X-FLIP STEP
# ============================================================================


def ensemble_step_xflip(
    state: StateVector,
    i: int,
    g1: UnitaryGate,
    g2: UnitaryGate,
    d: int,
    n: int,
    counter: GateCounter = None,
) -> StateVector:
    """
    Step i using only |1>-controlled gates: X(c), C1(g2), X(c), C1(g1) with c = c_{d+1-i}.

    Produces the same state as trajectory_step.
    """
    if not 1 <= i <= d:
        raise InvalidSpec(f"Step index {i} out of range 1..{d}")
    if state.num_qubits != d + n:
        raise DimensionMismatch(f"State has {state.num_qubits} qubits, expected {d + n}")
    control = d - i
    data = list(range(d, d + n))
    flip = gates.gate("X")
    state = apply_unitary(state, flip, [control])
    state = apply_controlled(state, control, 1, g2, data)
    state = apply_unitary(state, flip, [control])
    state = apply_controlled(state, control, 1, g1, data)
    if counter is not None:
        counter.controlled_g += 2
    return state


# ============================================================================
# WEAK LEARNER ASSIGNMENT
# ============================================================================


def learner_angles_from_steps(step_angles) -> np.ndarray:
    """
    Total rotation of every trajectory when step i rotates by step_angles[i-1][0]
    on bit 1 and step_angles[i-1][1] on bit 0.

    step_angles has shape (d, 2, n); the result has shape (2**d, n).
    """
    step_angles = np.asarray(step_angles, dtype=float)
    d = step_angles.shape[0]
    n = step_angles.shape[2] if step_angles.ndim == 3 else 1
    step_angles = step_angles.reshape(d, 2, n)
    totals = np.zeros((2**d, n))
    for h in range(2**d):
        bits = TrajectoryIndex(h=h, d=d).bits
        for i in range(1, d + 1):
            totals[h] += step_angles[i - 1][0 if bits[d - i] == 1 else 1]
    return totals


def step_angles_for_learners(learner_angles) -> np.ndarray:
    """
    Split per-learner totals into per-step rotation pairs that add up to them.

    Step i reads bit b_{d+1-i}, which is bit i-1 of h. Learner 0 fixes the
    base angles; learner 2**(i-1) fixes the bit-1 angle of step i.

    Raises:
        InvalidSpec: the totals are not an additive function of the trajectory bits
    """
    learner_angles = np.asarray(learner_angles, dtype=float)
    count, n = learner_angles.shape
    d = count.bit_length() - 1
    if count != 2**d:
        raise InvalidSpec(f"Number of learners ({count}) is not a power of two")
    steps = np.zeros((d, 2, n))
    base = learner_angles[0]
    for i in range(1, d + 1):
        if i == 1:
            steps[0][1] = base
            steps[0][0] = learner_angles[1]
        else:
            steps[i - 1][0] = learner_angles[2 ** (i - 1)] - base
    # with no steps nothing rotates, so the single learner must be the identity
    realized = learner_angles_from_steps(steps) if d > 0 else np.zeros_like(learner_angles)
    error = float(np.max(np.abs(realized - learner_angles)))
    if error > DECOMPOSITION_TOLERANCE:
        raise InvalidSpec(
            "Weak learner angles are not additive across steps "
            f"(residual {error:.3e}); generate them with learner_angles_from_steps"
        )
    return steps


def random_learner_angles(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Learner totals built from random per-step rotations, so they always decompose."""
    return learner_angles_from_steps(rng.uniform(-np.pi, np.pi, size=(d, 2, n)))


def step_pairs(steps) -> Tuple[Tuple[UnitaryGate, UnitaryGate], ...]:
    return tuple((gates.ry_layer(step[0]), gates.ry_layer(step[1])) for step in steps)


# ============================================================================
# BAGGING DEMO
# ============================================================================


@dataclass(frozen=True)
class BaggingReport:
    quantum_avg: float
    classical_avg: float
    abs_diff: float
    assignment: Tuple[dict, ...]
    tolerance: float = BAGGING_TOLERANCE

    @property
    def passed(self) -> bool:
        return self.abs_diff <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "quantum_avg": self.quantum_avg,
            "classical_avg": self.classical_avg,
            "abs_diff": self.abs_diff,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "assignment": list(self.assignment),
        }


def classical_average(learner_angles, x, f_gate: UnitaryGate, observable: Observable) -> float:
    """(1/H) sum_h <x|R(phi_h)^dagger F^dagger M F R(phi_h)|x>, with no quantum state."""
    learner_angles = np.asarray(learner_angles, dtype=float)
    n = learner_angles.shape[1]
    x_hat = encode_input(x, n)
    total = 0.0
    for phi in learner_angles:
        psi = f_gate.matrix @ (gates.ry_layer(phi).matrix @ x_hat)
        total += float(np.vdot(psi, observable.matrix @ psi).real)
    return total / len(learner_angles)


def run_bagging_demo(spec: EnsembleSpec, x, tolerance: float = BAGGING_TOLERANCE) -> BaggingReport:
    """
    Average the weak learners with the uniform-weight circuit and classically.

    The report passes when the two averages differ by at most tolerance.

    Raises:
        InvalidSpec: learners missing, wrong count, or not additive across steps
    """
    if spec.weak_learner_angles is None:
        raise InvalidSpec("Bagging demo needs weak_learner_angles")
    learners = spec.weak_learner_angles
    steps = step_angles_for_learners(learners)
    maqa_spec = spec.to_maqa_spec(x, pairs=step_pairs(steps))

    state = run_circuit(maqa_spec)
    quantum_avg = measure_aggregate(state, maqa_spec.observable, maqa_spec.d, maqa_spec.n)
    classical_avg = classical_average(learners, x, spec.f_gate, spec.observable)

    assignment = []
    for h, phi in enumerate(learners):
        bits = TrajectoryIndex(h=h, d=spec.d).bits
        contributions = []
        for i in range(1, spec.d + 1):
            member = 1 if bits[spec.d - i] == 1 else 2
            contributions.append(
                {
                    "step": i,
                    "gate": f"G{i},{member}",
                    "angles": [float(a) for a in steps[i - 1][0 if member == 1 else 1]],
                }
            )
        assignment.append(
            {
                "h": h,
                "bits": TrajectoryIndex(h=h, d=spec.d).label,
                "steps": contributions,
                "total_angles": [float(a) for a in phi],
            }
        )

    report = BaggingReport(
        quantum_avg=quantum_avg,
        classical_avg=classical_avg,
        abs_diff=abs(quantum_avg - classical_avg),
        assignment=tuple(assignment),
        tolerance=tolerance,
    )
    if not report.passed:
        logger.warning("Bagging averages disagree by %.3e", report.abs_diff)
    return report


def uniform_weights_check(spec: EnsembleSpec, x) -> List[float]:
    """Per-trajectory weights from the oracle; all equal 1/2**d for an ensemble."""
    pairs = spec.gate_pairs
    if not pairs and spec.weak_learner_angles is not None:
        pairs = step_pairs(step_angles_for_learners(spec.weak_learner_angles))
    result = oracle_aggregate(spec.to_maqa_spec(x, pairs=pairs))
    return [row.weight for row in result.per_trajectory]
