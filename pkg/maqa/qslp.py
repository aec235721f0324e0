"""
Quantum single layer perceptron: the aggregation circuit with 2**d hidden
neurons, one per trajectory, trained by finite-difference gradient descent.
"""

import logging
from dataclasses import dataclass, field, replace
from math import pi
from typing import Callable, List, Sequence, Tuple

import numpy as np

from . import gates
from .engine import (
    AggregateResult,
    MaqaSpec,
    measure_aggregate,
    oracle_aggregate,
    product_beta_amps,
    run_circuit,
)
from .exceptions import InvalidSpec, TrainingDiverged
from .qsim import Observable, UnitaryGate
from .utils import make_rng, write_csv

logger = logging.getLogger(__name__)

DEFAULT_FD_STEP = 1e-4


# ============================================================================
# DOMAIN TYPES
# ============================================================================


def template_gate(angles: Sequence[float]) -> UnitaryGate:
    """
    One parametrized G(theta): a Y rotation per data qubit, then the
    nearest-neighbour CNOT ladder when there are two or more data qubits.
    """
    layer = gates.ry_layer(angles)
    if len(angles) < 2:
        return layer
    return gates.controlled_flip_ladder(len(angles)) @ layer


@dataclass(frozen=True, eq=False)
class QslpSpec:
    """
    theta holds 2*d*n angles laid out step by step: for step i the n angles
    of G(theta_{i,1}) come first, then the n angles of G(theta_{i,2}).
    beta_params holds one Y-rotation angle per control qubit.
    """

    d: int
    n: int
    theta: np.ndarray
    beta_params: np.ndarray
    f_gate: UnitaryGate = None
    seed: int = 0
    observable: Observable = field(init=False, repr=False)

    def __post_init__(self):
        if self.d < 0 or self.n < 1:
            raise InvalidSpec(f"Invalid register sizes d={self.d}, n={self.n}")
        theta = np.array(self.theta, dtype=float).reshape(-1)
        beta_params = np.array(self.beta_params, dtype=float).reshape(-1)
        if len(theta) != self.parameters_per_gate * 2 * self.d:
            raise InvalidSpec(
                f"theta has {len(theta)} entries, template needs {2 * self.d * self.n}"
            )
        if len(beta_params) != self.d:
            raise InvalidSpec(f"beta_params has {len(beta_params)} entries, expected {self.d}")
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(beta_params))):
            raise InvalidSpec("Parameters must be finite")
        f_gate = self.f_gate if self.f_gate is not None else gates.identity(self.n)
        if f_gate.dim_qubits != self.n:
            raise InvalidSpec(f"F acts on {f_gate.dim_qubits} qubits, expected {self.n}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "beta_params", beta_params)
        object.__setattr__(self, "f_gate", f_gate)
        object.__setattr__(self, "observable", gates.projector(self.n, qubit=0, value=1))

    @property
    def parameters_per_gate(self) -> int:
        return self.n

    @property
    def hidden_neurons(self) -> int:
        return 2**self.d

    @property
    def parameters(self) -> np.ndarray:
        """Flat trainable vector: theta followed by beta_params."""
        return np.concatenate([self.theta, self.beta_params])

    def with_parameters(self, params: Sequence[float]) -> "QslpSpec":
        params = np.asarray(params, dtype=float)
        split = len(self.theta)
        return replace(self, theta=params[:split], beta_params=params[split:])

    def gate_pairs(self) -> Tuple[Tuple[UnitaryGate, UnitaryGate], ...]:
        n = self.n
        pairs = []
        for i in range(self.d):
            base = 2 * n * i
            pairs.append(
                (
                    template_gate(self.theta[base : base + n]),
                    template_gate(self.theta[base + n : base + 2 * n]),
                )
            )
        return tuple(pairs)

    def to_maqa_spec(self, x, pairs=None) -> MaqaSpec:
        return MaqaSpec(
            d=self.d,
            n=self.n,
            beta_amps=product_beta_amps(self.beta_params),
            x_raw=np.asarray(x, dtype=float),
            gate_pairs=pairs if pairs is not None else self.gate_pairs(),
            f_gate=self.f_gate,
            observable=self.observable,
            seed=self.seed,
        )


def random_qslp_spec(d: int, n: int, seed: int, f_gate: UnitaryGate = None) -> QslpSpec:
    """Parameters drawn uniformly from [-pi, pi)."""
    rng = make_rng(seed)
    return QslpSpec(
        d=d,
        n=n,
        theta=rng.uniform(-pi, pi, size=2 * d * n),
        beta_params=rng.uniform(-pi, pi, size=d),
        f_gate=f_gate,
        seed=seed,
    )


@dataclass(frozen=True, eq=False)
class ToyDataset:
    points: Tuple[Tuple[np.ndarray, float], ...]

    def __post_init__(self):
        points = []
        for index, (x, label) in enumerate(self.points):
            x = np.array(x, dtype=float).reshape(-1)
            if not np.any(x):
                raise InvalidSpec(f"Point {index} is the zero vector")
            if label not in (0.0, 1.0):
                raise InvalidSpec(f"Point {index} has non-binary label {label}")
            points.append((x, float(label)))
        object.__setattr__(self, "points", tuple(points))

    def __len__(self):
        return len(self.points)

    @classmethod
    def from_csv(cls, path) -> "ToyDataset":
        """Rows of x_0,...,x_k,label; a header line is skipped."""
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(tuple((row[:-1], row[-1]) for row in table))

    def to_csv(self, path):
        width = len(self.points[0][0])
        header = [f"x{k}" for k in range(width)] + ["label"]
        write_csv(path, header, [np.append(x, label) for x, label in self.points])


def make_toy_dataset(seed: int = 7, size: int = 10) -> ToyDataset:
    """
    Linearly separable 2D set. Class 0 points lie near the first axis and
    class 1 points near the second; labels alternate.
    """
    rng = make_rng(seed)
    points = []
    for index in range(size):
        label = float(index % 2)
        angle = rng.uniform(0.05, 0.35) if label == 0.0 else rng.uniform(1.25, 1.5)
        radius = rng.uniform(0.5, 2.0)
        points.append((radius * np.array([np.cos(angle), np.sin(angle)]), label))
    return ToyDataset(tuple(points))


@dataclass
class TrainReport:
    loss_trace: List[float]
    final_theta: np.ndarray
    final_beta_params: np.ndarray
    epochs: int
    learning_rate: float
    fd_step: float
    seed: int = None

    def as_dict(self) -> dict:
        return {
            "loss_trace": list(self.loss_trace),
            "final_theta": [float(v) for v in self.final_theta],
            "final_beta_params": [float(v) for v in self.final_beta_params],
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "fd_step": self.fd_step,
            "seed": self.seed,
            "initial_loss": self.loss_trace[0],
            "final_loss": self.loss_trace[-1],
        }


# ============================================================================
# PREDICTION AND LOSS
# ============================================================================


def qslp_predict(x, spec: QslpSpec, pairs=None) -> float:
    """Probability of reading |1> on the first data qubit after the full circuit."""
    maqa_spec = spec.to_maqa_spec(x, pairs=pairs)
    state = run_circuit(maqa_spec)
    value = measure_aggregate(state, maqa_spec.observable, maqa_spec.d, maqa_spec.n)
    # a projector expectation can leave [0, 1] only by rounding; NaN passes through
    return float(np.clip(value, 0.0, 1.0))


def qslp_loss(data: ToyDataset, spec: QslpSpec) -> float:
    """Mean squared error over the dataset, summed in point order."""
    if len(data) == 0:
        raise InvalidSpec("Cannot evaluate the loss of an empty dataset")
    pairs = spec.gate_pairs()
    total = 0.0
    for x, label in data.points:
        total += (qslp_predict(x, spec, pairs=pairs) - label) ** 2
    return total / len(data)


def qslp_accuracy(data: ToyDataset, spec: QslpSpec, threshold: float = 0.5) -> float:
    if len(data) == 0:
        raise InvalidSpec("Cannot evaluate accuracy of an empty dataset")
    pairs = spec.gate_pairs()
    hits = sum(
        (qslp_predict(x, spec, pairs=pairs) >= threshold) == (label == 1.0)
        for x, label in data.points
    )
    return hits / len(data)


def qslp_hidden_outputs(x, spec: QslpSpec) -> AggregateResult:
    """Per-neuron outputs and weights, read from the classical trajectory oracle."""
    return oracle_aggregate(spec.to_maqa_spec(x))


# ============================================================================
# TRAINING
# ============================================================================


def central_difference(fn: Callable[[np.ndarray], float], params, step: float) -> np.ndarray:
    """Central finite-difference gradient of fn at params."""
    if step <= 0:
        raise InvalidSpec(f"Finite-difference step must be positive, got {step}")
    params = np.array(params, dtype=float)
    grad = np.zeros_like(params)
    for k in range(len(params)):
        shifted = params.copy()
        shifted[k] = params[k] + step
        forward = fn(shifted)
        shifted[k] = params[k] - step
        backward = fn(shifted)
        grad[k] = (forward - backward) / (2 * step)
    return grad


def qslp_gradient_fd(data: ToyDataset, spec: QslpSpec, step: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Gradient of the MSE with respect to (theta, beta_params)."""
    return central_difference(
        lambda params: qslp_loss(data, spec.with_parameters(params)), spec.parameters, step
    )


def qslp_train(
    data: ToyDataset,
    spec: QslpSpec,
    epochs: int,
    learning_rate: float,
    fd_step: float = DEFAULT_FD_STEP,
    seed: int = None,
) -> TrainReport:
    """
    Full-batch gradient descent.

    When seed is given the starting parameters are drawn from it; otherwise
    training starts from the parameters already in spec.

    Raises:
        InvalidSpec: epochs < 1 or negative learning rate
        TrainingDiverged: loss or parameters became NaN or infinite
    """
    if epochs < 1:
        raise InvalidSpec(f"epochs must be >= 1, got {epochs}")
    if learning_rate < 0:
        raise InvalidSpec(f"learning_rate must be >= 0, got {learning_rate}")
    if seed is not None:
        spec = random_qslp_spec(spec.d, spec.n, seed, f_gate=spec.f_gate)

    loss = qslp_loss(data, spec)
    trace = [loss]
    logger.info("qSLP training: H=%d hidden neurons, initial loss %.6f", spec.hidden_neurons, loss)
    for epoch in range(1, epochs + 1):
        grad = qslp_gradient_fd(data, spec, fd_step)
        updated = spec.parameters - learning_rate * grad
        if not np.all(np.isfinite(updated)):
            logger.error("Training diverged at epoch %d: non-finite parameters", epoch)
            raise TrainingDiverged(epoch, loss, detail="Parameters became non-finite")
        spec = spec.with_parameters(updated)
        loss = qslp_loss(data, spec)
        if not np.isfinite(loss):
            logger.error("Training diverged at epoch %d", epoch)
            raise TrainingDiverged(epoch, loss)
        trace.append(loss)
        if epoch % 10 == 0:
            logger.info("epoch %d loss %.6f", epoch, loss)

    return TrainReport(
        loss_trace=trace,
        final_theta=spec.theta,
        final_beta_params=spec.beta_params,
        epochs=epochs,
        learning_rate=learning_rate,
        fd_step=fd_step,
        seed=seed,
    )
