"""
Dense statevector simulation on a qubit register.

Qubit 0 is the most significant bit of the basis index. In the aggregation
circuit the control qubits c_1..c_d are qubits 0..d-1 and the n data qubits
follow, so the basis index of |h>|k> is h * 2**n + k.
"""

import logging
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence, Tuple

import numpy as np

from .exceptions import (
    DimensionMismatch,
    NonHermitian,
    NonUnitary,
    NumericalError,
    RegisterTooLarge,
)
from .utils import get_setting

logger = logging.getLogger(__name__)

UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-10
NORM_TOL = 1e-12
IMAG_TOL = 1e-12
DEFAULT_MAX_QUBITS = 20


def max_qubits() -> int:
    """Largest register the dense simulator accepts."""
    return int(get_setting("MAQA_MAX_QUBITS", DEFAULT_MAX_QUBITS))


def qubits_for_dimension(dim: int) -> int:
    if dim < 1 or dim & (dim - 1):
        raise DimensionMismatch(f"Dimension {dim} is not a power of two")
    return dim.bit_length() - 1


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _square_matrix(matrix) -> np.ndarray:
    matrix = np.array(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatch(f"Expected a square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise NumericalError("Matrix contains NaN or Inf entries")
    return matrix


# ============================================================================
# VALUE TYPES
# ============================================================================


@dataclass(frozen=True)
class UnitarityCertificate:
    """Proof that a matrix passed the unitarity check, with the measured deviation."""

    dim_qubits: int
    deviation: float


def validate_unitary(matrix, tolerance: float = UNITARY_TOL) -> UnitarityCertificate:
    """
    Check that max |U^dagger U - I| <= tolerance (UNITARY_TOL unless widened).

    Returns:
        UnitarityCertificate with the measured deviation

    Raises:
        DimensionMismatch: matrix is not square
        NonUnitary: deviation above tolerance
    """
    matrix = _square_matrix(matrix)
    identity = np.eye(matrix.shape[0], dtype=complex)
    deviation = float(np.max(np.abs(matrix.conj().T @ matrix - identity)))
    if deviation > tolerance:
        raise NonUnitary(deviation)
    return UnitarityCertificate(
        dim_qubits=qubits_for_dimension(matrix.shape[0]), deviation=deviation
    )


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized, immutable amplitude vector of length 2**num_qubits."""

    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        num_qubits = qubits_for_dimension(len(amps))
        if num_qubits > max_qubits():
            raise RegisterTooLarge(
                f"{num_qubits} qubits requested, dense simulation is capped at {max_qubits()}"
            )
        if not np.all(np.isfinite(amps)):
            raise NumericalError("State contains NaN or Inf amplitudes")
        drift = abs(float(np.linalg.norm(amps)) - 1.0)
        if drift > NORM_TOL:
            raise NumericalError(f"State norm drifted by {drift:.3e}")
        object.__setattr__(self, "amps", _readonly(amps))

    @property
    def num_qubits(self) -> int:
        return len(self.amps).bit_length() - 1

    @classmethod
    def basis(cls, num_qubits: int, index: int = 0) -> "StateVector":
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def block(self, h: int, n_data: int) -> np.ndarray:
        """Amplitudes of the data register where the outer register reads h."""
        size = 2**n_data
        return self.amps[h * size : (h + 1) * size]


@dataclass(frozen=True, eq=False)
class UnitaryGate:
    """Square unitary matrix acting on dim_qubits qubits, validated on construction."""

    matrix: np.ndarray
    label: str = ""
    tolerance: float = field(default=UNITARY_TOL, repr=False)
    certificate: UnitarityCertificate = field(init=False, repr=False)

    def __post_init__(self):
        matrix = _square_matrix(self.matrix)
        certificate = validate_unitary(matrix, self.tolerance)
        object.__setattr__(self, "matrix", _readonly(matrix))
        object.__setattr__(self, "certificate", certificate)

    @property
    def dim_qubits(self) -> int:
        return self.certificate.dim_qubits

    def __matmul__(self, other: "UnitaryGate") -> "UnitaryGate":
        if other.dim_qubits != self.dim_qubits:
            raise DimensionMismatch(
                f"Cannot compose {self.dim_qubits}-qubit and {other.dim_qubits}-qubit gates"
            )
        return UnitaryGate(self.matrix @ other.matrix, label=f"{self.label}*{other.label}")


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian measurement operator on dim_qubits qubits."""

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        matrix = _square_matrix(self.matrix)
        deviation = float(np.max(np.abs(matrix - matrix.conj().T)))
        if deviation > HERMITIAN_TOL:
            raise NonHermitian(deviation)
        qubits_for_dimension(matrix.shape[0])
        object.__setattr__(self, "matrix", _readonly(matrix))

    @property
    def dim_qubits(self) -> int:
        return self.matrix.shape[0].bit_length() - 1

    def eigenvalue_bounds(self) -> Tuple[float, float]:
        eigenvalues = np.linalg.eigvalsh(self.matrix)
        return float(eigenvalues[0]), float(eigenvalues[-1])


# ============================================================================
# OPERATIONS
# ============================================================================


def kron(a, b) -> np.ndarray:
    """Kronecker product; entry (i*rows(b)+k, j*cols(b)+l) = a[i,j] * b[k,l]."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_all(matrices: Sequence) -> np.ndarray:
    """Left-to-right Kronecker product; the first factor lands on the most significant qubits."""
    if not matrices:
        return np.ones((1, 1), dtype=complex)
    return reduce(kron, matrices)


def _check_targets(num_qubits: int, targets: Sequence[int], gate_qubits: int) -> list:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise DimensionMismatch(f"Target qubits must be distinct, got {targets}")
    for target in targets:
        if not 0 <= target < num_qubits:
            raise DimensionMismatch(
                f"Target qubit {target} out of range for a {num_qubits}-qubit register"
            )
    if len(targets) != gate_qubits:
        raise DimensionMismatch(
            f"{gate_qubits}-qubit gate applied to {len(targets)} target(s)"
        )
    return targets


def _apply_tensor(psi: np.ndarray, matrix: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    # psi has one axis of length 2 per qubit; targets[0] is the gate's most significant qubit
    k = len(targets)
    gate = matrix.reshape([2] * (2 * k))
    out = np.tensordot(gate, psi, axes=(list(range(k, 2 * k)), list(targets)))
    return np.moveaxis(out, list(range(k)), list(targets))


def _gate_output(amps: np.ndarray, u: UnitaryGate) -> StateVector:
    # |norm(U psi) - 1| <= dim(U) * deviation for an accepted gate; drift inside that is rescaled
    drift = abs(float(np.linalg.norm(amps)) - 1.0)
    allowed = 2**u.dim_qubits * max(u.certificate.deviation, NORM_TOL) + NORM_TOL
    if NORM_TOL < drift <= allowed:
        logger.debug("rescaling state after %s, norm drift %.3e", u.label or "gate", drift)
        amps = amps / np.linalg.norm(amps)
    return StateVector(amps)


def apply_unitary(state: StateVector, u: UnitaryGate, targets: Sequence[int]) -> StateVector:
    """
    Apply u to the ordered target qubits of state.

    Equivalent to multiplying by the full-register matrix obtained by
    Kronecker-expanding u with identities on every other qubit.
    """
    targets = _check_targets(state.num_qubits, targets, u.dim_qubits)
    psi = state.amps.reshape([2] * state.num_qubits)
    return _gate_output(_apply_tensor(psi, u.matrix, targets).reshape(-1), u)


def apply_controlled(
    state: StateVector,
    control: int,
    control_value: int,
    u: UnitaryGate,
    targets: Sequence[int],
) -> StateVector:
    """
    Apply u to targets on the branch where qubit `control` reads control_value.

    Amplitudes on the other branch are left untouched.
    """
    if control_value not in (0, 1):
        raise DimensionMismatch(f"control_value must be 0 or 1, got {control_value}")
    if not 0 <= control < state.num_qubits:
        raise DimensionMismatch(
            f"Control qubit {control} out of range for a {state.num_qubits}-qubit register"
        )
    if control in targets:
        raise DimensionMismatch(f"Control qubit {control} is also a target")
    targets = _check_targets(state.num_qubits, targets, u.dim_qubits)

    psi = state.amps.reshape([2] * state.num_qubits).copy()
    branch = [slice(None)] * state.num_qubits
    branch[control] = control_value
    branch = tuple(branch)
    branch_targets = [t - 1 if t > control else t for t in targets]
    psi[branch] = _apply_tensor(psi[branch], u.matrix, branch_targets)
    return _gate_output(psi.reshape(-1), u)


def expectation_terms(state: StateVector, m: Observable, n_data: int) -> Tuple[float, float]:
    """
    Real and imaginary part of <psi| I (x) M |psi> with M on the last n_data qubits.
    """
    if m.dim_qubits != n_data:
        raise DimensionMismatch(
            f"Observable acts on {m.dim_qubits} qubits, data register has {n_data}"
        )
    if n_data > state.num_qubits:
        raise DimensionMismatch(
            f"Data register of {n_data} qubits exceeds the {state.num_qubits}-qubit state"
        )
    # one row per outer-register basis state, ascending
    psi = state.amps.reshape(-1, 2**n_data)
    value = np.vdot(psi, psi @ m.matrix.T)
    return float(value.real), float(value.imag)


def expectation_on_data(state: StateVector, m: Observable, n_data: int) -> float:
    """
    Measure M on the data register, leaving the outer register untouched.

    Raises:
        DimensionMismatch: observable does not fit the data register
        NumericalError: imaginary residue above IMAG_TOL
    """
    real, imag = expectation_terms(state, m, n_data)
    if abs(imag) > IMAG_TOL:
        raise NumericalError(f"Expectation has imaginary residue {imag:.3e}")
    return real
