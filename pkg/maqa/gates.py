"""
Gate presets and seeded random operators.
"""

import re
from math import cos, sin, sqrt
from typing import Sequence

import numpy as np

from .exceptions import InvalidSpec
from .qsim import Observable, StateVector, UnitaryGate, kron_all

_SQRT2_INV = 1 / sqrt(2)

FIXED_GATES = {
    "I": np.array([[1, 0], [0, 1]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV,
}

ROTATIONS = {
    "RX": lambda t: np.array(
        [[cos(t / 2), -1j * sin(t / 2)], [-1j * sin(t / 2), cos(t / 2)]], dtype=complex
    ),
    "RY": lambda t: np.array([[cos(t / 2), -sin(t / 2)], [sin(t / 2), cos(t / 2)]], dtype=complex),
    "RZ": lambda t: np.array([[np.exp(-1j * t / 2), 0], [0, np.exp(1j * t / 2)]], dtype=complex),
}

_PRESET_RE = re.compile(r"^\s*(R[XYZ])\s*\(\s*([-+0-9.eE]+)\s*\)\s*$", re.IGNORECASE)


def gate(name: str) -> UnitaryGate:
    return UnitaryGate(FIXED_GATES[name], label=name)


def ry(theta: float) -> UnitaryGate:
    return UnitaryGate(ROTATIONS["RY"](theta), label=f"Ry({theta:g})")


def identity(n_qubits: int) -> UnitaryGate:
    return UnitaryGate(np.eye(2**n_qubits, dtype=complex), label=f"I{n_qubits}")


def preset(name: str) -> UnitaryGate:
    """
    Resolve a single-qubit preset name: I, X, Y, Z, H, Rx(t), Ry(t), Rz(t).

    Raises:
        InvalidSpec: unknown preset or unparsable angle
    """
    key = name.strip().upper()
    if key in FIXED_GATES:
        return gate(key)
    match = _PRESET_RE.match(name)
    if not match:
        raise InvalidSpec(f"Unknown gate preset '{name}'")
    kind, angle = match.group(1).upper(), match.group(2)
    try:
        theta = float(angle)
    except ValueError as exc:
        raise InvalidSpec(f"Bad rotation angle in preset '{name}'") from exc
    return UnitaryGate(ROTATIONS[kind](theta), label=f"{kind.capitalize()}({theta:g})")


def tensor_presets(names: Sequence[str]) -> UnitaryGate:
    """Tensor product of single-qubit presets; names[0] acts on the most significant qubit."""
    gates = [preset(n) for n in names]
    return UnitaryGate(kron_all([g.matrix for g in gates]), label="(x)".join(g.label for g in gates))


def ry_layer(angles: Sequence[float]) -> UnitaryGate:
    """One Y rotation per qubit."""
    return UnitaryGate(
        kron_all([ROTATIONS["RY"](float(a)) for a in angles]),
        label="Ry[" + ",".join(f"{float(a):g}" for a in angles) + "]",
    )


def controlled_flip_ladder(n_qubits: int) -> UnitaryGate:
    """
    Nearest-neighbour CNOT chain: CX(0->1), then CX(1->2), ..., on n_qubits qubits.

    Qubit 0 is the most significant bit, matching the simulator convention.
    """
    dim = 2**n_qubits
    perm = np.zeros((dim, dim), dtype=complex)
    for index in range(dim):
        bits = [(index >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits)]
        for q in range(n_qubits - 1):
            if bits[q]:
                bits[q + 1] ^= 1
        target = 0
        for bit in bits:
            target = (target << 1) | bit
        perm[target, index] = 1.0
    return UnitaryGate(perm, label=f"CXladder{n_qubits}")


# ============================================================================
# OBSERVABLES
# ============================================================================


def projector(n_qubits: int, qubit: int = 0, value: int = 1) -> Observable:
    """|value><value| on one qubit of an n_qubits register, identity elsewhere."""
    single = np.zeros((2, 2), dtype=complex)
    single[value, value] = 1.0
    factors = [FIXED_GATES["I"]] * n_qubits
    factors[qubit] = single
    return Observable(kron_all(factors), label=f"P{value}[{qubit}]")


def pauli_string(names: Sequence[str]) -> Observable:
    """Tensor product of single-qubit Paulis, e.g. ("Z", "I")."""
    for name in names:
        if name.upper() not in ("I", "X", "Y", "Z"):
            raise InvalidSpec(f"'{name}' is not a Pauli operator")
    return Observable(
        kron_all([FIXED_GATES[name.upper()] for name in names]),
        label="".join(name.upper() for name in names),
    )


# ============================================================================
# SEEDED RANDOM OPERATORS
# ============================================================================


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / sqrt(2)


def random_unitary(n_qubits: int, rng: np.random.Generator, label: str = "") -> UnitaryGate:
    """Orthonormalize a complex Gaussian matrix (QR with the phase of R's diagonal removed)."""
    dim = 2**n_qubits
    q, r = np.linalg.qr(_complex_gaussian(rng, (dim, dim)))
    diag = np.diag(r)
    return UnitaryGate(q * (diag / np.abs(diag)), label=label or f"U{n_qubits}")


def random_amplitudes(dim: int, rng: np.random.Generator) -> np.ndarray:
    amps = _complex_gaussian(rng, dim)
    return amps / np.linalg.norm(amps)


def random_state(n_qubits: int, rng: np.random.Generator) -> StateVector:
    return StateVector(random_amplitudes(2**n_qubits, rng))


def random_hermitian(n_qubits: int, rng: np.random.Generator) -> Observable:
    dim = 2**n_qubits
    a = _complex_gaussian(rng, (dim, dim))
    return Observable((a + a.conj().T) / 2, label=f"M{n_qubits}")
