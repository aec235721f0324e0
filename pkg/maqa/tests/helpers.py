"""Independent dense reference paths used as oracles by the tests."""

import numpy as np


def bits_of(index, num_qubits):
    return [(index >> (num_qubits - 1 - q)) & 1 for q in range(num_qubits)]


def dense_expand(matrix, targets, num_qubits):
    """Full-register matrix of a gate on arbitrary targets, built entry by entry."""
    dim = 2**num_qubits
    k = len(targets)
    others = [q for q in range(num_qubits) if q not in targets]
    full = np.zeros((dim, dim), dtype=complex)
    for row in range(dim):
        row_bits = bits_of(row, num_qubits)
        for col in range(dim):
            col_bits = bits_of(col, num_qubits)
            if any(row_bits[q] != col_bits[q] for q in others):
                continue
            r = sum(row_bits[t] << (k - 1 - j) for j, t in enumerate(targets))
            c = sum(col_bits[t] << (k - 1 - j) for j, t in enumerate(targets))
            full[row, col] = matrix[r, c]
    return full


def dense_expectation(amps, matrix, n_data):
    """<psi| I (x) M |psi> through the full matrix."""
    outer = len(amps) // 2**n_data
    full = np.kron(np.eye(outer), matrix)
    return np.vdot(amps, full @ amps)


def max_diff(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
