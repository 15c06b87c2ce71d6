"""Independent dense oracles used across the test modules.

Everything here is built from first principles with ``np.kron`` and explicit
4x4 / 2x2 matrices, deliberately not reusing the package's own Pauli algebra
or simulator, so agreement between the two is a real cross-check.
"""

from __future__ import annotations

import numpy as np

I2 = np.eye(2, dtype=complex)
PAULI = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_all(factors):
    out = np.array([[1.0 + 0.0j]])
    for f in factors:
        out = np.kron(out, f)
    return out


def dense_from_pairs(pairs, n_qubits=None):
    """Dense matrix of a list of ``(coefficient, label)`` pairs.

    The leftmost letter of each label acts on qubit 0, which is the most
    significant bit of the basis index.
    """
    if n_qubits is None:
        n_qubits = len(pairs[0][1])
    dim = 1 << n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for coeff, label in pairs:
        out += coeff * kron_all(PAULI[ch] for ch in label)
    return out


def pairs_of(s):
    """``(coefficient, label)`` view of a package ``PauliSum``."""
    return [(t.coefficient, t.label) for t in s.terms()]


def dense_of(s):
    """Dense oracle matrix of a package ``PauliSum``."""
    return dense_from_pairs(pairs_of(s), s.n_qubits)


def one_qubit_embedded(u, target, n_qubits):
    factors = [I2] * n_qubits
    factors[target] = u
    return kron_all(factors)


def rotation(kind, angle):
    c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
    if kind == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind == "ry":
        return np.array([[c, -s], [s, c]])
    if kind == "rz":
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]])
    raise ValueError(kind)


def controlled(u, control, target, n_qubits):
    """|0><0|_c (x) 1 + |1><1|_c (x) U_t embedded in the full register."""
    p0 = np.array([[1, 0], [0, 0]], dtype=complex)
    p1 = np.array([[0, 0], [0, 1]], dtype=complex)
    idle = [I2] * n_qubits
    left = list(idle)
    left[control] = p0
    right = list(idle)
    right[control] = p1
    right[target] = u
    return kron_all(left) + kron_all(right)


def dense_circuit_matrix(circuit, theta):
    """Full unitary of a package ``Circuit``, built gate by gate with kron."""
    n = circuit.n_qubits
    u = np.eye(1 << n, dtype=complex)
    for g in circuit.gates:
        if g.kind == "x":
            m = one_qubit_embedded(PAULI["X"], g.target, n)
        elif g.kind == "cnot":
            m = controlled(PAULI["X"], g.control, g.target, n)
        elif g.kind == "cry":
            m = controlled(rotation("ry", g.angle(theta)), g.control, g.target, n)
        else:
            m = one_qubit_embedded(rotation(g.kind, g.angle(theta)), g.target, n)
        u = m @ u
    return u


def dense_circuit_state(circuit, theta):
    amps = np.zeros(1 << circuit.n_qubits, dtype=complex)
    amps[int(circuit.initial_bits, 2)] = 1.0
    return dense_circuit_matrix(circuit, theta) @ amps


def random_label(rng, n_qubits):
    return "".join(rng.choice(list("IXYZ")) for _ in range(n_qubits))


def random_pairs(rng, n_qubits, n_terms, real=True):
    pairs = []
    for _ in range(n_terms):
        coeff = rng.standard_normal()
        if not real:
            coeff = coeff + 1j * rng.standard_normal()
        pairs.append((coeff, random_label(rng, n_qubits)))
    return pairs


def random_state_vector(rng, dim):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)
