"""Statevector simulation of parametrized circuits.

Basis convention: qubit 0 is the leftmost tensor factor and therefore the most
significant bit of the basis index, so ``|01>`` on two qubits is index 1 with
qubit 0 in ``|0>``.  Rotation gates use the half-angle convention
``R_s(a) = exp(-i a s / 2)``; a gate bound to parameter k realizes the angle
``multiplier * theta[k] + offset``, which also encodes frozen rotations
(no parameter, fixed offset).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .pauli import PauliSum

__all__ = [
    "Gate",
    "Circuit",
    "State",
    "apply_circuit",
    "apply_pauli_sum",
    "expectation",
    "state_derivative",
    "fidelity",
    "exact_eigensystem",
    "dense_matrix",
]

_ROTATION_KINDS = ("rx", "ry", "rz", "cry")
_FIXED_KINDS = ("x", "cnot")

_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_GENERATORS = {"rx": _X, "ry": _Y, "rz": _Z, "cry": _Y}


@dataclass(frozen=True)
class Gate:
    """One circuit element; ``param`` is None for fixed gates."""

    kind: str
    target: int
    control: int | None = None
    param: int | None = None
    multiplier: float = 1.0
    offset: float = 0.0

    def angle(self, theta: np.ndarray) -> float:
        if self.param is None:
            return self.offset
        return self.multiplier * float(theta[self.param]) + self.offset


@dataclass(frozen=True)
class Circuit:
    """Gate list in application order plus the initial basis state."""

    n_qubits: int
    n_params: int
    gates: tuple[Gate, ...]
    initial_bits: str = ""

    def __post_init__(self) -> None:
        if not self.initial_bits:
            object.__setattr__(self, "initial_bits", "0" * self.n_qubits)
        if len(self.initial_bits) != self.n_qubits or set(self.initial_bits) - {"0", "1"}:
            raise ValueError("initial_bits must be a 0/1 string of length n_qubits")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if g.kind not in _ROTATION_KINDS + _FIXED_KINDS:
                raise ValueError(f"unknown gate kind {g.kind!r}")
            if not 0 <= g.target < self.n_qubits:
                raise ValueError("gate target out of range")
            needs_control = g.kind in ("cnot", "cry")
            if needs_control:
                if g.control is None or not 0 <= g.control < self.n_qubits:
                    raise ValueError(f"{g.kind} needs a valid control qubit")
                if g.control == g.target:
                    raise ValueError("control and target must differ")
            elif g.control is not None:
                raise ValueError(f"{g.kind} takes no control qubit")
            if g.kind in _FIXED_KINDS and g.param is not None:
                raise ValueError(f"{g.kind} is not parametrized")
            if g.param is not None and not 0 <= g.param < self.n_params:
                raise ValueError("gate parameter index out of range")

    def occurrences(self, param: int) -> list[tuple[int, float]]:
        """Positions and angle multipliers of every gate bound to ``param``."""
        return [
            (pos, g.multiplier)
            for pos, g in enumerate(self.gates)
            if g.param == param
        ]

    def with_offset_shift(self, pos: int, delta: float) -> "Circuit":
        """Copy of the circuit with ``delta`` added to one gate's fixed offset."""
        gates = list(self.gates)
        gates[pos] = replace(gates[pos], offset=gates[pos].offset + delta)
        return replace(self, gates=tuple(gates))

    def decompose_controlled(self) -> "Circuit":
        """Rewrite controlled rotations into one-qubit rotations plus CNOTs.

        ``CRY(a)`` on (control c, target t) becomes ``CNOT(c,t)``,
        ``RY_t(-a/2)``, ``CNOT(c,t)``, ``RY_t(a/2)`` in application order; the
        two half-rotations inherit the parameter binding with halved
        multipliers, which is what the shift rule differentiates.
        """
        gates: list[Gate] = []
        for g in self.gates:
            if g.kind != "cry":
                gates.append(g)
                continue
            half = Gate(
                "ry",
                g.target,
                param=g.param,
                multiplier=g.multiplier / 2.0,
                offset=g.offset / 2.0,
            )
            neg = replace(half, multiplier=-half.multiplier, offset=-half.offset)
            gates.extend(
                [
                    Gate("cnot", g.target, control=g.control),
                    neg,
                    Gate("cnot", g.target, control=g.control),
                    half,
                ]
            )
        return replace(self, gates=tuple(gates))


@dataclass
class State:
    """Complex amplitudes over the computational basis."""

    amplitudes: np.ndarray

    @property
    def n_qubits(self) -> int:
        return int(round(math.log2(self.amplitudes.size)))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _rotation_matrix(kind: str, angle: float) -> np.ndarray:
    c = math.cos(angle / 2.0)
    s = math.sin(angle / 2.0)
    if kind == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind in ("ry", "cry"):
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "rz":
        return np.array([[c - 1j * s, 0.0], [0.0, c + 1j * s]], dtype=complex)
    raise ValueError(f"not a rotation kind: {kind!r}")


def _apply_single(amps: np.ndarray, n: int, target: int, u: np.ndarray) -> np.ndarray:
    block = amps.reshape(1 << target, 2, -1)
    return np.einsum("ab,xbz->xaz", u, block).reshape(-1)


def _apply_controlled(
    amps: np.ndarray, n: int, control: int, target: int, u: np.ndarray
) -> np.ndarray:
    tensor = amps.reshape((2,) * n).copy()
    sel: list = [slice(None)] * n
    sel[control] = 1
    axis = target - 1 if control < target else target
    sub = np.moveaxis(tensor[tuple(sel)], axis, 0)
    sub = np.einsum("ab,b...->a...", u, sub)
    tensor[tuple(sel)] = np.moveaxis(sub, 0, axis)
    return tensor.reshape(-1)


def _apply_gate(amps: np.ndarray, n: int, gate: Gate, theta: np.ndarray) -> np.ndarray:
    if gate.kind == "x":
        return _apply_single(amps, n, gate.target, _X)
    if gate.kind == "cnot":
        return _apply_controlled(amps, n, gate.control, gate.target, _X)
    u = _rotation_matrix(gate.kind, gate.angle(theta))
    if gate.kind == "cry":
        return _apply_controlled(amps, n, gate.control, gate.target, u)
    return _apply_single(amps, n, gate.target, u)


def _initial_amplitudes(circuit: Circuit) -> np.ndarray:
    amps = np.zeros(1 << circuit.n_qubits, dtype=complex)
    amps[int(circuit.initial_bits, 2)] = 1.0
    return amps


def apply_circuit(circuit: Circuit, theta: np.ndarray) -> State:
    """Run the circuit on its initial basis state and return the final state."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circuit.n_params,):
        raise ValueError(
            f"expected {circuit.n_params} parameters, got shape {theta.shape}"
        )
    amps = _initial_amplitudes(circuit)
    for gate in circuit.gates:
        amps = _apply_gate(amps, circuit.n_qubits, gate, theta)
    return State(amps)


def _index_masks(term_x: int, term_z: int, n: int) -> tuple[int, int]:
    # Qubit q occupies basis-index bit n-1-q (qubit 0 is most significant).
    x_idx = 0
    z_idx = 0
    for q in range(n):
        x_idx |= ((term_x >> q) & 1) << (n - 1 - q)
        z_idx |= ((term_z >> q) & 1) << (n - 1 - q)
    return x_idx, z_idx


def _parity(values: np.ndarray) -> np.ndarray:
    v = values.copy()
    for shift in (16, 8, 4, 2, 1):
        v ^= v >> shift
    return v & 1


_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)

# Below this register size a sum is applied through a dense matrix memoized on
# the sum itself; coefficients are never mutated after construction, so the
# cache cannot go stale.
_DENSE_APPLY_LIMIT = 6


def apply_pauli_sum(amps: np.ndarray, s: PauliSum) -> np.ndarray:
    """Return ``s`` applied to an amplitude vector."""
    n = s.n_qubits
    if amps.size != 1 << n:
        raise ValueError("state size does not match operator register")
    if n <= _DENSE_APPLY_LIMIT:
        mat = getattr(s, "_dense_apply", None)
        if mat is None:
            mat = dense_matrix(s)
            s._dense_apply = mat
        return mat @ amps
    idx = np.arange(amps.size)
    out = np.zeros_like(amps)
    for term in s.terms():
        x_idx, z_idx = _index_masks(term.x_mask, term.z_mask, n)
        front = _PHASES[(term.x_mask & term.z_mask).bit_count() % 4]
        signs = 1.0 - 2.0 * _parity((idx ^ x_idx) & z_idx)
        out += (term.coefficient * front) * signs * amps[idx ^ x_idx]
    return out


def expectation(state: State, s: PauliSum) -> float:
    """Real expectation value ``<psi| s |psi>`` of a Hermitian sum."""
    if not s.is_hermitian():
        raise ValueError("expectation requires a Hermitian operator")
    value = np.vdot(state.amplitudes, apply_pauli_sum(state.amplitudes, s))
    return float(value.real)


def state_derivative(circuit: Circuit, theta: np.ndarray, param: int) -> State:
    """Unnormalized derivative of the circuit state with respect to one parameter.

    Each occurrence of the parameter contributes the circuit with the factor
    ``-(i * multiplier / 2) G`` inserted right after that gate, where ``G`` is
    the rotation generator; for a controlled rotation the generator is the
    projector-controlled form ``|1><1| (x) G_target``.  Occurrence
    contributions add by the product rule.
    """
    theta = np.asarray(theta, dtype=float)
    if not 0 <= param < circuit.n_params:
        raise ValueError("parameter index out of range")
    n = circuit.n_qubits
    total = np.zeros(1 << n, dtype=complex)
    for pos, mult in circuit.occurrences(param):
        amps = _initial_amplitudes(circuit)
        for gate in circuit.gates[: pos + 1]:
            amps = _apply_gate(amps, n, gate, theta)
        gen_gate = circuit.gates[pos]
        gen = _GENERATORS[gen_gate.kind]
        if gen_gate.kind == "cry":
            # Projector-controlled generator: zero the control-0 block, apply
            # the generator in the control-1 block.
            tensor = amps.reshape((2,) * n).copy()
            sel: list = [slice(None)] * n
            sel[gen_gate.control] = 0
            tensor[tuple(sel)] = 0.0
            amps = _apply_controlled(
                tensor.reshape(-1), n, gen_gate.control, gen_gate.target, gen
            )
        else:
            amps = _apply_single(amps, n, gen_gate.target, gen)
        amps *= -0.5j * mult
        for gate in circuit.gates[pos + 1 :]:
            amps = _apply_gate(amps, n, gate, theta)
        total += amps
    return State(total)


def fidelity(state: State, basis: np.ndarray) -> float:
    """Squared overlap of ``state`` with the span of orthonormal columns."""
    basis = np.atleast_2d(np.asarray(basis, dtype=complex))
    if basis.shape[0] != state.amplitudes.size:
        basis = basis.T
    if basis.shape[0] != state.amplitudes.size:
        raise ValueError("basis dimension does not match the state")
    gram = basis.conj().T @ basis
    if not np.allclose(gram, np.eye(basis.shape[1]), atol=1e-8):
        raise ValueError("basis columns are not orthonormal")
    overlaps = basis.conj().T @ state.amplitudes
    return float(np.sum(np.abs(overlaps) ** 2))


def dense_matrix(s: PauliSum) -> np.ndarray:
    """Dense matrix of a Pauli sum in the computational basis."""
    n = s.n_qubits
    dim = 1 << n
    idx = np.arange(dim)
    out = np.zeros((dim, dim), dtype=complex)
    for term in s.terms():
        x_idx, z_idx = _index_masks(term.x_mask, term.z_mask, n)
        front = _PHASES[(term.x_mask & term.z_mask).bit_count() % 4]
        signs = 1.0 - 2.0 * _parity(idx & z_idx)
        out[idx ^ x_idx, idx] += (term.coefficient * front) * signs
    return out


def exact_eigensystem(
    s: PauliSum, ground_tol: float = 1e-9
) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and an orthonormal ground-space basis.

    Intended for verification on small registers; the dense matrix is
    diagonalized with a symmetric solver after a Hermiticity check.
    """
    if not s.is_hermitian():
        raise ValueError("eigensystem requires a Hermitian operator")
    matrix = dense_matrix(s)
    if not np.allclose(matrix, matrix.conj().T, atol=1e-10):
        raise ValueError("dense matrix failed the Hermiticity cross-check")
    eigenvalues, vectors = np.linalg.eigh(matrix)
    ground = vectors[:, np.abs(eigenvalues - eigenvalues[0]) <= ground_tol]
    return eigenvalues, ground
