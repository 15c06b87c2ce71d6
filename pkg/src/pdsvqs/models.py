"""Built-in benchmark models and Hamiltonian file I/O.

Four models ship with the package:

``toy_a``
    ``1.5 II + 0.5 IZ - ZZ`` (diagonal ``(1, 2, 3, 0)``) with the two-qubit
    ansatz ``CRY(0->1; t2) RX(0; t1) |00>``.  The plain energy expectation
    has a local minimum at the origin of parameter space.

``toy_b``
    ``II + 0.5 IZ - 0.5 ZZ`` (diagonal ``(1, 1, 2, 0)``) with
    ``CRY(0->1; t2) RX(0; t1) RX(1; t1) |01>``; both RX gates share one
    parameter, and the energy expectation has local minima near
    ``(+-3 pi / 8, 0)``.

``h2``
    The two-qubit effective molecular Hamiltonian
    ``0.4 (ZI + IZ) + 0.2 XX`` with ground energy ``-sqrt(0.68)`` and the
    doubled-angle RY/CNOT/RY ansatz started at ``(7 pi/32, pi/2, 0, 0)``,
    where the trial state has (numerically) zero ground-state overlap.

``heisenberg``
    The four-site spin model ``J sum_bonds (XX + YY + ZZ) + B sum Z`` on the
    open 2 x 2 plaquette (bonds 0-1, 2-3, 0-2, 1-3), J = 0.1, B = 1.0, exact
    ground energy -3.6 on the fully flipped product state (magnetization -4).
    The published circuit for this system is not reproducible from available
    material, so the model ships a documented substitute: one RY rotation per
    qubit with angles ``(theta, 0, 3, 3)`` (only the first variational) and a
    single entangling ``CNOT(0->1)``.  The CNOT carries the frozen RY(0)
    qubit along with the variational one; at the optimum near
    ``theta = +-pi`` the trial state overlaps the exact ground state with
    fidelity about 0.99.  A full entangling ring was rejected because every
    ring ordering knocks one of the frozen nearly flipped qubits back towards
    ``|0>``, capping the reachable fidelity far below that.

User-supplied Hamiltonians use the text format of :meth:`PauliSum.from_text`
and pair with the generic hardware-efficient ansatz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .pauli import PauliSum
from .statesim import Circuit, Gate, exact_eigensystem

__all__ = [
    "ModelBundle",
    "MODEL_NAMES",
    "build_model",
    "hardware_efficient_ansatz",
    "load_hamiltonian",
    "serialize_hamiltonian",
]

MODEL_NAMES = ("toy_a", "toy_b", "h2", "heisenberg")


@dataclass
class ModelBundle:
    """A Hamiltonian, its ansatz, reference data and run defaults."""

    name: str
    hamiltonian: PauliSum
    circuit: Circuit
    theta0: np.ndarray
    eta: float
    schedule: str
    reference_energy: float
    ground_degeneracy: int
    ground_basis: np.ndarray


def _bundle(name, hamiltonian, circuit, theta0, eta, schedule) -> ModelBundle:
    eigenvalues, ground = exact_eigensystem(hamiltonian)
    return ModelBundle(
        name=name,
        hamiltonian=hamiltonian,
        circuit=circuit,
        theta0=np.asarray(theta0, dtype=float),
        eta=eta,
        schedule=schedule,
        reference_energy=float(eigenvalues[0]),
        ground_degeneracy=ground.shape[1],
        ground_basis=ground,
    )


def _heisenberg_sum(j: float, b: float) -> PauliSum:
    bonds = [(0, 1), (2, 3), (0, 2), (1, 3)]
    terms = []
    for k in range(4):
        label = ["I"] * 4
        label[k] = "Z"
        terms.append((b, "".join(label)))
    for i, k in bonds:
        for letter in ("X", "Y", "Z"):
            label = ["I"] * 4
            label[i] = letter
            label[k] = letter
            terms.append((j, "".join(label)))
    return PauliSum.from_terms(terms)


def build_model(name: str, **options) -> ModelBundle:
    """Construct a built-in model; options override model constants.

    ``heisenberg`` accepts ``j`` and ``b``; other models take no options.
    """
    if name == "toy_a":
        if options:
            raise ValueError(f"toy_a takes no options, got {sorted(options)}")
        h = PauliSum.from_terms([(1.5, "II"), (0.5, "IZ"), (-1.0, "ZZ")])
        circuit = Circuit(
            n_qubits=2,
            n_params=2,
            gates=(
                Gate("rx", 0, param=0),
                Gate("cry", 1, control=0, param=1),
            ),
            initial_bits="00",
        )
        return _bundle("toy_a", h, circuit, (0.1, 0.1), 0.05, "constant")
    if name == "toy_b":
        if options:
            raise ValueError(f"toy_b takes no options, got {sorted(options)}")
        h = PauliSum.from_terms([(1.0, "II"), (0.5, "IZ"), (-0.5, "ZZ")])
        circuit = Circuit(
            n_qubits=2,
            n_params=2,
            gates=(
                Gate("rx", 1, param=0),
                Gate("rx", 0, param=0),
                Gate("cry", 1, control=0, param=1),
            ),
            initial_bits="01",
        )
        return _bundle("toy_b", h, circuit, (0.1, 0.1), 0.05, "constant")
    if name == "h2":
        if options:
            raise ValueError(f"h2 takes no options, got {sorted(options)}")
        h = PauliSum.from_terms([(0.4, "ZI"), (0.4, "IZ"), (0.2, "XX")])
        circuit = Circuit(
            n_qubits=2,
            n_params=4,
            gates=(
                Gate("ry", 1, param=1, multiplier=2.0),
                Gate("ry", 0, param=0, multiplier=2.0),
                Gate("cnot", 1, control=0),
                Gate("ry", 1, param=3, multiplier=2.0),
                Gate("ry", 0, param=2, multiplier=2.0),
            ),
            initial_bits="00",
        )
        theta0 = (7.0 * math.pi / 32.0, math.pi / 2.0, 0.0, 0.0)
        return _bundle("h2", h, circuit, theta0, 0.05, "constant")
    if name == "heisenberg":
        j = float(options.pop("j", 0.1))
        b = float(options.pop("b", 1.0))
        if options:
            raise ValueError(f"heisenberg options are j, b; got {sorted(options)}")
        h = _heisenberg_sum(j, b)
        circuit = Circuit(
            n_qubits=4,
            n_params=1,
            gates=(
                Gate("ry", 0, param=0),
                Gate("ry", 1, offset=0.0),
                Gate("ry", 2, offset=3.0),
                Gate("ry", 3, offset=3.0),
                Gate("cnot", 1, control=0),
            ),
            initial_bits="0000",
        )
        return _bundle("heisenberg", h, circuit, (-3.0,), 1.0, "inv_iter")
    raise ValueError(f"unknown model {name!r}; available: {', '.join(MODEL_NAMES)}")


def hardware_efficient_ansatz(n_qubits: int, layers: int = 1) -> Circuit:
    """RY layers separated by CNOT chains, one parameter per rotation."""
    if n_qubits < 1 or layers < 1:
        raise ValueError("need at least one qubit and one layer")
    gates: list[Gate] = []
    param = 0
    for layer in range(layers):
        for q in range(n_qubits):
            gates.append(Gate("ry", q, param=param))
            param += 1
        if n_qubits > 1:
            for q in range(n_qubits - 1):
                gates.append(Gate("cnot", q + 1, control=q))
    return Circuit(n_qubits=n_qubits, n_params=param, gates=tuple(gates))


def load_hamiltonian(path: str | Path) -> PauliSum:
    """Read a Hamiltonian from a text file, reporting the file on errors."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValueError(f"cannot read Hamiltonian file {path}: {exc}") from None
    try:
        return PauliSum.from_text(text)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def serialize_hamiltonian(s: PauliSum, path: str | Path | None = None) -> str:
    """Write the canonical text form, optionally to a file, and return it."""
    text = s.to_text()
    if path is not None:
        Path(path).write_text(text)
    return text
