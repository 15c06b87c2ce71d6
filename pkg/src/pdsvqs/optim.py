"""Metric-preconditioned gradient descent on the moment functional.

Three metrics are supported for the update ``theta <- theta - eta R^+ grad``:
plain gradient descent (R = identity), the imaginary-time metric
``Re <d_i psi | d_j psi>``, and the natural-gradient (Fubini-Study) metric
which subtracts the rank-one ``<d_i psi|psi><psi|d_j psi>`` part.  A nearly
singular metric is lifted by an eigenvalue shift; the resulting large inverse
eigenvalues are what lets the preconditioned flow leave regions where the
plain gradient stalls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .moments import MomentTable, hamiltonian_powers, sampled_moments
from .moments import _analytic_rows, _shift_rows, _values_from_state
from .pauli import PauliSum
from .pds import (
    ComplexRoots,
    RegPolicy,
    SingularMoments,
    VanishingDenominator,
    pds_gradient,
    pds_solve,
)
from .statesim import (
    Circuit,
    State,
    apply_circuit,
    exact_eigensystem,
    fidelity,
    state_derivative,
)

__all__ = [
    "metric",
    "step",
    "IterationRecord",
    "Trajectory",
    "run",
]

_METRIC_KINDS = ("gd", "ngd", "ite")
_SCHEDULES = ("constant", "inv_iter")


def metric(
    circuit: Circuit,
    theta: np.ndarray,
    kind: str = "gd",
    derivs: list[np.ndarray] | None = None,
    amps: np.ndarray | None = None,
) -> np.ndarray:
    """Preconditioning matrix for the chosen flavor at one parameter point.

    Precomputed derivative states and the circuit state can be passed in so a
    driver evaluating the gradient anyway does not simulate twice.
    """
    if kind not in _METRIC_KINDS:
        raise ValueError(f"unknown metric kind {kind!r}")
    n = circuit.n_params
    if kind == "gd":
        return np.eye(n)
    theta = np.asarray(theta, dtype=float)
    if derivs is None:
        derivs = [
            state_derivative(circuit, theta, k).amplitudes for k in range(n)
        ]
    matrix = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            matrix[i, j] = matrix[j, i] = np.vdot(derivs[i], derivs[j]).real
    if kind == "ngd":
        if amps is None:
            amps = apply_circuit(circuit, theta).amplitudes
        overlaps = np.array([np.vdot(amps, d) for d in derivs])
        matrix = matrix - np.real(np.outer(overlaps.conj(), overlaps))
        matrix = 0.5 * (matrix + matrix.T)
    return matrix


def step(
    theta: np.ndarray,
    grad: np.ndarray,
    metric_matrix: np.ndarray | None,
    eta: float,
    eps: float = 1e-6,
) -> np.ndarray:
    """One preconditioned descent update.

    ``metric_matrix=None`` means plain gradient descent and reproduces
    ``theta - eta * grad`` exactly.  Otherwise the (symmetric positive
    semidefinite) metric is inverted through its eigendecomposition; when the
    smallest eigenvalue falls to ``eps`` relative scale, ``eps`` is added to
    all eigenvalues, so near-null directions get amplified rather than
    crashing the solve.
    """
    theta = np.asarray(theta, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if metric_matrix is None:
        return theta - eta * grad
    w, v = np.linalg.eigh(0.5 * (metric_matrix + metric_matrix.T))
    if w[0] <= eps * max(1.0, float(w[-1])):
        w = w + eps
    direction = v @ ((v.T @ grad) / w)
    return theta - eta * direction


@dataclass
class IterationRecord:
    iteration: int
    theta: np.ndarray
    energy: float
    roots: np.ndarray
    expval_h: float
    fidelity: float
    grad_norm: float
    metric_cond: float
    step_size: float


@dataclass
class Trajectory:
    """Per-iteration records plus the terminal status.

    ``status`` is ``"converged"`` (gradient norm under tolerance),
    ``"max_iters"``, or ``"error"`` with the failure message; on error the
    records cover every successfully evaluated iterate.
    """

    records: list[IterationRecord] = field(default_factory=list)
    status: str = "max_iters"
    message: str = ""

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    @property
    def thetas(self) -> np.ndarray:
        return np.array([r.theta for r in self.records])

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]


def _pad_roots(roots: np.ndarray, order: int) -> np.ndarray:
    padded = np.full(order, np.nan)
    padded[: roots.size] = roots
    return padded


def run(
    hamiltonian: PauliSum,
    circuit: Circuit,
    theta0,
    functional: str = "pds",
    order: int = 2,
    metric_kind: str = "gd",
    eta: float = 0.05,
    schedule: str = "constant",
    max_iters: int = 100,
    grad_tol: float = 1e-8,
    pds_policy: RegPolicy | None = None,
    metric_eps: float = 1e-6,
    gradient_method: str = "analytic",
    shots: int | None = None,
    seed: int = 0,
    powers: list[PauliSum] | None = None,
    ground_basis: np.ndarray | None = None,
    drop_tol: float = 1e-12,
) -> Trajectory:
    """Drive the optimization loop and record the full trajectory.

    ``functional`` is ``"pds"`` (moment functional of the given order) or
    ``"vqe"`` (plain energy expectation; equivalent to order 1).  The schedule
    is a constant step size or ``eta / iteration``.  With ``shots`` set, the
    moments and their shift-rule gradients are estimated from simulated
    measurements seeded per (seed, iteration); otherwise they are exact.

    Solver failures do not raise: the trajectory comes back with
    ``status="error"`` and the records collected so far.
    """
    if functional not in ("pds", "vqe"):
        raise ValueError(f"unknown functional {functional!r}")
    if schedule not in _SCHEDULES:
        raise ValueError(f"unknown schedule {schedule!r}")
    if metric_kind not in _METRIC_KINDS:
        raise ValueError(f"unknown metric kind {metric_kind!r}")
    if functional == "vqe":
        order = 1
    if order < 1:
        raise ValueError("order must be at least 1")
    if pds_policy is None:
        pds_policy = RegPolicy.auto()
    theta = np.asarray(theta0, dtype=float).copy()
    if theta.shape != (circuit.n_params,):
        raise ValueError("theta0 does not match the circuit parameter count")
    max_order = max(1, 2 * order - 1)
    if powers is None:
        powers = hamiltonian_powers(hamiltonian, max_order, drop_tol)
    elif len(powers) - 1 < max_order:
        raise ValueError("precomputed powers do not reach the needed order")
    if ground_basis is None and hamiltonian.n_qubits <= 12:
        _, ground_basis = exact_eigensystem(hamiltonian)

    trajectory = Trajectory()
    n_params = circuit.n_params
    for iteration in range(max_iters + 1):
        try:
            state = apply_circuit(circuit, theta)
            if shots is None:
                values = _values_from_state(state.amplitudes, powers)
                derivs = [
                    state_derivative(circuit, theta, k).amplitudes
                    for k in range(n_params)
                ]
                if gradient_method == "analytic":
                    rows = _analytic_rows(
                        circuit, theta, powers, derivs=derivs, amps=state.amplitudes
                    )
                else:
                    rows = _shift_rows(circuit, theta, powers)
            else:
                values, rows = _sampled_table(
                    circuit, theta, powers, shots, seed, iteration
                )
                derivs = None
            table = MomentTable(max_order, values, rows)
            if functional == "vqe":
                energy = float(values[1])
                grad = rows[:, 1].copy()
                roots = np.array([energy])
                energy_for_record = energy
            else:
                result = pds_solve(table, order, pds_policy)
                grad = pds_gradient(table, order, result)
                roots = _pad_roots(result.roots, order)
                energy_for_record = result.energy
        except (SingularMoments, ComplexRoots, VanishingDenominator) as exc:
            trajectory.status = "error"
            trajectory.message = f"iteration {iteration}: {exc}"
            return trajectory

        if metric_kind == "gd":
            metric_matrix = None
            metric_cond = 1.0
        else:
            if derivs is None:
                derivs = [
                    state_derivative(circuit, theta, k).amplitudes
                    for k in range(n_params)
                ]
            metric_matrix = metric(
                circuit, theta, metric_kind, derivs=derivs, amps=state.amplitudes
            )
            w = np.linalg.eigvalsh(metric_matrix)
            metric_cond = float("inf") if w[0] <= 0 else float(w[-1] / w[0])

        fid = (
            fidelity(state, ground_basis) if ground_basis is not None else float("nan")
        )
        grad_norm = float(np.linalg.norm(grad))
        eta_k = eta if schedule == "constant" else eta / (iteration + 1)
        trajectory.records.append(
            IterationRecord(
                iteration=iteration,
                theta=theta.copy(),
                energy=energy_for_record,
                roots=roots,
                expval_h=float(values[1]),
                fidelity=fid,
                grad_norm=grad_norm,
                metric_cond=metric_cond,
                step_size=eta_k,
            )
        )
        if grad_norm < grad_tol:
            trajectory.status = "converged"
            trajectory.records[-1].step_size = math.nan
            return trajectory
        if iteration == max_iters:
            trajectory.status = "max_iters"
            trajectory.records[-1].step_size = math.nan
            return trajectory
        theta = step(theta, grad, metric_matrix, eta_k, metric_eps)
    return trajectory


def _sampled_table(
    circuit: Circuit,
    theta: np.ndarray,
    powers: list[PauliSum],
    shots: int,
    seed: int,
    iteration: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Moment values and shift-rule gradient rows from simulated shots."""
    state = apply_circuit(circuit, theta)
    values, _ = sampled_moments(state, powers, shots, seed=_mix(seed, iteration, 0))
    decomposed = circuit.decompose_controlled()
    rows = np.zeros((circuit.n_params, len(powers)))
    tag = 1
    for k in range(circuit.n_params):
        for pos, mult in decomposed.occurrences(k):
            for sign in (1.0, -1.0):
                shifted = decomposed.with_offset_shift(pos, sign * math.pi / 2.0)
                est, _ = sampled_moments(
                    apply_circuit(shifted, theta),
                    powers,
                    shots,
                    seed=_mix(seed, iteration, tag),
                )
                rows[k] += 0.5 * mult * sign * est
                tag += 1
    rows[:, 0] = 0.0
    return values, rows


def _mix(seed: int, iteration: int, tag: int) -> int:
    return (seed * 1000003 + iteration * 10007 + tag) & 0x7FFFFFFF
