"""Gate-list circuits on small registers, with index-array kernels.

Rotations are ``exp(-i theta P)`` with ``P`` in {X, Z} on one qubit (no half
angle), so every parameterised gate satisfies ``U(theta + pi/2) = U(theta)(-iP)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class Gate:
    name: str  # "rx", "rz" or "cx"
    qubits: tuple[int, ...]
    slot: int = -1  # parameter index for rotations

    @property
    def is_rotation(self) -> bool:
        return self.name != "cx"

    @property
    def axis(self) -> str:
        return self.name[1].upper()


@lru_cache(maxsize=None)
def _tables(n: int, q: int):
    idx = np.arange(2**n)
    bit = (idx >> (n - 1 - q)) & 1
    return idx ^ (1 << (n - 1 - q)), (1 - 2 * bit).astype(float), bit


@lru_cache(maxsize=None)
def _cx_perm(n: int, c: int, t: int):
    idx = np.arange(2**n)
    return idx ^ (((idx >> (n - 1 - c)) & 1) << (n - 1 - t))


def pauli_rows(v: np.ndarray, axis: str, q: int, n: int) -> np.ndarray:
    """``P v`` for a single-qubit X or Z acting along axis 0 of ``v``."""
    flip, sign, _ = _tables(n, q)
    if axis == "X":
        return v[flip]
    return sign * v if v.ndim == 1 else sign[:, None] * v


def pauli_cols(m: np.ndarray, axis: str, q: int, n: int) -> np.ndarray:
    """``M P`` for a matrix ``M``."""
    flip, sign, _ = _tables(n, q)
    if axis == "X":
        return m[:, flip]
    return m * sign[None, :]


def apply_gate(v: np.ndarray, gate: Gate, theta: float, n: int) -> np.ndarray:
    if gate.name == "cx":
        return v[_cx_perm(n, *gate.qubits)]
    q = gate.qubits[0]
    return np.cos(theta) * v - 1j * np.sin(theta) * pauli_rows(v, gate.axis, q, n)


def apply_gate_dag(v: np.ndarray, gate: Gate, theta: float, n: int) -> np.ndarray:
    if gate.name == "cx":
        return v[_cx_perm(n, *gate.qubits)]
    q = gate.qubits[0]
    return np.cos(theta) * v + 1j * np.sin(theta) * pauli_rows(v, gate.axis, q, n)


def conjugate(m: np.ndarray, gate: Gate, theta: float, n: int) -> np.ndarray:
    """Heisenberg update ``g^dag M g``."""
    if gate.name == "cx":
        perm = _cx_perm(n, *gate.qubits)
        return m[perm][:, perm]
    q, ax = gate.qubits[0], gate.axis
    c, s = np.cos(theta), np.sin(theta)
    pm = pauli_rows(m, ax, q, n)
    mp = pauli_cols(m, ax, q, n)
    pmp = pauli_cols(pm, ax, q, n)
    return c * c * m + s * s * pmp + 1j * c * s * (pm - mp)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...]
    n_params: int

    @property
    def rotation_positions(self) -> list[int]:
        return [i for i, g in enumerate(self.gates) if g.is_rotation]

    def theta(self, gate: Gate, params: np.ndarray) -> float:
        return params[gate.slot] if gate.is_rotation else 0.0

    def run(self, params: np.ndarray, state: np.ndarray | None = None) -> np.ndarray:
        n = self.n_qubits
        if state is None:
            state = np.zeros(2**n, dtype=complex)
            state[0] = 1.0
        v = state
        for g in self.gates:
            v = apply_gate(v, g, self.theta(g, params), n)
        return v

    def run_dag(self, params: np.ndarray, state: np.ndarray) -> np.ndarray:
        """Apply the inverse circuit."""
        v = state
        for g in reversed(self.gates):
            v = apply_gate_dag(v, g, self.theta(g, params), self.n_qubits)
        return v

    def unitary(self, params: np.ndarray) -> np.ndarray:
        return self.run(params, np.eye(2**self.n_qubits, dtype=complex))

    def jacobian(self, params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """State and exact derivatives ``d psi / d theta_k`` (columns).

        Derivatives are propagated together as a matrix; a rotation on slot
        ``k`` seeds column ``k`` with ``g(theta)(-iP) v``.
        """
        n = self.n_qubits
        v = np.zeros(2**n, dtype=complex)
        v[0] = 1.0
        jac = np.zeros((2**n, self.n_params), dtype=complex)
        for g in self.gates:
            th = self.theta(g, params)
            jac = apply_gate(jac, g, th, n)
            if g.is_rotation:
                jac[:, g.slot] += apply_gate(-1j * pauli_rows(v, g.axis, g.qubits[0], n), g, th, n)
            v = apply_gate(v, g, th, n)
        return v, jac
