"""Emulated Hadamard tests and compute-uncompute overlaps.

These rebuild the objective from ancilla measurements so it can be checked
against the direct statevector formulas.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ansatz import Ansatz, cone_circuit, cone_params
from .circuit import Circuit, Gate, apply_gate
from .objective import local_term
from .simcore import PAULI_MATRICES, PauliString, TimeKind, TrotterTerm, apply_pauli, apply_unitary

GateList = tuple[tuple[Gate, float], ...]

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j])


def gate_list(circ: Circuit, params: np.ndarray) -> GateList:
    return tuple((g, float(circ.theta(g, params))) for g in circ.gates)


@dataclass(frozen=True)
class HadamardTestSpec:
    """U and V share their gate skeleton; only rotation angles may differ.

    The ancilla is qubit 0 of the test register; system qubit ``q`` becomes ``q + 1``.
    """

    n_qubits: int
    u: GateList
    v: GateList
    observable: PauliString
    part: str = "real"

    def __post_init__(self):
        if self.part not in ("real", "imag"):
            raise ValueError(f"part must be 'real' or 'imag', got {self.part!r}")
        if self.observable.n_qubits != self.n_qubits:
            raise ValueError(f"observable on {self.observable.n_qubits} qubits, register has {self.n_qubits}")
        if len(self.u) != len(self.v):
            raise ValueError("U and V have different gate counts")
        for (gu, _), (gv, _) in zip(self.u, self.v):
            if (gu.name, gu.qubits) != (gv.name, gv.qubits):
                raise ValueError(f"gate {gu} cannot be substituted by {gv}; only angles may differ")
            if any(not 0 <= q < self.n_qubits for q in gu.qubits):
                raise ValueError(f"gate {gu} outside a {self.n_qubits}-qubit register")

    @property
    def substitutions(self) -> list[tuple[int, float]]:
        """``(position, delta)`` for every rotation whose angle changes."""
        out = []
        for i, ((g, a), (_, b)) in enumerate(zip(self.u, self.v)):
            if g.is_rotation and np.exp(1j * (b - a)) != 1:
                out.append((i, b - a))
        return out


def _controlled_rotation(axis: str, theta: float) -> np.ndarray:
    r = np.cos(theta) * np.eye(2) - 1j * np.sin(theta) * PAULI_MATRICES[axis]
    out = np.eye(4, dtype=complex)
    out[2:, 2:] = r
    return out


def hadamard_test(spec: HadamardTestSpec) -> float:
    """Exact ``<Z (x) P>`` of the ancilla circuit.

    Equals ``Re <0|V^dag P U|0>`` for the real part and ``Im`` of the same
    amplitude for the imaginary part, where an S gate follows the first H.
    """
    n = spec.n_qubits + 1
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    psi = apply_unitary(psi, _H, [0])
    if spec.part == "imag":
        psi = apply_unitary(psi, _S, [0])
    deltas = dict(spec.substitutions)
    for i, (g, theta) in enumerate(spec.u):
        shifted = Gate(g.name, tuple(q + 1 for q in g.qubits), g.slot)
        psi = apply_gate(psi, shifted, theta, n)
        if i in deltas:
            psi = apply_unitary(psi, _controlled_rotation(g.axis, deltas[i]), [0, shifted.qubits[0]])
    psi = apply_unitary(psi, _H, [0])
    zp = PauliString("Z" + spec.observable.factors)
    return float(np.vdot(psi, apply_pauli(psi, zp)).real)


def direct_amplitude(spec: HadamardTestSpec) -> complex:
    """``<0|V^dag P U|0>`` computed on the system register alone."""
    def run(gates):
        v = np.zeros(2**spec.n_qubits, dtype=complex)
        v[0] = 1.0
        for g, theta in gates:
            v = apply_gate(v, g, theta, spec.n_qubits)
        return v
    return complex(np.vdot(run(spec.v), apply_pauli(run(spec.u), spec.observable)))


def controlled_gate_count(spec: HadamardTestSpec) -> int:
    return len(spec.substitutions)


def compute_uncompute_overlap(u: tuple[Circuit, np.ndarray], v: tuple[Circuit, np.ndarray]) -> float:
    """Probability of all zeros after ``U`` then ``V^dag``: ``|<0|V^dag U|0>|^2``."""
    cu, pu = u
    cv, pv = v
    if cu.n_qubits != cv.n_qubits:
        raise ValueError(f"register mismatch: {cu.n_qubits} vs {cv.n_qubits} qubits")
    amp = cv.run_dag(pv, cu.run(pu))[0]
    return float(abs(amp) ** 2)


def cone_specs(prev: Ansatz, a: Ansatz, term: TrotterTerm) -> tuple[HadamardTestSpec, HadamardTestSpec]:
    """The two tests whose outputs assemble the objective on the cone of ``term``.

    U prepares the current state and V the previous one. The first test has
    the identity observable; the second carries the local Trotter operator.
    """
    cone, circ = cone_circuit(a, term.sites)
    u = gate_list(circ, cone_params(a, cone))
    v = gate_list(circ, cone_params(prev, cone))
    p = local_term(term, cone.qubits).operator
    second = "imag" if term.kind is TimeKind.REAL else "real"
    ident = PauliString("I" * cone.width)
    return (HadamardTestSpec(cone.width, u, v, ident, "real"),
            HadamardTestSpec(cone.width, u, v, p, second))


def objective_from_tests(prev: Ansatz, a: Ansatz, term: TrotterTerm) -> float:
    """Objective assembled from two Hadamard tests.

    Real time: ``cos(x) Re<V|U> - sin(x) Im<V|P|U>``.
    Imaginary time: ``cosh(x) Re<V|U> - sinh(x) Re<V|P|U>``.
    """
    overlap, op = cone_specs(prev, a, term)
    x = term.angle
    if term.kind is TimeKind.REAL:
        return np.cos(x) * hadamard_test(overlap) - np.sin(x) * hadamard_test(op)
    return np.cosh(x) * hadamard_test(overlap) - np.sinh(x) * hadamard_test(op)


def angle_spec(circ: Circuit, params: np.ndarray, slot: int, new_value: float,
               observable: PauliString, part: str = "real") -> HadamardTestSpec:
    """Test between a circuit and a copy with one angle changed."""
    changed = np.array(params, dtype=float)
    changed[slot] = new_value
    return HadamardTestSpec(circ.n_qubits, gate_list(circ, params), gate_list(circ, changed), observable, part)


def block_spec(circ: Circuit, params: np.ndarray, new_params: np.ndarray, blocks: Sequence[int],
               observable: PauliString, part: str = "real", n_params: int = 15) -> HadamardTestSpec:
    """Test where only the listed blocks of a compiled cone circuit change."""
    changed = np.array(params, dtype=float)
    for b in blocks:
        changed[b * n_params:(b + 1) * n_params] = new_params[b * n_params:(b + 1) * n_params]
    return HadamardTestSpec(circ.n_qubits, gate_list(circ, params), gate_list(circ, changed), observable, part)
