"""Per-term variational objective and closed-form coordinatewise maximisation.

For a Trotter factor ``exp(-i zeta h P)`` and previous state ``prev`` the
objective is ``Re <prev| exp(i conj(zeta) h P) |psi(theta)>``, i.e. the real
overlap of the ansatz state with the (possibly unnormalised) target
``exp(-i zeta h P)|prev>``. As a function of one rotation angle it is
``A sin(x + B)``, so two evaluations pi/2 apart locate the maximum.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .ansatz import (N_PARAMS, Ansatz, cone_circuit, cone_params, full_circuit, prepare_state,
                     set_cone_params, wrap_angle)
from .circuit import Circuit, apply_gate, apply_gate_dag, conjugate, pauli_rows
from .simcore import (PauliString, TimeKind, TrotterTerm, apply_pauli, exp_pauli_action,
                      pauli_expectation)

FLAT_AMPLITUDE = 1e-14

Reference = Union[np.ndarray, Ansatz]


@dataclass(frozen=True)
class Sinusoid:
    amplitude: float
    phase: float

    def __call__(self, x):
        return self.amplitude * np.sin(np.asarray(x) + self.phase)

    @property
    def argmax(self) -> float:
        return float(wrap_angle(np.pi / 2 - self.phase))


def fit_sinusoid(f_at_phi: float, f_at_phi_plus_half_pi: float, phi: float = 0.0) -> Sinusoid:
    a = float(np.hypot(f_at_phi, f_at_phi_plus_half_pi))
    b = float(wrap_angle(np.arctan2(f_at_phi, f_at_phi_plus_half_pi) - phi))
    return Sinusoid(a, b)


def coordinate_max(f_at_theta: float, f_at_theta_plus_half_pi: float, theta: float) -> float:
    """Maximiser of the sinusoid through the two samples; flat objectives keep ``theta``."""
    if np.hypot(f_at_theta, f_at_theta_plus_half_pi) < FLAT_AMPLITUDE:
        return float(theta)
    return float(wrap_angle(np.pi / 2 - np.arctan2(f_at_theta, f_at_theta_plus_half_pi) + theta))


def local_term(t: TrotterTerm, qubits) -> TrotterTerm:
    """The term acting on a compact register holding ``qubits``."""
    return TrotterTerm(t.coeff, t.operator.restrict(qubits), t.tau, t.kind,
                       tuple(range(len(qubits))))


def target_bra(t: TrotterTerm, ref: np.ndarray) -> np.ndarray:
    """``exp(-i zeta h P)|ref>``: the objective is ``Re <target|psi>``."""
    return exp_pauli_action(t, ref)


def objective(prev: Reference, a: Ansatz, t: TrotterTerm) -> float:
    """Objective for term ``t``.

    ``prev`` may be a full state vector, or the previous ansatz, in which case
    the value is computed on the term's causal-cone register (the two ansatze
    must then differ only inside that cone).
    """
    if isinstance(prev, Ansatz):
        cone, circ = cone_circuit(a, t.sites)
        ref = circ.run(cone_params(prev, cone))
        psi = circ.run(cone_params(a, cone))
        return float(np.vdot(target_bra(local_term(t, cone.qubits), ref), psi).real)
    if prev.shape != (2**a.n_qubits,):
        raise ValueError(f"reference of shape {prev.shape} does not match {a.n_qubits} qubits")
    return float(np.vdot(target_bra(t, prev), prepare_state(a)).real)


def overlap_objective(prev: Reference, a: Ansatz, t: TrotterTerm) -> float:
    """``|<prev| exp(i conj(zeta) h P) |psi>|^2`` by compute-uncompute.

    With an ansatz reference ``V`` this is the probability of reading all
    zeros after ``V^dag M U |0>`` on the cone register.
    """
    m_term = t.with_tau(-t.tau) if t.kind is TimeKind.REAL else t
    if isinstance(prev, Ansatz):
        cone, circ = cone_circuit(a, t.sites)
        v = exp_pauli_action(local_term(m_term, cone.qubits), circ.run(cone_params(a, cone)))
        return float(abs(circ.run_dag(cone_params(prev, cone), v)[0]) ** 2)
    if prev.shape != (2**a.n_qubits,):
        raise ValueError(f"reference of shape {prev.shape} does not match {a.n_qubits} qubits")
    return float(abs(np.vdot(prev, exp_pauli_action(m_term, prepare_state(a)))) ** 2)


def _run_range(circ: Circuit, params, v, lo, hi):
    for g in circ.gates[lo:hi]:
        v = apply_gate(v, g, circ.theta(g, params), circ.n_qubits)
    return v


def coordinate_pass(circ: Circuit, params: np.ndarray, bra: np.ndarray,
                    lo: int = 0, hi: int | None = None, trace: list | None = None,
                    active: set | None = None) -> float:
    """Maximise ``Re <bra|circ(params)|0>`` over the rotations in gates ``[lo, hi)``.

    ``params`` is updated in place; returns the final objective. One fresh
    objective evaluation is made at the start, then one per parameter (at the
    pi/2-shifted angle); the value at the current angle is recycled from the
    previous update's amplitude. ``active`` restricts updates to those slots.
    """
    n, gates = circ.n_qubits, circ.gates
    hi = len(gates) if hi is None else hi
    bras = [None] * (hi - lo)
    c = bra
    for k in range(len(gates) - 1, lo - 1, -1):
        if k < hi:
            bras[k - lo] = c
        c = apply_gate_dag(c, gates[k], circ.theta(gates[k], params), n)
    v = _run_range(circ, params, np.eye(2**n, 1, dtype=complex).ravel(), 0, lo)
    f = float(np.vdot(c, v).real)
    if trace is not None:
        trace.append(f)
    for k in range(lo, hi):
        g = gates[k]
        if g.is_rotation and (active is None or g.slot in active):
            theta = params[g.slot]
            shifted = apply_gate(-1j * pauli_rows(v, g.axis, g.qubits[0], n), g, theta, n)
            f_shift = float(np.vdot(bras[k - lo], shifted).real)
            amp = float(np.hypot(f, f_shift))
            if amp >= FLAT_AMPLITUDE:
                params[g.slot] = coordinate_max(f, f_shift, theta)
                f = amp
            if trace is not None:
                trace.append(f)
        v = apply_gate(v, g, circ.theta(g, params), n)
    return f


def sweep_cone(prev: Reference, a: Ansatz, t: TrotterTerm, n_sweeps: int = 1,
               trace: list | None = None) -> tuple[Ansatz, float]:
    """Sweep all cone parameters against the frozen reference ``prev``.

    With the previous ansatz as ``prev`` everything runs on the cone register.
    A full state vector is also accepted; the sweep then runs on the full
    register and touches the same cone parameters.
    """
    cone, circ = cone_circuit(a, t.sites)
    out = a.copy()
    f = float("nan")
    if isinstance(prev, Ansatz):
        bra = target_bra(local_term(t, cone.qubits), circ.run(cone_params(prev, cone)))
        params = cone_params(a, cone)
        for _ in range(n_sweeps):
            f = coordinate_pass(circ, params, bra, trace=trace)
        set_cone_params(out, cone, params)
        return out, f
    full = full_circuit(a)
    bra = target_bra(t, prev)
    params = a.angles.ravel().copy()
    active = {b * N_PARAMS + j for b in cone.blocks for j in range(N_PARAMS)}
    for _ in range(n_sweeps):
        f = coordinate_pass(full, params, bra, trace=trace, active=active)
    out.angles = wrap_angle(params).reshape(out.angles.shape)
    return out, f


# --- direct-measurement coordinate updates (reference = current state) ---

def _cone_setup(a: Ansatz, t: TrotterTerm, d: int):
    cone, circ = cone_circuit(a, t.sites)
    params = cone_params(a, cone)
    if not 0 <= d < circ.n_params:
        raise IndexError(f"parameter index {d} outside cone with {circ.n_params} parameters")
    pos = circ.rotation_positions[d]
    return cone, circ, params, pos


def projector_expectations(a: Ansatz, t: TrotterTerm, d: int) -> tuple[float, float]:
    """``<H+>`` and ``<H->`` for ``H± = (1±G) W^dag P W (1±G) / 2``.

    ``G`` is the generator of cone parameter ``d``, ``W`` the circuit from that
    gate onward, evaluated on the state just before the gate.
    """
    cone, circ, params, pos = _cone_setup(a, t, d)
    g = circ.gates[pos]
    n = circ.n_qubits
    p = t.operator.restrict(cone.qubits)
    beta = _run_range(circ, params, np.eye(2**n, 1, dtype=complex).ravel(), 0, pos)
    g_beta = pauli_rows(beta, g.axis, g.qubits[0], n)
    out = []
    for sign in (1, -1):
        phi = _run_range(circ, params, beta + sign * g_beta, pos, len(circ.gates))
        out.append(0.5 * pauli_expectation(phi, p))
    return out[0], out[1]


def angle_update_real(a: Ansatz, t: TrotterTerm, d: int) -> float:
    """New value of cone parameter ``d`` under the real-time angle update.

    Uses ``f(theta) = cos(tau h)`` and
    ``f(theta + pi/2) = sin(tau h) (<H+> - <H->) / 2``; the pair is passed to
    the arctan2 unscaled so negative ``sin(tau h)`` keeps the right branch.
    """
    if t.kind is not TimeKind.REAL:
        raise ValueError("angle_update_real needs a real-time term")
    cone, circ, params, pos = _cone_setup(a, t, d)
    h_plus, h_minus = projector_expectations(a, t, d)
    f0 = np.cos(t.angle)
    f1 = 0.5 * np.sin(t.angle) * (h_plus - h_minus)
    return coordinate_max(f0, f1, params[d])


def shifted_expectation(a: Ansatz, t: TrotterTerm, d: int, shift: float) -> float:
    """``<P>`` on the cone with parameter ``d`` shifted by ``shift``."""
    cone, circ, params, pos = _cone_setup(a, t, d)
    params[d] += shift
    return pauli_expectation(circ.run(params), t.operator.restrict(cone.qubits))


def angle_update_imag(a: Ansatz, t: TrotterTerm, d: int) -> float:
    """New value of cone parameter ``d`` under the imaginary-time angle update (three expectations)."""
    if t.kind is not TimeKind.IMAGINARY:
        raise ValueError("angle_update_imag needs an imaginary-time term")
    cone, circ, params, pos = _cone_setup(a, t, d)
    if t.angle == 0:
        return float(params[d])
    e0 = shifted_expectation(a, t, d, 0.0)
    e_plus = shifted_expectation(a, t, d, np.pi / 4)
    e_minus = shifted_expectation(a, t, d, -np.pi / 4)
    f0 = np.cosh(t.angle) - np.sinh(t.angle) * e0
    f1 = -0.5 * np.sinh(t.angle) * (e_plus - e_minus)
    return coordinate_max(f0, f1, params[d])


def heisenberg_suffixes(circ: Circuit, params: np.ndarray, p_local: PauliString,
                        lo: int = 0) -> list:
    """``S_k^dag P S_k`` for every gate ``k >= lo``, ``S_k`` the gates after ``k``."""
    n, gates = circ.n_qubits, circ.gates
    dim = 2**n
    op = np.column_stack([apply_pauli(col, p_local) for col in np.eye(dim, dtype=complex)])
    out = [None] * (len(gates) - lo)
    for k in range(len(gates) - 1, lo - 1, -1):
        out[k - lo] = op
        op = conjugate(op, gates[k], circ.theta(gates[k], params), n)
    return out


def angle_pass(circ: Circuit, params: np.ndarray, lt: TrotterTerm,
               trace: list | None = None, recycle: bool = False) -> None:
    """One sweep of direct-measurement angle updates over every rotation.

    The reference is the current state before each update. ``recycle`` reuses
    the previous amplitude as ``f(theta)`` for imaginary time (approximation).
    """
    n, gates = circ.n_qubits, circ.gates
    ops = heisenberg_suffixes(circ, params, lt.operator)
    alpha = lt.angle
    real = lt.kind is TimeKind.REAL
    v = np.eye(2**n, 1, dtype=complex).ravel()
    last_amp = None
    for k, g in enumerate(gates):
        if g.is_rotation:
            theta = params[g.slot]
            op = ops[k]
            after = apply_gate(v, g, theta, n)
            gv = -1j * pauli_rows(v, g.axis, g.qubits[0], n)
            shifted = apply_gate(gv, g, theta, n)
            if real:
                f0 = np.cos(alpha)
                f1 = -np.sin(alpha) * np.vdot(after, op @ shifted).imag
            else:
                if recycle and last_amp is not None:
                    f0 = last_amp
                else:
                    f0 = np.cosh(alpha) - np.sinh(alpha) * np.vdot(after, op @ after).real
                f1 = -np.sinh(alpha) * np.vdot(after, op @ shifted).real
            amp = float(np.hypot(f0, f1))
            if amp >= FLAT_AMPLITUDE:
                params[g.slot] = coordinate_max(f0, f1, theta)
            last_amp = amp
            if trace is not None:
                trace.append(amp)
        v = apply_gate(v, g, circ.theta(g, params), n)
