"""Dense statevector engine.

Amplitudes are stored with qubit 0 as the most significant bit of the basis
index, so ``state.reshape([2] * n)`` puts qubit ``q`` on axis ``q``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

UNITARY_TOL = 1e-10
DENSE_LIMIT = 12

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class TimeKind(str, enum.Enum):
    REAL = "real"
    IMAGINARY = "imaginary"


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, e.g. ``PauliString("IZZI")``."""

    factors: str

    def __post_init__(self):
        if not self.factors or set(self.factors) - set("IXYZ"):
            raise ValueError(f"invalid Pauli factors {self.factors!r}")

    @classmethod
    def from_sites(cls, n_qubits: int, sites: dict[int, str]) -> "PauliString":
        chars = ["I"] * n_qubits
        for q, f in sites.items():
            if not 0 <= q < n_qubits:
                raise ValueError(f"qubit {q} out of range for {n_qubits} qubits")
            chars[q] = f
        return cls("".join(chars))

    @property
    def n_qubits(self) -> int:
        return len(self.factors)

    @cached_property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, f in enumerate(self.factors) if f != "I")

    def restrict(self, qubits: Sequence[int]) -> "PauliString":
        """Factors on ``qubits`` (in that order) as a smaller string."""
        missing = set(self.support) - set(qubits)
        if missing:
            raise ValueError(f"support {sorted(missing)} outside {list(qubits)}")
        return PauliString("".join(self.factors[q] for q in qubits))

    def matrix(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for f in self.factors:
            out = np.kron(out, PAULI_MATRICES[f])
        return out

    def __str__(self):
        return self.factors


@dataclass(frozen=True)
class Hamiltonian:
    """Weighted sum of Pauli strings, ``H = sum_k h_k P_k``."""

    n_qubits: int
    terms: tuple[tuple[float, PauliString], ...]

    def __post_init__(self):
        for h, p in self.terms:
            if p.n_qubits != self.n_qubits:
                raise ValueError(f"term {p} does not act on {self.n_qubits} qubits")
            if not np.isfinite(h):
                raise ValueError(f"non-finite coefficient {h} on {p}")

    def sparse_matrix(self) -> sp.csr_matrix:
        dim = 2**self.n_qubits
        out = sp.csr_matrix((dim, dim), dtype=complex)
        for h, p in self.terms:
            m = sp.identity(1, dtype=complex, format="csr")
            for f in p.factors:
                m = sp.kron(m, sp.csr_matrix(PAULI_MATRICES[f]), format="csr")
            out = out + h * m
        return out

    def matrix(self) -> np.ndarray:
        if self.n_qubits > DENSE_LIMIT:
            raise ValueError(f"dense matrix for {self.n_qubits} qubits is not supported")
        return self.sparse_matrix().toarray()

    def ground_energy(self) -> float:
        if self.n_qubits <= 8:
            return float(np.linalg.eigvalsh(self.matrix())[0])
        from scipy.sparse.linalg import eigsh

        vals = eigsh(self.sparse_matrix(), k=1, which="SA", tol=1e-12)[0]
        return float(vals[0])

    def expectation(self, state: np.ndarray) -> float:
        return float(sum(h * pauli_expectation(state, p) for h, p in self.terms))


@dataclass(frozen=True)
class TrotterTerm:
    """One factor ``exp(-i zeta h P)`` of a product formula.

    ``sites`` are the qubits whose causal cone the term is optimised in; they
    default to the operator support and may be larger (e.g. ``I (x) I``
    placed on a bond).
    """

    coeff: float
    operator: PauliString
    tau: float
    kind: TimeKind = TimeKind.REAL
    sites: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", TimeKind(self.kind))
        sites = self.operator.support if self.sites is None else tuple(sorted(self.sites))
        if not set(self.operator.support) <= set(sites):
            raise ValueError(f"operator support {self.operator.support} not within sites {sites}")
        object.__setattr__(self, "sites", sites)

    @property
    def angle(self) -> float:
        return self.tau * self.coeff

    def with_tau(self, tau: float) -> "TrotterTerm":
        return TrotterTerm(self.coeff, self.operator, tau, self.kind, self.sites)


def n_qubits_of(state: np.ndarray) -> int:
    n = int(round(np.log2(state.shape[0])))
    if state.ndim != 1 or 2**n != state.shape[0]:
        raise ValueError(f"state of shape {state.shape} is not a qubit register")
    return n


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    return psi


def basis_state(bits: str) -> np.ndarray:
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[int(bits, 2)] = 1.0
    return psi


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return psi / np.linalg.norm(psi)


def _check_dims(a: np.ndarray, b_qubits: int) -> int:
    n = n_qubits_of(a)
    if n != b_qubits:
        raise ValueError(f"dimension mismatch: {n} vs {b_qubits} qubits")
    return n


def apply_unitary(state: np.ndarray, u: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply a dense ``2^k x 2^k`` unitary to ``targets`` (first target = most significant)."""
    n = n_qubits_of(state)
    targets = list(targets)
    k = len(targets)
    if len(set(targets)) != k or any(not 0 <= q < n for q in targets):
        raise ValueError(f"invalid targets {targets} for {n} qubits")
    u = np.asarray(u, dtype=complex)
    if u.shape != (2**k, 2**k):
        raise ValueError(f"matrix shape {u.shape} does not match {k} targets")
    if np.linalg.norm(u.conj().T @ u - np.eye(2**k)) > UNITARY_TOL:
        raise ValueError("matrix is not unitary")
    psi = state.reshape([2] * n)
    out = np.tensordot(u.reshape([2] * (2 * k)), psi, axes=(list(range(k, 2 * k)), targets))
    out = np.moveaxis(out, list(range(k)), targets)
    return out.reshape(-1)


def apply_pauli(state: np.ndarray, p: PauliString) -> np.ndarray:
    n = _check_dims(state, p.n_qubits)
    psi = state.reshape([2] * n)
    for q in p.support:
        f = p.factors[q]
        if f in "XY":
            psi = np.flip(psi, axis=q)
        if f in "YZ":
            sign = np.array([1, -1]) if f == "Z" else np.array([-1j, 1j])
            shape = [1] * n
            shape[q] = 2
            psi = psi * sign.reshape(shape)
    return np.ascontiguousarray(psi).reshape(-1)


def transition_amplitude(bra: np.ndarray, p: PauliString, ket: np.ndarray) -> complex:
    """``<bra|P|ket>``."""
    _check_dims(bra, p.n_qubits)
    return complex(np.vdot(bra, apply_pauli(ket, p)))


def pauli_expectation(state: np.ndarray, p: PauliString) -> float:
    return transition_amplitude(state, p, state).real


def exp_pauli_action(term: TrotterTerm, state: np.ndarray) -> np.ndarray:
    """Action of the Trotter factor on ``state``.

    Real time gives ``cos(a) psi - i sin(a) P psi``; imaginary time gives the
    unnormalised ``cosh(a) psi - sinh(a) P psi`` with ``a = tau * h``.
    """
    a = term.angle
    p_psi = apply_pauli(state, term.operator)
    if term.kind is TimeKind.REAL:
        return np.cos(a) * state - 1j * np.sin(a) * p_psi
    return np.cosh(a) * state - np.sinh(a) * p_psi


def exact_evolve(h: Hamiltonian, state: np.ndarray, t: float, kind: TimeKind | str) -> np.ndarray:
    """Evolve by dense eigendecomposition; imaginary time output is renormalised."""
    kind = TimeKind(kind)
    _check_dims(state, h.n_qubits)
    if h.n_qubits > DENSE_LIMIT:
        raise ValueError(f"exact evolution limited to {DENSE_LIMIT} qubits")
    evals, evecs = _eigh(h)
    coeffs = evecs.conj().T @ state
    if kind is TimeKind.REAL:
        return evecs @ (np.exp(-1j * t * evals) * coeffs)
    # shift by the ground energy so long times do not underflow
    out = evecs @ (np.exp(-t * (evals - evals[0])) * coeffs)
    return out / np.linalg.norm(out)


_EIGH_CACHE: dict[Hamiltonian, tuple[np.ndarray, np.ndarray]] = {}


def _eigh(h: Hamiltonian):
    if h not in _EIGH_CACHE:
        if len(_EIGH_CACHE) > 8:
            _EIGH_CACHE.clear()
        _EIGH_CACHE[h] = np.linalg.eigh(h.matrix())
    return _EIGH_CACHE[h]


def distance_sq(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sum(np.abs(a - b) ** 2))


def pauli_sum(n_qubits: int, terms: Iterable[tuple[float, str]]) -> Hamiltonian:
    return Hamiltonian(n_qubits, tuple((float(h), PauliString(s)) for h, s in terms))
