"""Time-dependent variational principle baseline and its conditioning."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .ansatz import (N_PARAMS, Ansatz, CausalCone, _compile, block_layout, cone_circuit,
                     cone_params, full_circuit)
from .circuit import Circuit
from .simcore import Hamiltonian, PauliString, apply_pauli

DEFAULT_CUTOFF = 1e-7


class SingularSystemWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class TdvpSystem:
    """``A B = C`` with ``A = Re(J^dag J)`` and ``C = Im(J^dag H psi)``."""

    A: np.ndarray
    C: np.ndarray
    cutoff: float = DEFAULT_CUTOFF

    def __post_init__(self):
        if not np.allclose(self.A, self.A.T, atol=1e-10):
            raise ValueError("A is not symmetric")

    @property
    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.A, compute_uv=False)

    @property
    def rank(self) -> int:
        return int(np.sum(self.singular_values >= self.cutoff))

    @property
    def kappa(self) -> float:
        return condition_number(self.A, self.cutoff)

    def solve(self, rank: int | None = None) -> np.ndarray:
        return pinv_solve(self.A, self.C, self.cutoff, rank)


def condition_number(m: np.ndarray, cutoff: float = DEFAULT_CUTOFF) -> float:
    """``sigma_max / sigma_min`` over singular values ``>= cutoff``."""
    sv = np.linalg.svd(m, compute_uv=False)
    kept = sv[sv >= cutoff]
    if kept.size == 0:
        return float("nan")
    return float(kept[0] / kept[-1])


def pinv_solve(A: np.ndarray, C: np.ndarray, cutoff: float = DEFAULT_CUTOFF,
               rank: int | None = None) -> np.ndarray:
    """Pseudo-inverse solve. ``rank`` fixes the number of kept singular values."""
    u, s, vt = np.linalg.svd(A)
    keep = s >= cutoff if rank is None else np.arange(s.size) < rank
    if not keep.any():
        warnings.warn("all singular values below cutoff; returning B = 0", SingularSystemWarning, stacklevel=2)
        return np.zeros(A.shape[1])
    return vt[keep].T @ ((u[:, keep].T @ C) / s[keep])


def system_from_circuit(circ: Circuit, params: np.ndarray, h_local: Hamiltonian | None,
                        cutoff: float = DEFAULT_CUTOFF) -> TdvpSystem:
    psi, jac = circ.jacobian(params)
    A = (jac.conj().T @ jac).real
    A = (A + A.T) / 2
    if h_local is None:
        C = np.zeros(circ.n_params)
    else:
        hpsi = sum(c * apply_pauli(psi, p) for c, p in h_local.terms)
        C = (jac.conj().T @ hpsi).imag
    return TdvpSystem(A, C, cutoff)


def _restrict(h: Hamiltonian, qubits: Sequence[int]) -> Hamiltonian:
    """Terms of ``h`` supported inside ``qubits``, relabelled to the compact register."""
    inside = set(qubits)
    terms = tuple((c, p.restrict(qubits)) for c, p in h.terms if set(p.support) <= inside)
    return Hamiltonian(len(qubits), terms)


def build_system(a: Ansatz, h: Hamiltonian, scope: Iterable[int] | None = None,
                 cutoff: float = DEFAULT_CUTOFF) -> TdvpSystem:
    """TDVP system over all parameters, or over the cone of ``scope``.

    A cone-scoped system keeps the Hamiltonian terms that fit inside the
    cone register.
    """
    if h.n_qubits != a.n_qubits:
        raise ValueError(f"Hamiltonian on {h.n_qubits} qubits, ansatz has {a.n_qubits}")
    if scope is None:
        return system_from_circuit(full_circuit(a), a.angles.ravel(), h, cutoff)
    cone, circ = cone_circuit(a, scope)
    return system_from_circuit(circ, cone_params(a, cone), _restrict(h, cone.qubits), cutoff)


def tdvp_step(a: Ansatz, h: Hamiltonian, tau: float, cutoff: float = DEFAULT_CUTOFF) -> Ansatz:
    """Explicit Euler step ``theta += tau * B``."""
    b = build_system(a, h, None, cutoff).solve()
    out = a.copy()
    out.angles = a.angles + tau * b.reshape(a.angles.shape)
    out.angles = Ansatz(a.n_qubits, a.depth, a.boundary, out.angles).angles
    return out


def study_circuits() -> dict[int, Circuit]:
    """Cone circuits with 1, 3 and 5 blocks (15, 45, 75 parameters)."""
    a = Ansatz.identity(8, 2, "periodic")
    single = _compile(block_layout(8, 2, "periodic"), CausalCone((0,), (0, 1)))
    return {N_PARAMS: single, 3 * N_PARAMS: cone_circuit(a, (1, 2))[1],
            5 * N_PARAMS: cone_circuit(a, (0, 1))[1]}


def _sample_params(n_params: int, seed: int, sample: int) -> np.ndarray:
    rng = np.random.default_rng([seed, n_params, sample])
    return rng.uniform(-np.pi, np.pi, n_params)


def condition_study(n_params: Sequence[int] = (15, 45, 75), n_samples: int = 100,
                    cutoff: float = DEFAULT_CUTOFF, seed: int = 0) -> list[dict]:
    """Median condition number of ``A`` over random cone angles."""
    circuits = study_circuits()
    out = []
    for p in n_params:
        if p not in circuits:
            raise ValueError(f"no cone configuration with {p} parameters; choose from {sorted(circuits)}")
        kappas, raw = [], []
        for s in range(n_samples):
            sysm = system_from_circuit(circuits[p], _sample_params(p, seed, s), None, cutoff)
            sv = sysm.singular_values
            kappas.append(sysm.kappa)
            raw.append(sv[0] / sv[-1] if sv[-1] > 0 else np.inf)
        out.append({"n_params": p, "n_samples": n_samples, "cutoff": cutoff,
                    "median_kappa": float(np.median(kappas)),
                    "median_raw_kappa": float(np.median(raw)),
                    "kappas": kappas})
    return out


def representative_system(n_params: int, seed: int = 0, n_samples: int = 100,
                          cutoff: float = DEFAULT_CUTOFF) -> TdvpSystem:
    """System whose kappa is the sample median, with ``C`` from a random 2-local H."""
    circ = study_circuits()[n_params]
    systems = []
    for s in range(n_samples):
        params = _sample_params(n_params, seed, s)
        systems.append((system_from_circuit(circ, params, None, cutoff).kappa, s, params))
    systems.sort(key=lambda x: x[0])
    _, s, params = systems[len(systems) // 2]
    rng = np.random.default_rng([seed, n_params, s, 1])
    n = circ.n_qubits
    terms = [(float(rng.normal()), PauliString.from_sites(n, {q: "Z", q + 1: "Z"})) for q in range(n - 1)]
    terms += [(float(rng.normal()), PauliString.from_sites(n, {q: "X"})) for q in range(n)]
    return system_from_circuit(circ, params, Hamiltonian(n, tuple(terms)), cutoff)


def noise_scaling(system: TdvpSystem, m_values: Sequence[float], trials: int = 50,
                  c: float | None = None, seed: int = 0) -> tuple[list[tuple[float, float]], float]:
    """Relative error of ``B`` when ``A`` and ``C`` carry ``N(0, c^2/m)`` noise.

    The pseudo-inverse keeps the noiseless rank so that the truncation does
    not change with the noise draw. Returns ``(rows, slope)`` where rows hold
    the mean relative error per ``m`` and slope is the log-log fit.
    """
    if c is None:
        c = float(max(np.abs(system.A).max(), np.abs(system.C).max()))
    rank = system.rank
    b0 = system.solve()
    norm = np.linalg.norm(b0)
    if norm == 0:
        raise ValueError("noiseless solution is zero; relative error undefined")
    rng = np.random.default_rng(seed)
    rows = []
    dim = system.A.shape[0]
    for m in m_values:
        sigma = c / np.sqrt(m)
        errs = []
        for _ in range(trials):
            noise = rng.normal(0, sigma, (dim, dim))
            noise = np.triu(noise) + np.triu(noise, 1).T
            b = pinv_solve(system.A + noise, system.C + rng.normal(0, sigma, dim), rank=rank)
            errs.append(np.linalg.norm(b - b0) / norm)
        rows.append((float(m), float(np.mean(errs))))
    fit = [(m, e) for m, e in rows if np.isfinite(m) and e > 0]
    slope = float(np.polyfit(*np.log(np.array(fit)).T, 1)[0]) if len(fit) > 1 else float("nan")
    return rows, slope


def write_condition_csv(rows: list[dict], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n_params", "n_samples", "cutoff", "median_kappa", "median_raw_kappa"])
        for r in rows:
            w.writerow([r["n_params"], r["n_samples"], r["cutoff"], repr(r["median_kappa"]),
                        repr(r["median_raw_kappa"])])
