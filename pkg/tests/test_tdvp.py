import warnings

import numpy as np
import pytest

from varqte.ansatz import Ansatz, prepare_state
from varqte.circuit import Circuit, Gate
from varqte.evolution import ising_hamiltonian
from varqte.simcore import distance_sq, exact_evolve, pauli_sum
from varqte.tdvp import (
    SingularSystemWarning, TdvpSystem, build_system, condition_number, condition_study, noise_scaling,
    pinv_solve, representative_system, system_from_circuit, tdvp_step, write_condition_csv,
)


def fd_system(a, h, eps=1e-5):
    """A and C from central differences of the prepared state."""
    th = a.angles.ravel()
    psi = prepare_state(a)
    cols = []
    for k in range(th.size):
        plus, minus = a.copy(), a.copy()
        plus.angles = (th + eps * np.eye(th.size)[k]).reshape(a.angles.shape)
        minus.angles = (th - eps * np.eye(th.size)[k]).reshape(a.angles.shape)
        cols.append((prepare_state(plus) - prepare_state(minus)) / (2 * eps))
    jac = np.array(cols).T
    return (jac.conj().T @ jac).real, (jac.conj().T @ (h.matrix() @ psi)).imag


def test_single_rx():
    circ = Circuit(1, (Gate("rx", (0,), 0),), 1)
    s = system_from_circuit(circ, np.array([0.37]), None)
    assert s.A[0, 0] == pytest.approx(1.0)


def test_matches_finite_differences():
    a = Ansatz.random(4, 2, "open", 3)
    h = ising_hamiltonian(4, 1.0, 0.6)
    s = build_system(a, h)
    A, C = fd_system(a, h)
    assert np.abs(s.A - A).max() < 1e-6
    assert np.abs(s.C - C).max() < 1e-6


def test_gram_symmetric_psd():
    s = build_system(Ansatz.random(6, 2, "periodic", 1), ising_hamiltonian(6, 1.0, 1.0, "periodic"))
    assert np.allclose(s.A, s.A.T, atol=1e-10)
    assert np.linalg.eigvalsh(s.A).min() > -1e-10


def test_asymmetric_rejected():
    with pytest.raises(ValueError):
        TdvpSystem(np.array([[1.0, 2.0], [0.0, 1.0]]), np.zeros(2))


def test_cone_scope_restricts_hamiltonian():
    a = Ansatz.random(8, 2, "periodic", 2)
    s = build_system(a, ising_hamiltonian(8, 1.0, 1.0, "periodic"), scope=(1, 2))
    assert s.A.shape == (45, 45)


def test_zero_c_leaves_angles():
    # |0000> has eigenvalue 0 here, so C vanishes (including the phase direction)
    a = Ansatz.identity(4, 1, "open")
    h = pauli_sum(4, [(1.0, "ZZII"), (-1.0, "IZZI")])
    assert np.abs(build_system(a, h).C).max() < 1e-12
    out = tdvp_step(a, h, 0.1)
    assert np.allclose(out.angles, a.angles)


def test_pinv_degenerate_paths():
    A = np.diag([1.0, 1e-9, 0.0])
    b = pinv_solve(A, np.array([1.0, 1.0, 1.0]), 1e-7)
    assert np.all(np.isfinite(b)) and b[1] == 0 and b[0] == pytest.approx(1.0)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        assert np.all(pinv_solve(np.zeros((2, 2)), np.ones(2), 1e-7) == 0)
    assert any(issubclass(x.category, SingularSystemWarning) for x in w)


def test_cutoff_never_exceeds_raw_ratio():
    s = build_system(Ansatz.random(4, 2, "open", 8), ising_hamiltonian(4))
    sv = s.singular_values
    raw = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
    assert condition_number(s.A, 1e-7) <= raw


def test_tdvp_tracks_exact_and_conserves_energy():
    h = ising_hamiltonian(4, 1.0, 0.2)
    # depth 4 spans the 4-qubit state manifold; at depth 2 the 1e-7 cutoff keeps
    # near-singular directions and Euler steps blow up
    a = Ansatz.random(4, 4, "open", 11)
    psi0 = prepare_state(a)
    e0 = h.expectation(psi0)
    for _ in range(100):
        a = tdvp_step(a, h, 1e-3)
    psi = prepare_state(a)
    assert distance_sq(psi, exact_evolve(h, psi0, 0.1, "real")) < 0.05
    assert abs(h.expectation(psi) - e0) < 1e-4


def test_condition_study_growth(tmp_path):
    rows = condition_study(n_samples=12)
    med = [r["median_kappa"] for r in rows]
    assert med[0] < med[1] < med[2]
    for r in rows:
        assert r["median_kappa"] <= r["median_raw_kappa"]
    path = tmp_path / "k.csv"
    write_condition_csv(rows, path)
    assert path.read_text().startswith("n_params,")
    with pytest.raises(ValueError):
        condition_study((30,), 2)


def test_noise_scaling_small_system():
    s = representative_system(15, n_samples=10)
    rows, slope = noise_scaling(s, [1e12, 1e14, 1e16], trials=10)
    assert abs(slope + 0.5) < 0.1
    rows0, _ = noise_scaling(s, [np.inf], trials=2)
    assert rows0[0][1] == 0.0
