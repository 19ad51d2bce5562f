import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from varqte.simcore import (
    Hamiltonian, PauliString, TimeKind, TrotterTerm, apply_pauli, apply_unitary, basis_state,
    distance_sq, exact_evolve, exp_pauli_action, pauli_expectation, pauli_sum, random_state,
    transition_amplitude, zero_state,
)
from varqte.evolution import ising_hamiltonian, trotter_product_state


def dense_embed(u, targets, n):
    """Brute-force embedding by permuting a kron product (independent of tensordot)."""
    k = len(targets)
    rest = [q for q in range(n) if q not in targets]
    full = np.kron(u, np.eye(2 ** (n - k)))
    order = list(targets) + rest
    perm = np.argsort(order)
    t = full.reshape([2] * (2 * n))
    t = t.transpose(list(perm) + [n + p for p in perm])
    return t.reshape(2**n, 2**n)


def random_unitary(dim, rng):
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / abs(np.diag(r)))


pauli_strings = st.integers(1, 6).flatmap(lambda n: st.text("IXYZ", min_size=n, max_size=n))


def test_pauli_support_and_square():
    p = PauliString("IXZY")
    assert p.support == (1, 2, 3)
    m = p.matrix()
    assert np.allclose(m @ m, np.eye(16))


def test_invalid_pauli():
    with pytest.raises(ValueError):
        PauliString("IXA")


def test_hamiltonian_hermitian_and_validation():
    h = ising_hamiltonian(4, 1.0, 0.7)
    m = h.matrix()
    assert np.allclose(m, m.conj().T)
    with pytest.raises(ValueError):
        Hamiltonian(2, ((np.nan, PauliString("ZZ")),))
    with pytest.raises(ValueError):
        Hamiltonian(3, ((1.0, PauliString("ZZ")),))


def test_apply_unitary_identity_and_flip():
    rng = np.random.default_rng(0)
    psi = random_state(3, rng)
    assert np.allclose(apply_unitary(psi, np.eye(4), [0, 2]), psi)
    x = PauliString("X").matrix()
    assert np.allclose(apply_unitary(zero_state(2), x, [0]), basis_state("10"))


def test_apply_unitary_matches_dense_embedding():
    rng = np.random.default_rng(1)
    for targets in [(1, 2), (2, 1), (0, 3), (3,)]:
        u = random_unitary(2 ** len(targets), rng)
        psi = random_state(4, rng)
        assert np.allclose(apply_unitary(psi, u, targets), dense_embed(u, targets, 4) @ psi, atol=1e-12)


def test_apply_unitary_errors():
    psi = zero_state(2)
    with pytest.raises(ValueError):
        apply_unitary(psi, np.eye(4), [0, 0])
    with pytest.raises(ValueError):
        apply_unitary(psi, np.eye(2), [2])
    with pytest.raises(ValueError):
        apply_unitary(psi, 2 * np.eye(2), [0])
    with pytest.raises(ValueError):
        apply_unitary(psi, np.eye(4), [0])


def test_expectation_examples():
    s = zero_state(2)
    assert pauli_expectation(s, PauliString("ZZ")) == 1.0
    assert pauli_expectation(s, PauliString("XI")) == 0.0
    assert transition_amplitude(s, PauliString("II"), s) == 1 + 0j
    assert transition_amplitude(basis_state("10"), PauliString("XI"), s) == 1 + 0j


@settings(max_examples=60, deadline=None)
@given(factors=pauli_strings, seed=st.integers(0, 2**31))
def test_pauli_ops_match_dense(factors, seed):
    rng = np.random.default_rng(seed)
    n = len(factors)
    p = PauliString(factors)
    a, b = random_state(n, rng), random_state(n, rng)
    m = p.matrix()
    assert np.allclose(apply_pauli(a, p), m @ a, atol=1e-12)
    assert abs(transition_amplitude(b, p, a) - np.vdot(b, m @ a)) < 1e-12
    assert abs(pauli_expectation(a, p) - np.vdot(a, m @ a).real) < 1e-12


@settings(max_examples=60, deadline=None)
@given(factors=pauli_strings, seed=st.integers(0, 2**31), kind=st.sampled_from(list(TimeKind)))
def test_exp_pauli_action_matches_expm(factors, seed, kind):
    rng = np.random.default_rng(seed)
    n = len(factors)
    p = PauliString(factors)
    term = TrotterTerm(float(rng.normal()), p, float(rng.uniform(0, 1)), kind)
    psi = random_state(n, rng)
    gen = -1j * term.angle * p.matrix() if kind is TimeKind.REAL else -term.angle * p.matrix()
    assert np.allclose(exp_pauli_action(term, psi), sla.expm(gen) @ psi, atol=1e-12)


def test_exp_pauli_action_examples():
    psi = random_state(3, np.random.default_rng(2))
    assert np.allclose(exp_pauli_action(TrotterTerm(1.0, PauliString("XYZ"), 0.0), psi), psi)
    out = exp_pauli_action(TrotterTerm(1.0, PauliString("Z"), np.pi / 2), zero_state(1))
    assert np.allclose(out, [-1j, 0])


def test_real_exp_is_involutive_and_norm_preserving():
    rng = np.random.default_rng(3)
    psi = random_state(4, rng)
    t = TrotterTerm(0.7, PauliString("XZIY"), 0.3)
    fwd = exp_pauli_action(t, psi)
    assert abs(np.linalg.norm(fwd) - 1) < 1e-12
    assert np.allclose(exp_pauli_action(t.with_tau(-0.3), fwd), psi, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_exact_evolve_matches_expm(n):
    rng = np.random.default_rng(n)
    h = Hamiltonian(n, tuple((float(rng.normal()), PauliString("".join(rng.choice(list("IXYZ"), n))))
                             for _ in range(5)))
    psi = random_state(n, rng)
    m = h.matrix()
    assert np.allclose(exact_evolve(h, psi, 0.8, "real"), sla.expm(-0.8j * m) @ psi, atol=1e-12)
    ref = sla.expm(-0.8 * m) @ psi
    assert np.allclose(exact_evolve(h, psi, 0.8, "imaginary"), ref / np.linalg.norm(ref), atol=1e-12)
    assert np.allclose(exact_evolve(h, psi, 0.0, "real"), psi)


def test_exact_evolve_imaginary_limit():
    h = pauli_sum(1, [(-1.0, "Z")])
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    out = exact_evolve(h, plus, 50.0, "imaginary")
    assert np.allclose(abs(out), [1, 0], atol=1e-12)
    assert abs(h.expectation(out) + 1) < 1e-12


def test_exact_evolve_vs_fine_trotter():
    h = ising_hamiltonian(4, 1.0, 0.2)
    psi = zero_state(4)
    exact = exact_evolve(h, psi, 1.0, "real")
    trot = trotter_product_state(h, psi, 1.0, 1e-3, "second")
    assert distance_sq(exact, trot) < 1e-5


def test_distance_examples():
    a = zero_state(1)
    assert distance_sq(a, a) == 0.0
    assert abs(distance_sq(a, basis_state("1")) - 2.0) < 1e-15
    plus = np.array([1, 1]) / np.sqrt(2)
    assert abs(distance_sq(a, plus) - (2 - np.sqrt(2))) < 1e-12
    with pytest.raises(ValueError):
        distance_sq(a, zero_state(2))


def test_ground_energy_sparse_matches_dense():
    h = ising_hamiltonian(10, 1.0, 1.0)
    dense = np.linalg.eigvalsh(h.matrix())[0]
    assert abs(h.ground_energy() - dense) < 1e-9


def test_trotter_error_slopes():
    h = ising_hamiltonian(4, 1.0, 1.0)
    psi = zero_state(4)
    t = 1.0
    exact = exact_evolve(h, psi, t, "real")
    taus = [1e-3, 1e-2, 1e-1]
    for order, expected in [("first", 1.0), ("second", 2.0)]:
        errs = [np.linalg.norm(trotter_product_state(h, psi, t, tau, order) - exact) for tau in taus]
        slope = np.polyfit(np.log(taus), np.log(errs), 1)[0]
        assert abs(slope - expected) < 0.2, (order, slope)
