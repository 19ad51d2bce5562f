import numpy as np
import pytest

from varqte.ansatz import Ansatz, causal_cone, energy, prepare_state
from varqte.evolution import (
    RunRecord, Strategy, effective_tau, evolve, final_ansatz, ising_hamiltonian, step_strategy,
    trotter_error_curve, trotter_plan, trotter_product_state, trotter_sequence,
)
from varqte.objective import objective
from varqte.simcore import PauliString, TrotterTerm, exact_evolve, pauli_sum


def test_ising_examples():
    h = ising_hamiltonian(2, 1.0, 0.0)
    assert [(c, str(p)) for c, p in h.terms if c != 0] == [(-1.0, "ZZ")]
    assert h.ground_energy() == pytest.approx(-1.0)
    h4 = ising_hamiltonian(4, 1.0, 4.0)
    assert h4.ground_energy() == pytest.approx(np.linalg.eigvalsh(h4.matrix())[0], abs=1e-12)
    assert len(ising_hamiltonian(8, 1.0, 1.0).terms) == 15
    assert len(ising_hamiltonian(8, 1.0, 1.0, "periodic").terms) == 16
    with pytest.raises(ValueError):
        ising_hamiltonian(1)


def test_ising_matrix_matches_kron():
    n, J, lam = 4, 0.7, 1.3
    z, x, i2 = (PauliString(c).matrix() for c in "ZXI")

    def site(op, j):
        out = np.ones((1, 1))
        for k in range(n):
            out = np.kron(out, op if k == j else i2)
        return out
    ref = sum(-J * site(z, j) @ site(z, j + 1) for j in range(n - 1)) + sum(-J * lam * site(x, j) for j in range(n))
    assert np.allclose(ising_hamiltonian(n, J, lam).matrix(), ref)


def test_trotter_sequence_counts():
    h = ising_hamiltonian(4, 1.0, 0.5)
    first = trotter_sequence(h, 0.1, "first")
    assert [str(t.operator) for t in first] == ["ZZII", "IZZI", "IIZZ", "XIII", "IXII", "IIXI", "IIIX"]
    second = trotter_sequence(h, 0.1, "second")
    assert len(second) == 10
    assert [t.coeff for t in second[:3]] == [-0.5] * 3 and [t.coeff for t in second[-3:]] == [-0.5] * 3
    with pytest.raises(ValueError):
        trotter_sequence(h, 0.1, "third")


def test_trotter_sequence_rejects_nonlocal():
    h = pauli_sum(4, [(1.0, "ZIZI")])
    with pytest.raises(ValueError):
        trotter_sequence(h, 0.1)
    with pytest.raises(ValueError):
        trotter_sequence(pauli_sum(4, [(1.0, "XXXI")]), 0.1)


@pytest.mark.parametrize("tau", [0.05, 0.3, 1.0])
def test_commuting_limit_exact(tau):
    h = ising_hamiltonian(4, 1.0, 0.0)
    psi = np.ones(16, dtype=complex) / 4
    assert np.allclose(trotter_product_state(h, psi, 3 * tau, tau), exact_evolve(h, psi, 3 * tau, "real"), atol=1e-12)


def test_trotter_plan():
    h = ising_hamiltonian(4)
    plan = trotter_plan(h, 2.0, 0.1)
    assert plan.steps == 20 and abs(plan.total_time - 2.0) < 1e-12
    with pytest.raises(ValueError):
        trotter_plan(h, 1.0, 0.3)


def test_strategy_validation():
    with pytest.raises(ValueError):
        Strategy("greedy")
    with pytest.raises(ValueError):
        Strategy("cone", 0)


def test_effective_tau():
    t = TrotterTerm(1.0, PauliString("ZZII"), 0.1)
    assert effective_tau(t, Strategy("cone", 3), 5) == 0.1
    assert effective_tau(t, Strategy("block", 2), 5) == pytest.approx(0.01)
    assert effective_tau(t, Strategy("angle", 2), 5) == pytest.approx(0.1 / 150)
    ti = TrotterTerm(1.0, PauliString("ZZII"), 0.1, "imaginary")
    assert effective_tau(ti, Strategy("angle", 2), 5) == 0.1


@pytest.mark.parametrize("kind", ["cone", "block", "angle"])
def test_zero_step_unchanged(kind):
    a = Ansatz.random(8, 2, "open", 1)
    t = TrotterTerm(1.0, PauliString.from_sites(8, {2: "Z", 3: "Z"}), 0.0)
    out = step_strategy(a, a, t, Strategy(kind, 2))
    assert abs(abs(np.vdot(prepare_state(a), prepare_state(out))) - 1) < 1e-10


def test_cone_and_block_coincide_on_single_block_cone():
    a = Ansatz.random(4, 1, "open", 3)
    t = TrotterTerm(0.8, PauliString("XYII"), 0.2)
    assert len(causal_cone(a, t.sites).blocks) == 1
    c = step_strategy(a, a, t, Strategy("cone", 1))
    b = step_strategy(a, a, t, Strategy("block", 1))
    assert np.allclose(c.angles, b.angles, atol=1e-12)


def test_strategies_improve_objective():
    rng = np.random.default_rng(4)
    a = Ansatz.random(8, 2, "periodic", rng)
    t = TrotterTerm(1.0, PauliString.from_sites(8, {1: "X", 2: "Y"}), 0.1, sites=(1, 2))
    vals = {k: objective(a, step_strategy(a, a, t, Strategy(k, 2)), t) for k in ("cone", "block", "angle")}
    assert vals["cone"] >= objective(a, a, t)
    assert vals["cone"] >= vals["block"] - 1e-12


def test_evolve_zero_time():
    a = Ansatz.random(6, 2, "open", 2)
    h = ising_hamiltonian(6, 1.0, 0.3)
    rec = evolve(a, h, 0.0, 0.1)
    assert len(rec.rows) == 1 and rec.rows[0]["energy"] == pytest.approx(energy(a, h))


def test_evolve_errors():
    a = Ansatz.identity(6, 2)
    with pytest.raises(ValueError):
        evolve(a, ising_hamiltonian(4), 1.0, 0.1)
    with pytest.raises(ValueError):
        evolve(a, ising_hamiltonian(6), 1.0, 0.3)
    with pytest.raises(ValueError):
        evolve(a, ising_hamiltonian(6))


def test_evolve_real_tracks_exact_and_stays_normalised():
    a = Ansatz.identity(6, 2, "open")
    h = ising_hamiltonian(6, 1.0, 0.2)
    rec = evolve(a, h, 0.5, 0.05, "second", Strategy("cone", 4), "real", oracle=True)
    times = rec.column("time")
    assert np.all(np.diff(times) > 0)
    assert rec.column("distance_sq")[-1] < 1e-3
    assert abs(np.linalg.norm(prepare_state(final_ansatz(rec))) - 1) < 1e-12
    assert np.all(np.isfinite(rec.column("energy")))
    assert np.all(rec.column("min_objective")[1:] > 0.999)


@pytest.mark.parametrize("strategy", ["cone", "block", "angle"])
def test_imaginary_energy_descent(strategy):
    """Cone runs are step-wise monotone; approximate strategies must end below their start."""
    h = ising_hamiltonian(8, 1.0, 1.0)
    a = Ansatz.random(8, 2, "open", 7)
    e = evolve(a, h, 1.0, 0.1, "first", Strategy(strategy, 1), "imaginary").column("energy")
    assert e[-1] < e[0]
    if strategy == "cone":
        assert np.all(np.diff(e[3:]) <= 1e-6)


def test_schedule_and_oracle_relative_error():
    h = ising_hamiltonian(6, 1.0, 0.5)
    a = Ansatz.random(6, 2, "open", 1)
    rec = evolve(a, h, schedule=[(5, 0.1), (5, 0.05)], strategy=Strategy("cone", 1), kind="imaginary", oracle=True)
    assert len(rec.rows) == 11
    assert rec.rows[-1]["time"] == pytest.approx(0.75)
    assert rec.rows[-1]["rel_energy_error"] >= -1e-12
    assert rec.rows[-1]["rel_energy_error"] < rec.rows[0]["rel_energy_error"]


def test_checkpoint_resume_matches_uninterrupted(tmp_path):
    h = ising_hamiltonian(6, 1.0, 0.4)
    a = Ansatz.random(6, 2, "open", 5)
    full = evolve(a, h, 0.6, 0.1, strategy=Strategy("block", 2), kind="imaginary")
    ck = tmp_path / "ck.json"
    evolve(a, h, 0.3, 0.1, strategy=Strategy("block", 2), kind="imaginary", checkpoint=ck)
    resumed = evolve(a, h, 0.6, 0.1, strategy=Strategy("block", 2), kind="imaginary", checkpoint=ck, resume=True)
    assert [r["step"] for r in resumed.rows] == [4, 5, 6]
    assert np.allclose(resumed.column("energy"), full.column("energy")[4:], atol=1e-10)


def test_csv_deterministic(tmp_path):
    h = ising_hamiltonian(4, 1.0, 0.3)
    a = Ansatz.random(4, 2, "open", 0)
    r1 = evolve(a, h, 0.3, 0.1, oracle=True)
    r2 = evolve(a, h, 0.3, 0.1, oracle=True)
    assert r1.to_csv() == r2.to_csv()
    assert "wall" not in r1.to_csv().splitlines()[0]
    r1.write(tmp_path / "run.csv")
    assert (tmp_path / "run.json").exists()


def test_run_record_columns():
    rec = RunRecord([{"step": 0, "energy": 1.0, "wall": 0.1}, {"step": 1, "energy": 0.5, "x": 2.0}])
    assert rec.columns == ["step", "energy", "x"]
    assert np.isnan(rec.column("x")[0])


def test_trotter_error_curve_commuting():
    h = ising_hamiltonian(4, 1.0, 0.0)
    curve = trotter_error_curve(h, 0.4, [0.1, 0.2], "first", sweeps=2)
    assert all(d < 1e-10 for _, d in curve)
