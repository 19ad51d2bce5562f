"""Trotterised variational evolution with CONE / BLOCK / ANGLE updates."""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .ansatz import N_PARAMS, Ansatz, cone_circuit, cone_params, energy, prepare_state, set_cone_params
from .objective import angle_pass, coordinate_pass, local_term, objective, sweep_cone, target_bra
from .simcore import Hamiltonian, PauliString, TimeKind, TrotterTerm, exact_evolve, distance_sq

STRATEGIES = ("cone", "block", "angle")


def ising_hamiltonian(n: int, J: float = 1.0, lam: float = 1.0, boundary: str = "open") -> Hamiltonian:
    """``H = -J (sum_j Z_j Z_{j+1} + lam sum_j X_j)``."""
    if n < 2:
        raise ValueError("the Ising chain needs at least two sites")
    bonds = [(j, j + 1) for j in range(n - 1)]
    if boundary == "periodic" and n > 2:
        bonds.append((n - 1, 0))
    terms = [(-J, PauliString.from_sites(n, {i: "Z", j: "Z"})) for i, j in bonds]
    terms += [(-J * lam, PauliString.from_sites(n, {j: "X"})) for j in range(n)]
    return Hamiltonian(n, tuple((float(h), p) for h, p in terms))


@dataclass(frozen=True)
class Strategy:
    kind: str = "cone"
    sweeps: int = 1

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.kind!r}; expected one of {STRATEGIES}")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")


@dataclass(frozen=True)
class TrotterPlan:
    order: str
    terms: tuple[TrotterTerm, ...]
    steps: int
    tau: float

    @property
    def total_time(self) -> float:
        return self.steps * self.tau


def _is_local(p: PauliString) -> bool:
    s = p.support
    n = p.n_qubits
    return len(s) <= 1 or (len(s) == 2 and (s[1] - s[0] == 1 or (s[0] == 0 and s[1] == n - 1)))


def trotter_sequence(h: Hamiltonian, tau: float, order: str = "first",
                     kind: TimeKind | str = TimeKind.REAL) -> list[TrotterTerm]:
    """Ordered factors of one step: two-site terms, then one-site terms.

    Second order wraps the one-site group between two half-coefficient copies
    of the two-site group.
    """
    kind = TimeKind(kind)
    bad = [str(p) for _, p in h.terms if not _is_local(p)]
    if bad:
        raise ValueError(f"terms are not one-site or nearest-neighbour: {bad}")
    pairs = [(c, p) for c, p in h.terms if len(p.support) == 2]
    singles = [(c, p) for c, p in h.terms if len(p.support) < 2]
    if order == "first":
        return [TrotterTerm(c, p, tau, kind) for c, p in pairs + singles]
    if order == "second":
        half = [TrotterTerm(c / 2, p, tau, kind) for c, p in pairs]
        return half + [TrotterTerm(c, p, tau, kind) for c, p in singles] + half
    raise ValueError(f"order must be 'first' or 'second', got {order!r}")


def trotter_plan(h: Hamiltonian, t: float, tau: float, order: str = "first",
                 kind: TimeKind | str = TimeKind.REAL) -> TrotterPlan:
    steps = int(round(t / tau))
    if steps < 0 or abs(steps * tau - t) > 1e-12 * max(1.0, abs(t)):
        raise ValueError(f"total time {t} is not an integer multiple of tau={tau}")
    return TrotterPlan(order, tuple(trotter_sequence(h, tau, order, kind)), steps, tau)


def trotter_product_state(h: Hamiltonian, state: np.ndarray, t: float, tau: float,
                          order: str = "first") -> np.ndarray:
    """Pure product-formula evolution (no variational layer)."""
    from .simcore import exp_pauli_action

    plan = trotter_plan(h, t, tau, order)
    for _ in range(plan.steps):
        for term in plan.terms:
            state = exp_pauli_action(term, state)
    return state


def effective_tau(term: TrotterTerm, s: Strategy, n_blocks: int) -> float:
    """Per-replacement time step; only real time is divided."""
    if term.kind is TimeKind.IMAGINARY or s.kind == "cone":
        return term.tau
    if s.kind == "block":
        return term.tau / (s.sweeps * n_blocks)
    return term.tau / (s.sweeps * n_blocks * N_PARAMS)


def step_strategy(prev: Ansatz, a: Ansatz, term: TrotterTerm, s: Strategy,
                  trace: list | None = None) -> Ansatz:
    """Optimise the cone of ``term`` with strategy ``s``; returns a new ansatz.

    cone: all cone parameters against the frozen ``prev``.
    block: the reference becomes the current state before each block.
    angle: the reference becomes the current state before each angle.
    """
    if s.kind == "cone":
        return sweep_cone(prev, a, term, s.sweeps, trace)[0]
    cone, circ = cone_circuit(a, term.sites)
    lt = local_term(term, cone.qubits).with_tau(effective_tau(term, s, len(cone.blocks)))
    params = cone_params(a, cone)
    if s.kind == "block":
        ref = circ.run(cone_params(prev, cone))
        gates_per_block = len(circ.gates) // len(cone.blocks)
        for _ in range(s.sweeps):
            for b in range(len(cone.blocks)):
                lo = b * gates_per_block
                coordinate_pass(circ, params, target_bra(lt, ref), lo, lo + gates_per_block, trace)
                ref = circ.run(params)
    else:
        for _ in range(s.sweeps):
            angle_pass(circ, params, lt, trace)
    out = a.copy()
    set_cone_params(out, cone, params)
    return out


@dataclass
class RunRecord:
    """Per-step rows plus run metadata.

    ``wall`` is kept in memory and in the sidecar only, so CSV files are
    byte-identical for identical configurations.
    """

    rows: list[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def columns(self) -> list[str]:
        cols = []
        for r in self.rows:
            cols += [k for k in r if k not in cols and k != "wall"]
        return cols

    def column(self, name: str) -> np.ndarray:
        return np.array([r.get(name, np.nan) for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = self.columns
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            w.writerow([_fmt(r.get(c, "")) for c in cols])
        return buf.getvalue()

    def write(self, csv_path, meta_path=None) -> None:
        csv_path = Path(csv_path)
        csv_path.write_text(self.to_csv())
        meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".json")
        meta = dict(self.meta)
        meta["wall_seconds"] = [r.get("wall") for r in self.rows]
        meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=str))


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _schedule(t, tau, schedule):
    if schedule is not None:
        return [(int(n), float(dt)) for n, dt in schedule]
    if t is None or tau is None:
        raise ValueError("give either (t, tau) or a schedule")
    steps = int(round(t / tau))
    if steps < 0 or abs(steps * tau - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"total time {t} is not an integer multiple of tau={tau}")
    return [(steps, float(tau))]


def evolve(a: Ansatz, h: Hamiltonian, t: float | None = None, tau: float | None = None,
           order: str = "first", strategy: Strategy = Strategy(), kind: TimeKind | str = TimeKind.REAL,
           oracle: bool = False, schedule: Sequence[tuple[int, float]] | None = None,
           checkpoint: str | Path | None = None, resume: bool = False,
           initial_state: np.ndarray | None = None) -> RunRecord:
    """Run the variational evolution and log one row per Trotter step.

    ``schedule`` is a list of ``(steps, tau)`` segments (used instead of
    ``t``/``tau``). With ``checkpoint`` the ansatz and step index are saved
    after every step; ``resume`` restarts from that file. ``initial_state``
    is the oracle's starting point (defaults to the prepared input ansatz).
    """
    kind = TimeKind(kind)
    if h.n_qubits != a.n_qubits:
        raise ValueError(f"Hamiltonian on {h.n_qubits} qubits, ansatz has {a.n_qubits}")
    segments = _schedule(t, tau, schedule)
    a = a.copy()
    psi0 = prepare_state(a) if initial_state is None else initial_state
    start = 0
    if resume and checkpoint and Path(checkpoint).exists():
        ck = json.loads(Path(checkpoint).read_text())
        a = Ansatz.from_dict(ck["ansatz"])
        start = ck["step"]
        psi0 = np.array(ck["psi0_re"]) + 1j * np.array(ck["psi0_im"])
    e_gs = h.ground_energy() if oracle and kind is TimeKind.IMAGINARY else None
    rec = RunRecord(meta={"n_qubits": a.n_qubits, "depth": a.depth, "boundary": a.boundary,
                          "strategy": strategy.kind, "sweeps": strategy.sweeps,
                          "order": order, "kind": kind.value, "schedule": segments,
                          "ground_energy": e_gs})
    clock = time.perf_counter()

    def log(step, time_, dt, objs):
        row = {"step": step, "time": time_, "tau": dt, "energy": energy(a, h)}
        if oracle:
            if kind is TimeKind.REAL:
                exact = exact_evolve(h, psi0, time_, kind)
            else:
                exact = exact_evolve(h, psi0, time_, kind)
            row["distance_sq"] = distance_sq(prepare_state(a), exact)
            if e_gs is not None:
                row["rel_energy_error"] = (row["energy"] - e_gs) / abs(e_gs)
        if objs:
            row["min_objective"] = min(objs)
            row.update({f"obj_{k}": v for k, v in enumerate(objs)})
        row["wall"] = time.perf_counter() - clock
        rec.rows.append(row)

    step, time_ = 0, 0.0
    if start == 0:
        log(0, 0.0, 0.0, None)
    for n_steps, dt in segments:
        terms = trotter_sequence(h, dt, order, kind)
        for _ in range(n_steps):
            step += 1
            time_ = round(time_ + dt, 12)
            if step <= start:
                continue
            objs = []
            for term in terms:
                prev = a
                a = step_strategy(prev, a, term, strategy)
                objs.append(objective(prev, a, term))
            log(step, time_, dt, objs)
            if checkpoint:
                Path(checkpoint).write_text(json.dumps({
                    "step": step, "ansatz": a.to_dict(),
                    "psi0_re": psi0.real.tolist(), "psi0_im": psi0.imag.tolist()}))
    rec.meta["final_ansatz"] = a.to_dict()
    return rec


def final_ansatz(rec: RunRecord) -> Ansatz:
    return Ansatz.from_dict(rec.meta["final_ansatz"])


def trotter_error_curve(h: Hamiltonian, t: float, taus: Sequence[float], order: str = "first",
                        sweeps: int = 6, depth: int = 2, boundary: str = "open") -> list[tuple[float, float]]:
    """Final squared distance to the exact state versus time step, from |0...0>."""
    out = []
    for tau in taus:
        a = Ansatz.identity(h.n_qubits, depth, boundary)
        rec = evolve(a, h, t, tau, order, Strategy("cone", sweeps), TimeKind.REAL, oracle=False)
        exact = exact_evolve(h, prepare_state(a), t, TimeKind.REAL)
        out.append((float(tau), distance_sq(prepare_state(final_ansatz(rec)), exact)))
    return out
