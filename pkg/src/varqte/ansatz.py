"""Brickwork ansatz of 15-parameter two-qubit blocks and its causal cones."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable

import numpy as np

from .circuit import Circuit, Gate
from .simcore import Hamiltonian, PauliString, pauli_expectation

N_PARAMS = 15
SCHEMA = "varqte.ansatz/1"

# Gate order inside a block. Local qubit 0 is the first qubit of the pair.
# Rotations are exp(-i theta P); slots are numbered in this order.
BLOCK_GATES: tuple[tuple[str, tuple[int, ...]], ...] = (
    ("rz", (0,)), ("rx", (0,)), ("rz", (0,)),
    ("rz", (1,)), ("rx", (1,)), ("rz", (1,)),
    ("cx", (0, 1)),
    ("rx", (0,)), ("rz", (1,)),
    ("cx", (0, 1)),
    ("rx", (0,)), ("rz", (0,)), ("rx", (0,)),
    ("rx", (1,)), ("rz", (1,)),
    ("cx", (0, 1)),
    ("rx", (0,)), ("rz", (0,)),
)

# Angles giving the identity block up to the phase e^{-i pi/4}. Located with
# solve_identity_angles() followed by snapping to multiples of pi/4.
IDENTITY_ANGLES = np.pi / 4 * np.array([1, 0, 0, 0, 1, 0, -1, 0, 1, -1, -1, 0, 0, 1, 0], dtype=float)


def wrap_angle(x):
    """Map angles into (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)


def _block_circuit() -> Circuit:
    gates, slot = [], 0
    for name, qubits in BLOCK_GATES:
        if name == "cx":
            gates.append(Gate(name, qubits))
        else:
            gates.append(Gate(name, qubits, slot))
            slot += 1
    return Circuit(2, tuple(gates), slot)


_BLOCK = _block_circuit()


def block_unitary(angles) -> np.ndarray:
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (N_PARAMS,):
        raise ValueError(f"a block takes {N_PARAMS} angles, got shape {angles.shape}")
    if not np.all(np.isfinite(angles)):
        raise ValueError("non-finite block angle")
    return _BLOCK.unitary(angles)


def solve_identity_angles(seed: int = 0, restarts: int = 20) -> np.ndarray:
    """Numerically find angles with ``block_unitary = e^{i phi} I``."""
    from scipy.optimize import least_squares

    def resid(x):
        u = block_unitary(x)
        d = u - np.trace(u) / 4 * np.eye(4)
        return np.concatenate([d.real.ravel(), d.imag.ravel()])

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        sol = least_squares(resid, rng.uniform(-np.pi, np.pi, N_PARAMS), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if best is None or sol.cost < best.cost:
            best = sol
        if best.cost < 1e-24:
            break
    return wrap_angle(best.x)


@dataclass(frozen=True)
class BlockId:
    column: int
    row: int
    qubits: tuple[int, int]


@lru_cache(maxsize=None)
def block_layout(n_qubits: int, depth: int, boundary: str) -> tuple[BlockId, ...]:
    """Blocks in application order (column-major, then row).

    Odd columns pair (2r-2, 2r-1); even columns pair (2r-1, 2r mod n), where
    the wrap-around pair (n-1, 0) only exists for periodic boundaries.
    """
    out = []
    for col in range(1, depth + 1):
        if col % 2:
            rows = range(1, n_qubits // 2 + 1)
            out += [BlockId(col, r, (2 * r - 2, 2 * r - 1)) for r in rows]
        else:
            last = n_qubits // 2 if boundary == "periodic" else n_qubits // 2 - 1
            out += [BlockId(col, r, (2 * r - 1, (2 * r) % n_qubits)) for r in range(1, last + 1)]
    return tuple(out)


@dataclass
class Ansatz:
    n_qubits: int
    depth: int
    boundary: str = "open"
    angles: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.n_qubits < 4 or self.n_qubits % 2:
            raise ValueError(f"n_qubits must be even and >= 4, got {self.n_qubits}")
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")
        shape = (len(self.blocks), N_PARAMS)
        if self.angles is None:
            self.angles = np.tile(IDENTITY_ANGLES, (shape[0], 1))
        self.angles = wrap_angle(np.array(self.angles, dtype=float).reshape(shape))

    @property
    def blocks(self) -> tuple[BlockId, ...]:
        return block_layout(self.n_qubits, self.depth, self.boundary)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @classmethod
    def identity(cls, n_qubits: int, depth: int = 2, boundary: str = "open") -> "Ansatz":
        return cls(n_qubits, depth, boundary)

    @classmethod
    def random(cls, n_qubits: int, depth: int = 2, boundary: str = "open",
               rng: np.random.Generator | int | None = None) -> "Ansatz":
        rng = np.random.default_rng(rng)
        nb = len(block_layout(n_qubits, depth, boundary))
        return cls(n_qubits, depth, boundary, rng.uniform(-np.pi, np.pi, (nb, N_PARAMS)))

    def copy(self) -> "Ansatz":
        return Ansatz(self.n_qubits, self.depth, self.boundary, self.angles.copy())

    def to_dict(self) -> dict:
        return {"schema": SCHEMA, "n_qubits": self.n_qubits, "depth": self.depth,
                "boundary": self.boundary, "angles": self.angles.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Ansatz":
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported ansatz schema {d.get('schema')!r}")
        return cls(d["n_qubits"], d["depth"], d["boundary"], np.array(d["angles"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "Ansatz":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class CausalCone:
    blocks: tuple[int, ...]  # indices into the ansatz layout, application order
    qubits: tuple[int, ...]  # compact register order (chain-contiguous when possible)

    @property
    def width(self) -> int:
        return len(self.qubits)

    @property
    def local(self) -> dict[int, int]:
        return {q: i for i, q in enumerate(self.qubits)}


def _validate_support(n: int, boundary: str, support: tuple[int, ...]):
    if not support or len(support) > 2 or any(not 0 <= q < n for q in support):
        raise ValueError(f"support {support} must be one qubit or a nearest-neighbour pair")
    if len(support) == 2:
        a, b = support
        wrap = boundary == "periodic" and {a, b} == {0, n - 1}
        if b - a != 1 and not wrap:
            raise ValueError(f"support {support} is not a nearest-neighbour pair")


@lru_cache(maxsize=None)
def _cone(n: int, depth: int, boundary: str, support: tuple[int, ...]):
    _validate_support(n, boundary, support)
    layout = block_layout(n, depth, boundary)
    reach = set(support)
    members = []
    for i in range(len(layout) - 1, -1, -1):
        if reach & set(layout[i].qubits):
            members.append(i)
            reach |= set(layout[i].qubits)
    qs = sorted(reach)
    gaps = [i for i in range(len(qs) - 1) if qs[i + 1] - qs[i] > 1]
    if gaps:
        qs = qs[gaps[-1] + 1:] + qs[:gaps[-1] + 1]
    cone = CausalCone(tuple(sorted(members)), tuple(qs))
    return cone, _compile(layout, cone)


def _compile(layout, cone: CausalCone) -> Circuit:
    local = cone.local
    gates = []
    for k, b in enumerate(cone.blocks):
        pair = [local[q] for q in layout[b].qubits]
        slot = k * N_PARAMS
        for name, qubits in BLOCK_GATES:
            mapped = tuple(pair[q] for q in qubits)
            if name == "cx":
                gates.append(Gate(name, mapped))
            else:
                gates.append(Gate(name, mapped, slot))
                slot += 1
    return Circuit(cone.width, tuple(gates), len(cone.blocks) * N_PARAMS)


def causal_cone(a: Ansatz, support: Iterable[int]) -> CausalCone:
    return _cone(a.n_qubits, a.depth, a.boundary, tuple(sorted(set(support))))[0]


def cone_circuit(a: Ansatz, support: Iterable[int]) -> tuple[CausalCone, Circuit]:
    return _cone(a.n_qubits, a.depth, a.boundary, tuple(sorted(set(support))))


@lru_cache(maxsize=None)
def _full_circuit(n: int, depth: int, boundary: str) -> Circuit:
    layout = block_layout(n, depth, boundary)
    return _compile(layout, CausalCone(tuple(range(len(layout))), tuple(range(n))))


def full_circuit(a: Ansatz) -> Circuit:
    return _full_circuit(a.n_qubits, a.depth, a.boundary)


def cone_params(a: Ansatz, cone: CausalCone) -> np.ndarray:
    return a.angles[list(cone.blocks)].ravel().copy()


def set_cone_params(a: Ansatz, cone: CausalCone, params: np.ndarray) -> None:
    a.angles[list(cone.blocks)] = wrap_angle(params).reshape(len(cone.blocks), N_PARAMS)


def prepare_state(a: Ansatz) -> np.ndarray:
    return full_circuit(a).run(a.angles.ravel())


def cone_state(a: Ansatz, support: Iterable[int]) -> tuple[CausalCone, np.ndarray]:
    cone, circ = cone_circuit(a, support)
    return cone, circ.run(cone_params(a, cone))


def cone_expectation(a: Ansatz, p: PauliString) -> float:
    """Expectation of ``p`` computed on its causal-cone register only."""
    if p.n_qubits != a.n_qubits:
        raise ValueError(f"observable on {p.n_qubits} qubits, ansatz has {a.n_qubits}")
    if not p.support:
        return 1.0
    cone, psi = cone_state(a, p.support)
    return pauli_expectation(psi, p.restrict(cone.qubits))


def grow_depth(a: Ansatz) -> Ansatz:
    """Append a column of identity blocks."""
    grown = Ansatz(a.n_qubits, a.depth + 1, a.boundary)
    grown.angles[: a.n_blocks] = a.angles
    return grown


def energy(a: Ansatz, h: Hamiltonian) -> float:
    if h.n_qubits != a.n_qubits:
        raise ValueError(f"Hamiltonian on {h.n_qubits} qubits, ansatz has {a.n_qubits}")
    return float(sum(c * cone_expectation(a, p) for c, p in h.terms))
