"""Hardware-efficient variational time evolution on a statevector simulator."""

__version__ = "0.1.0"

from .simcore import Hamiltonian, PauliString, TimeKind, TrotterTerm  # noqa: E402
from .ansatz import Ansatz, causal_cone, cone_expectation, energy, prepare_state  # noqa: E402
from .objective import coordinate_max, objective, sweep_cone  # noqa: E402
from .evolution import RunRecord, Strategy, evolve, ising_hamiltonian, step_strategy, trotter_sequence  # noqa: E402

__all__ = [
    "Ansatz", "Hamiltonian", "PauliString", "RunRecord", "Strategy", "TimeKind", "TrotterTerm",
    "causal_cone", "cone_expectation", "coordinate_max", "energy", "evolve", "ising_hamiltonian",
    "objective", "prepare_state", "step_strategy", "sweep_cone", "trotter_sequence",
]
