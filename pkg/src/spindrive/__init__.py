"""Pulse design and exact validation for periodically driven spin systems."""

from .engine import (
    ConditionSolution,
    EffectiveModel,
    cosine_ising_domain,
    cosine_response_closed,
    effective_hamiltonian,
    response_series,
    solution_surface,
    solve_condition,
    square_ising_domain,
    square_response_closed,
)
from .models import CouplingGraph, SpinModel, bipartite_gauge_flip, build_hamiltonian, dipolar_couplings
from .pauli import PauliString, SpinOperator, commutator, multiply, nested_commutator, to_dense
from .pulses import (
    Convention,
    MomentTable,
    PulseProfile,
    PulseShape,
    Subcycle,
    compute_moments,
    is_factorizable,
    kick_operator,
    pulse_integral,
    verify_cyclicity,
)
from .sim import SimConfig, Trajectory, compare_frames, dressed_observable, evolve_effective, evolve_exact

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "PauliString",
    "SpinOperator",
    "multiply",
    "commutator",
    "nested_commutator",
    "to_dense",
    "CouplingGraph",
    "SpinModel",
    "dipolar_couplings",
    "build_hamiltonian",
    "bipartite_gauge_flip",
    "Convention",
    "PulseShape",
    "Subcycle",
    "PulseProfile",
    "MomentTable",
    "pulse_integral",
    "kick_operator",
    "compute_moments",
    "verify_cyclicity",
    "is_factorizable",
    "EffectiveModel",
    "ConditionSolution",
    "effective_hamiltonian",
    "response_series",
    "cosine_response_closed",
    "square_response_closed",
    "solve_condition",
    "solution_surface",
    "cosine_ising_domain",
    "square_ising_domain",
    "SimConfig",
    "Trajectory",
    "evolve_exact",
    "evolve_effective",
    "compare_frames",
    "dressed_observable",
]
