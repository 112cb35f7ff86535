"""Density-matrix propagation under the triangle drive."""

from .integrator import (
    evolve,
    evolve_fixed_rk4,
    evolve_hamiltonian,
    pulse_hamiltonian,
    single_passage_probability,
)
from .models import (
    ADAPTIVE,
    FIXED_RK4,
    EvolutionResult,
    StateDiagnostics,
    StepperConfig,
)
from .state import diagnose, initial_state, liouville_rhs
from .trajectory import write_trajectory_csv

__all__ = [
    "ADAPTIVE",
    "FIXED_RK4",
    "EvolutionResult",
    "StateDiagnostics",
    "StepperConfig",
    "diagnose",
    "evolve",
    "evolve_fixed_rk4",
    "evolve_hamiltonian",
    "initial_state",
    "liouville_rhs",
    "pulse_hamiltonian",
    "single_passage_probability",
    "write_trajectory_csv",
]
