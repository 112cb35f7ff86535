"""Flux-qubit spectrum model and triangle drive."""

from .hamiltonian import (
    adiabatic_levels,
    detuning_at,
    effective_width,
    hamiltonian_at,
    sweep_rate,
    triangle_signal,
)
from .models import (
    DEFAULT_SECOND_CROSSING,
    Anticrossing,
    FluxDetuning,
    QubitSpectrum,
    TrianglePulse,
)

__all__ = [
    "DEFAULT_SECOND_CROSSING",
    "Anticrossing",
    "FluxDetuning",
    "QubitSpectrum",
    "TrianglePulse",
    "adiabatic_levels",
    "detuning_at",
    "effective_width",
    "hamiltonian_at",
    "sweep_rate",
    "triangle_signal",
]
