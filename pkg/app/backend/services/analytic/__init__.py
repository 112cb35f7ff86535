"""Closed-form LZS quantities."""

from .landau_zener import (
    LZ_CALIBRATED_PREFACTOR,
    LZ_PARTITION_PREFACTOR,
    characteristic_sweep_rate,
    lz_probability,
)
from .phase import (
    EXTREME_AMPLITUDE_RATIO,
    LARGE_AMPLITUDE_RATIO,
    PhaseResult,
    amplitude_regime,
    phase_closed_form,
    phase_extreme_amplitude,
    phase_large_amplitude,
    phase_quadrature,
    phase_rate,
    population_from_phase,
    predicted_population_map,
    stueckelberg_phase,
)

__all__ = [
    "EXTREME_AMPLITUDE_RATIO",
    "LARGE_AMPLITUDE_RATIO",
    "LZ_CALIBRATED_PREFACTOR",
    "LZ_PARTITION_PREFACTOR",
    "PhaseResult",
    "amplitude_regime",
    "phase_closed_form",
    "characteristic_sweep_rate",
    "lz_probability",
    "phase_extreme_amplitude",
    "phase_large_amplitude",
    "phase_quadrature",
    "phase_rate",
    "population_from_phase",
    "predicted_population_map",
    "stueckelberg_phase",
]
