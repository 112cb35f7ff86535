from __future__ import annotations

import numpy as np

from app.backend.services.errors import (
    AnticrossingNotCrossedError,
    DomainError,
    ValidationError,
)

from .models import FluxDetuning, QubitSpectrum, TrianglePulse

# relative slack when checking 0 <= t <= tau
_TIME_EPS = 1e-12


def _check_time(pulse: TrianglePulse, t: float) -> float:
    t = float(t)
    slack = _TIME_EPS * pulse.tau
    if not (-slack <= t <= pulse.tau + slack):
        raise DomainError(f"t={t:g} ns outside pulse window [0, {pulse.tau:g}] ns")
    return min(max(t, 0.0), pulse.tau)


def sweep_rate(pulse: TrianglePulse) -> float:
    """k = 2(Phi_f - Phi_i)/tau in mPhi0/ns (signed)."""
    return 2.0 * (pulse.phi_f - pulse.phi_i) / pulse.tau


def triangle_signal(pulse: TrianglePulse, t: float) -> float:
    """Flux offset added on top of Phi_i at time ``t``.

    Rising ramp k*t up to tau/2, falling ramp k*(tau - t) afterwards, so the
    signal is continuous, peaks at Phi_f - Phi_i and returns to zero at tau.
    """
    t = _check_time(pulse, t)
    k = sweep_rate(pulse)
    half = 0.5 * pulse.tau
    if t <= half:
        return k * t
    return k * (pulse.tau - t)


def detuning_at(pulse: TrianglePulse, t: float) -> FluxDetuning:
    return pulse.phi_i + triangle_signal(pulse, t)


def effective_width(pulse: TrianglePulse) -> float:
    """tau*: time between the two passages of the anticrossing at dPhi = 0."""
    if pulse.phi_f <= 0:
        raise AnticrossingNotCrossedError(pulse.phi_f)
    if pulse.phi_i >= 0:
        raise ValidationError(
            f"phi_i={pulse.phi_i:g} mPhi0 must lie left of the anticrossing at 0"
        )
    return pulse.phi_f * pulse.tau / (pulse.phi_f - pulse.phi_i)


def hamiltonian_at(spectrum: QubitSpectrum, detuning: FluxDetuning) -> np.ndarray:
    """Instantaneous reduced Hamiltonian (rad/ns), real symmetric dim x dim."""
    a, b, coupling = spectrum.linear_form()
    h = coupling.copy()
    h[np.diag_indices(spectrum.dim)] = a * float(detuning) + b
    return h


def adiabatic_levels(spectrum: QubitSpectrum, detuning: FluxDetuning) -> np.ndarray:
    return np.linalg.eigvalsh(hamiltonian_at(spectrum, detuning))
