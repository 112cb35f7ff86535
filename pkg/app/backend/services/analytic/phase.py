"""Closed-form Stueckelberg phase of a triangle pulse through one anticrossing.

All functions assume the anticrossing sits at dPhi = 0; use
``TrianglePulse.shifted(location)`` for a crossing elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy import integrate

from app.backend.services.errors import AnticrossingNotCrossedError, ValidationError
from app.backend.services.qubit_model import (
    QubitSpectrum,
    TrianglePulse,
    adiabatic_levels,
    detuning_at,
    sweep_rate,
)

# l*Phi_f/Delta above which the large-amplitude limit is trusted
LARGE_AMPLITUDE_RATIO = 4.0
# Phi_f/|Phi_i| above which the extreme-amplitude limit is trusted
EXTREME_AMPLITUDE_RATIO = 8.0

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class PhaseResult:
    phi: float
    large_amplitude: bool
    extreme_amplitude: bool


def _require_crossing(pulse: TrianglePulse) -> None:
    if pulse.phi_f <= 0:
        raise AnticrossingNotCrossedError(pulse.phi_f)
    if pulse.phi_i >= 0:
        raise ValidationError(
            f"phi_i={pulse.phi_i:g} mPhi0 must lie left of the anticrossing at 0"
        )


def amplitude_regime(slope: float, gap: float, pulse: TrianglePulse) -> PhaseResult:
    """Regime flags only (phi left at 0)."""
    ratio = np.inf if gap == 0 else slope * pulse.phi_f / gap
    large = bool(ratio >= LARGE_AMPLITUDE_RATIO)
    extreme = large and pulse.phi_f >= EXTREME_AMPLITUDE_RATIO * abs(pulse.phi_i)
    return PhaseResult(phi=0.0, large_amplitude=large, extreme_amplitude=extreme)


def phase_closed_form(
    slope: float, gap: ArrayLike, phi_f: float, width: ArrayLike
) -> ArrayLike:
    """Closed-form phase

        width * (sqrt(D^2 + (l Phi_f)^2) + D^2/(l Phi_f) * asinh(l Phi_f/D))

    ``gap`` and ``width`` broadcast; Delta = 0 reduces to width * l * Phi_f.
    """
    drive = slope * phi_f
    gap = np.asarray(gap, dtype=np.float64)
    safe = np.where(gap > 0, gap, 1.0)
    tail = np.where(gap > 0, (gap * gap / drive) * np.arcsinh(drive / safe), 0.0)
    return width * (np.hypot(gap, drive) + tail)


def stueckelberg_phase(slope: float, gap: float, pulse: TrianglePulse) -> PhaseResult:
    """Phase accumulated between the two passages of the anticrossing."""
    _require_crossing(pulse)
    if slope <= 0 or gap < 0:
        raise ValidationError("slope must be > 0 and gap >= 0")
    width = pulse.phi_f * pulse.tau / (pulse.phi_f - pulse.phi_i)
    flags = amplitude_regime(slope, gap, pulse)
    return PhaseResult(
        phi=float(phase_closed_form(slope, gap, pulse.phi_f, width)),
        large_amplitude=flags.large_amplitude,
        extreme_amplitude=flags.extreme_amplitude,
    )


def phase_rate(slope: float, gap: float, phi_f: float, phi_i: float) -> float:
    """dphi/dtau at fixed amplitude (phi is linear in tau)."""
    return stueckelberg_phase(slope, gap, TrianglePulse(phi_i, phi_f, 1.0)).phi


def phase_quadrature(
    slope: float, gap: float, pulse: TrianglePulse, rel_tol: float = 1e-12
) -> float:
    """Direct quadrature of nu_1 - nu_0 over the time spent right of the crossing.

    Independent of the closed form: the level splitting comes from
    diagonalizing the instantaneous Hamiltonian.
    """
    _require_crossing(pulse)
    spectrum = QubitSpectrum.two_level(slope, gap)
    k = sweep_rate(pulse)
    t_enter = -pulse.phi_i / k
    t_leave = pulse.tau - t_enter

    def splitting(t: float) -> float:
        levels = adiabatic_levels(spectrum, detuning_at(pulse, t))
        return float(levels[1] - levels[0])

    value, _ = integrate.quad(
        splitting,
        t_enter,
        t_leave,
        points=[0.5 * pulse.tau],
        epsabs=0.0,
        epsrel=rel_tol,
        limit=200,
    )
    return float(value)


def phase_large_amplitude(slope: float, pulse: TrianglePulse) -> float:
    return slope * pulse.phi_f**2 * pulse.tau / (pulse.phi_f - pulse.phi_i)


def phase_extreme_amplitude(slope: float, pulse: TrianglePulse) -> float:
    return slope * pulse.phi_f * pulse.tau


def population_from_phase(phi: ArrayLike) -> ArrayLike:
    """W_11 = (1 + cos phi)/2."""
    return 0.5 * (1.0 + np.cos(phi))


def predicted_population_map(
    slope: float,
    gap: float,
    phi_f_values: Sequence[float],
    tau_values: Sequence[float],
    phi_i: float,
    location: float = 0.0,
) -> np.ndarray:
    """Closed-form interference map, shape (len(tau_values), len(phi_f_values)).

    Columns that never reach the anticrossing stay at 1.
    """
    phi_f = np.asarray(phi_f_values, dtype=np.float64) - location
    tau = np.asarray(tau_values, dtype=np.float64)
    shifted_i = phi_i - location
    if shifted_i >= 0:
        raise ValidationError("phi_i must lie left of the anticrossing")
    values = np.ones((tau.size, phi_f.size), dtype=np.float64)
    crossed = phi_f > 0
    if np.any(crossed):
        pf = phi_f[crossed]
        rates = np.array(
            [phase_closed_form(slope, gap, p, p / (p - shifted_i)) for p in pf]
        )
        values[:, crossed] = population_from_phase(np.outer(tau, rates))
    return values
