"""Column FFTs of an interference map and the slope estimates built on them."""

from __future__ import annotations

import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy import signal

from app.backend.services.analytic import amplitude_regime
from app.backend.services.errors import FitError, ValidationError
from app.backend.services.qubit_model import TrianglePulse
from app.backend.services.sweep import InterferenceMap, extract_column, nearest_index

from .models import AnalysisOptions, ColumnSpectrum

logger = logging.getLogger(__name__)

MIN_COLUMN_SAMPLES = 16
# relative spread of tau steps accepted as uniform (CSV keeps 9 digits)
UNIFORM_STEP_TOL = 1e-6


def uniform_step(tau: np.ndarray) -> float:
    steps = np.diff(tau)
    if steps.size == 0 or np.any(steps <= 0):
        raise ValidationError("tau samples must be strictly increasing")
    dt = float(np.mean(steps))
    if np.max(np.abs(steps - dt)) > UNIFORM_STEP_TOL * dt:
        raise ValidationError("column FFT needs a uniform tau grid")
    return dt


def _parabolic_offset(mag: np.ndarray, k: int) -> float:
    """Vertex offset of the parabola through bins k-1, k, k+1."""
    if k <= 0 or k >= mag.size - 1:
        return 0.0
    left, centre, right = mag[k - 1], mag[k], mag[k + 1]
    denom = left - 2.0 * centre + right
    if denom == 0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / denom, -0.5, 0.5))


def column_spectrum(
    tau: np.ndarray,
    values: np.ndarray,
    phi_f: float = float("nan"),
    window: str = "flat",
    pad_factor: int = 1,
) -> ColumnSpectrum:
    """Dominant angular frequency of a uniformly sampled W_11(tau) series.

    The series is mean-subtracted, optionally windowed and zero-padded; the
    strongest non-DC bin is refined by 3-point parabolic interpolation on the
    magnitude spectrum.
    """
    tau = np.asarray(tau, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    n = tau.size
    if n < MIN_COLUMN_SAMPLES:
        raise ValidationError(
            f"column FFT needs >= {MIN_COLUMN_SAMPLES} samples, got {n}"
        )
    dt = uniform_step(tau)
    resolution = 2.0 * math.pi / (tau[-1] - tau[0])

    x = values - np.mean(values)
    if np.max(np.abs(x)) <= 1e-12:
        return ColumnSpectrum(phi_f, 0.0, 0.0, resolution)

    taper = np.ones(n) if window == "flat" else signal.get_window(window, n)
    n_fft = n * pad_factor
    mag = np.abs(np.fft.rfft(x * taper, n_fft))
    k = 1 + int(np.argmax(mag[1:]))
    offset = _parabolic_offset(mag, k)
    omega = 2.0 * math.pi * (k + offset) / (n_fft * dt)
    power = 2.0 * float(mag[k]) ** 2 / float(np.sum(taper)) ** 2
    return ColumnSpectrum(phi_f, max(omega, 0.0), power, resolution)


def column_fft(
    interference_map: InterferenceMap,
    phi_f: float,
    options: Optional[AnalysisOptions] = None,
) -> ColumnSpectrum:
    options = options or AnalysisOptions()
    tau, values = extract_column(interference_map, phi_f)
    axis = interference_map.phi_f_values
    node = axis[nearest_index(axis, phi_f)]
    return column_spectrum(
        tau, values, float(node), options.fft_window, options.pad_factor
    )


def slope_from_period(period: float, phi_f: float, phi_i: float) -> float:
    """l = (2*pi/T) * (Phi_f - Phi_i) / Phi_f^2 (large-amplitude inversion)."""
    if not period > 0:
        raise ValidationError("period must be > 0")
    if not phi_f > 0 or not phi_i < phi_f:
        raise ValidationError("need Phi_i < 0 < Phi_f relative to the crossing")
    return 2.0 * math.pi / period * (phi_f - phi_i) / (phi_f * phi_f)


def check_slope_regime(
    slope: float, gap: float, phi_f: float, phi_i: float, tau: float = 1.0
) -> None:
    """FitError unless (slope, gap, Phi_f) is in the large-amplitude regime."""
    flags = amplitude_regime(slope, gap, TrianglePulse(phi_i, phi_f, tau))
    if not flags.large_amplitude:
        raise FitError(
            f"Phi_f={phi_f:g} mPhi0 is outside the large-amplitude regime "
            f"(l*Phi_f/Delta = {slope * phi_f / gap:.3g} with l={slope:.3g}, "
            f"Delta={gap:.3g}); pick a larger reference column"
        )


def fit_slope(
    interference_map: InterferenceMap,
    phi_f_ref: float,
    options: Optional[AnalysisOptions] = None,
    location: float = 0.0,
) -> float:
    """Branch slope from the dominant fringe period of one column.

    ``location`` re-references the column to an anticrossing away from 0. When
    ``options.gap_hint`` is set the estimate is refused outside the
    large-amplitude regime.
    """
    options = options or AnalysisOptions()
    spectrum = column_fft(interference_map, phi_f_ref, options)
    phi_f = spectrum.phi_f - location
    phi_i = interference_map.phi_i - location
    if phi_f <= 0 or phi_i >= 0:
        raise FitError(
            f"column Phi_f={spectrum.phi_f:g} does not cross the anticrossing "
            f"at {location:g} mPhi0"
        )
    if spectrum.dominant_omega <= 0:
        raise FitError(f"column Phi_f={spectrum.phi_f:g} shows no oscillation")

    slope = slope_from_period(spectrum.period, phi_f, phi_i)
    if options.gap_hint is not None and options.gap_hint > 0:
        check_slope_regime(slope, options.gap_hint, phi_f, phi_i)
    elif options.gap_hint is None:
        logger.warning("slope fit: no gap hint, amplitude regime not checked")
    logger.info(
        f"slope fit at Phi_f={spectrum.phi_f:.6g}: T={spectrum.period:.6g} ns, "
        f"omega={spectrum.dominant_omega:.6g} rad/ns -> l={slope:.6g}"
    )
    return slope


def linear_fit(x: np.ndarray, y: np.ndarray) -> Tuple[float, float, float]:
    """Least-squares line; returns (slope, intercept, rms residual)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(residual**2)))


def column_spectra(
    interference_map: InterferenceMap,
    phi_f_min: float = -math.inf,
    options: Optional[AnalysisOptions] = None,
) -> List[ColumnSpectrum]:
    options = options or AnalysisOptions()
    tau = interference_map.tau_values
    return [
        column_spectrum(
            tau,
            interference_map.column(j),
            float(phi_f),
            options.fft_window,
            options.pad_factor,
        )
        for j, phi_f in enumerate(interference_map.phi_f_values)
        if phi_f >= phi_f_min
    ]


def fft_linearity(
    interference_map: InterferenceMap,
    phi_f_min: float,
    options: Optional[AnalysisOptions] = None,
) -> Tuple[float, float]:
    """Slope of 2*pi/T against Phi_f over columns with Phi_f >= phi_f_min.

    Returns (slope, rms residual of the line).
    """
    spectra = column_spectra(interference_map, phi_f_min, options)
    if len(spectra) < 4:
        raise FitError(
            f"fft_linearity needs >= 4 columns with Phi_f >= {phi_f_min:g}, "
            f"got {len(spectra)}"
        )
    phi_f = np.array([s.phi_f for s in spectra])
    omega = np.array([s.dominant_omega for s in spectra])
    slope, intercept, rms = linear_fit(phi_f, omega)
    logger.info(
        f"fft linearity over {len(spectra)} columns: slope={slope:.6g}, "
        f"intercept={intercept:.6g}, rms={rms:.3g}"
    )
    return slope, rms
