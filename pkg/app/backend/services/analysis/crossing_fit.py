"""Anticrossing locations refined from the fringe rates of many columns.

The variance edge of the first fringe sits left of the true crossing by about
Delta/l, because the qubit already mixes before the drive reaches it. Fitting
the closed-form dphi/dtau to the dominant column frequencies pins the crossing
(together with a slope and gap) using every resolvable column.

A second branch coupled to the initial level bends the rate curve: past it the
initial level follows the parallel branch, so the phase density stops growing.
``fit_two_crossings`` fits that bend; ``fit_crossings`` keeps it only when it
explains the rates clearly better than a single crossing does.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import least_squares

from app.backend.services.analytic import phase_closed_form
from app.backend.services.errors import FitError
from app.backend.services.sweep import InterferenceMap

from .models import AnalysisOptions
from .spectral import column_spectra, linear_fit

logger = logging.getLogger(__name__)

_GAP_START = 1.0
_MIN_POWER_SHARE = 0.1
_MIN_PAD_FACTOR = 8
# Gauss-Legendre nodes of the phase-density integral
_QUADRATURE = leggauss(64)
# columns needed on each side of a fitted bend
_BEND_SIDE_COLUMNS = 2
_MIN_SEPARATION = 1e-3


@dataclass(frozen=True)
class CrossingFit:
    """Fringe-rate fit; the ``second_*`` fields are set by the two-branch fit."""

    location: float
    slope: float
    gap: float
    rms: float
    columns: int
    second_location: Optional[float] = None
    second_gap: Optional[float] = None


def fringe_rate_model(
    phi_f: np.ndarray, slope: float, gap: float, location: float, phi_i: float
) -> np.ndarray:
    """Closed-form dphi/dtau per column; 0 where the crossing is not reached."""
    shifted = np.asarray(phi_f, dtype=np.float64) - location
    crossed = shifted > 0
    safe = np.where(crossed, shifted, 1.0)
    width = safe / (safe - (phi_i - location))
    rates = phase_closed_form(slope, gap, safe, width)
    return np.where(crossed, rates, 0.0)


def _phase_density(
    u: np.ndarray, slope: float, gap: float, separation: float, second_gap: float
) -> np.ndarray:
    # 初期準位は第二の分岐と断熱的に混ざる (u は第一の交差点からの距離)
    half = 0.5 * (
        slope * (u + separation)
        - np.hypot(slope * (separation - u), second_gap)
    )
    return 2.0 * np.hypot(gap, half)


def two_crossing_rate_model(
    phi_f: np.ndarray,
    slope: float,
    gap: float,
    location: float,
    second_location: float,
    second_gap: float,
    phi_i: float,
) -> np.ndarray:
    """dphi/dtau per column with the initial level dressed by a second branch.

    The second branch (gap ``second_gap``) is passed adiabatically, so the phase
    density is the splitting between the dressed initial level and the first
    branch. With ``second_gap`` = 0 and the second crossing beyond ``phi_f``
    this is ``fringe_rate_model``.
    """
    phi_f = np.asarray(phi_f, dtype=np.float64)
    separation = max(second_location - location, _MIN_SEPARATION)
    # 着衣した準位が第一の分岐と交わる点
    onset = second_gap**2 / (4.0 * slope * slope * separation)
    reach = phi_f - location
    crossed = reach > onset
    length = np.where(crossed, reach - onset, 0.0)
    nodes, weights = _QUADRATURE
    u = onset + 0.5 * length[:, np.newaxis] * (nodes[np.newaxis, :] + 1.0)
    density = _phase_density(u, slope, gap, separation, second_gap)
    phase = 0.5 * length * (density @ weights)
    return np.where(crossed, phase / (phi_f - phi_i), 0.0)


def _fringe_columns(
    interference_map: InterferenceMap,
    edge: float,
    upper: Optional[float],
    options: AnalysisOptions,
) -> Tuple[np.ndarray, np.ndarray]:
    padded = replace(options, pad_factor=max(options.pad_factor, _MIN_PAD_FACTOR))
    tau = interference_map.tau_values
    span = float(tau[-1] - tau[0])
    spectra = [
        s
        for s in column_spectra(interference_map, edge, padded)
        if (upper is None or s.phi_f < upper)
        and s.dominant_omega * span >= 2.0 * math.pi * options.min_cycles
    ]
    if spectra:
        # pre-crossing ripple carries little power next to full fringes
        strongest = max(s.power for s in spectra)
        spectra = [s for s in spectra if s.power >= _MIN_POWER_SHARE * strongest]
    if len(spectra) < 4:
        raise FitError(
            f"only {len(spectra)} columns beyond {edge:g} mPhi0 resolve fringes"
        )
    phi_f = np.array([s.phi_f for s in spectra])
    omega = np.array([s.dominant_omega for s in spectra])
    return phi_f, omega


def fit_fringe_rates(
    interference_map: InterferenceMap,
    edge: float,
    upper: Optional[float] = None,
    options: Optional[AnalysisOptions] = None,
) -> CrossingFit:
    """Least-squares (slope, gap, location) from column FFT frequencies.

    Uses columns right of ``edge`` (and left of ``upper``) with at least
    ``options.min_cycles`` fringes over the tau span and a peak power of at
    least a tenth of the strongest column, under a soft-L1 loss. The column
    FFTs are zero-padded at least eightfold.

    Raises:
        FitError: fewer than 4 usable columns or the optimizer fails
    """
    options = options or AnalysisOptions()
    phi_f, omega = _fringe_columns(interference_map, edge, upper, options)
    phi_i = interference_map.phi_i

    # large-amplitude start: sqrt(omega (Phi_f - Phi_i)) ~ sqrt(l) (Phi_f - x0)
    a, b, _ = linear_fit(phi_f, np.sqrt(omega * (phi_f - phi_i)))
    upper_bound = float(phi_f.min()) - 1e-6
    lower_bound = phi_i + 1e-6
    if not a > 0:
        raise FitError("column frequencies do not grow with Phi_f")
    start = np.array(
        [
            a * a,
            min(_GAP_START, 0.5 * options.gap_scan[0]),
            float(np.clip(-b / a, lower_bound, upper_bound - 1e-6)),
        ]
    )

    def residual(params: np.ndarray) -> np.ndarray:
        slope, gap, location = params
        return fringe_rate_model(phi_f, slope, gap, location, phi_i) - omega

    result = least_squares(
        residual,
        start,
        loss="soft_l1",
        bounds=(
            [1e-9, 0.0, lower_bound],
            [np.inf, options.gap_scan[0], upper_bound],
        ),
    )
    if not result.success:
        raise FitError(f"fringe-rate fit failed: {result.message}")
    slope, gap, location = (float(v) for v in result.x)
    rms = float(np.sqrt(np.mean(result.fun**2)))
    logger.info(
        f"fringe-rate fit over {len(phi_f)} columns: location={location:.4g}, "
        f"l={slope:.4g}, Delta={gap:.4g}, rms={rms:.3g}"
    )
    return CrossingFit(location, slope, gap, rms, len(phi_f))


def _bend_starts(
    phi_f: np.ndarray, single: CrossingFit, gap_max: float
) -> List[np.ndarray]:
    inner = phi_f[_BEND_SIDE_COLUMNS:-_BEND_SIDE_COLUMNS]
    if inner.size == 0:
        return []
    candidates = np.unique(np.quantile(inner, np.linspace(0.0, 1.0, 6)))
    location = min(single.location, float(phi_f.min()) - 2e-6)
    return [
        np.array(
            [
                single.slope,
                single.gap,
                location,
                max(float(x2) - location, 2.0 * _MIN_SEPARATION),
                share * gap_max,
            ]
        )
        for x2 in candidates
        for share in (0.25, 0.5, 0.75)
    ]


def fit_two_crossings(
    interference_map: InterferenceMap,
    edge: float,
    options: Optional[AnalysisOptions] = None,
    single: Optional[CrossingFit] = None,
) -> CrossingFit:
    """Least-squares fit of ``two_crossing_rate_model`` to the column rates.

    Same column selection as ``fit_fringe_rates``. The optimizer is started
    from ``single`` (fitted here when not given) with the second crossing
    placed at several interior columns and a few second gaps; the best end
    point wins.

    Raises:
        FitError: too few usable columns or no start converges
    """
    options = options or AnalysisOptions()
    phi_f, omega = _fringe_columns(interference_map, edge, None, options)
    if phi_f.size < 2 * _BEND_SIDE_COLUMNS + 4:
        raise FitError(f"{phi_f.size} columns are too few for a two-crossing fit")
    if single is None:
        single = fit_fringe_rates(interference_map, edge, None, options)
    phi_i = interference_map.phi_i
    gap_max = options.gap_scan[0]
    reach = float(phi_f.max() - phi_i)
    lower = [1e-9, 0.0, phi_i + 1e-6, _MIN_SEPARATION, 0.0]
    upper = [np.inf, gap_max, float(phi_f.min()) - 1e-6, 2.0 * reach, gap_max]

    def residual(params: np.ndarray) -> np.ndarray:
        slope, gap, location, separation, second_gap = params
        return (
            two_crossing_rate_model(
                phi_f, slope, gap, location, location + separation, second_gap, phi_i
            )
            - omega
        )

    best = None
    for start in _bend_starts(phi_f, single, gap_max):
        start = np.clip(start, lower, [u - 1e-9 for u in upper])
        result = least_squares(
            residual, start, loss="soft_l1", bounds=(lower, upper), max_nfev=400
        )
        if best is None or result.cost < best.cost:
            best = result
    if best is None or not np.all(np.isfinite(best.x)):
        raise FitError("two-crossing fringe-rate fit did not converge")

    slope, gap, location, separation, second_gap = (float(v) for v in best.x)
    rms = float(np.sqrt(np.mean(best.fun**2)))
    logger.debug(
        f"two-crossing fit: x1={location:.4g}, x2={location + separation:.4g}, "
        f"l={slope:.4g}, Delta={gap:.4g}, Delta2={second_gap:.4g}, rms={rms:.3g}"
    )
    return CrossingFit(
        location,
        slope,
        gap,
        rms,
        len(phi_f),
        second_location=location + separation,
        second_gap=second_gap,
    )


def bend_is_significant(
    single: CrossingFit,
    double: CrossingFit,
    phi_f: np.ndarray,
    resolution: float,
    options: AnalysisOptions,
) -> bool:
    """Whether the two-crossing fit is kept over the single one.

    The second crossing needs resolvable columns on both sides, and the rms
    must drop below ``bend_rms_ratio`` of the single fit by more than
    ``bend_floor`` frequency bins.
    """
    x2 = double.second_location
    if x2 is None:
        return False
    inside = (
        np.count_nonzero(phi_f < x2) >= _BEND_SIDE_COLUMNS
        and np.count_nonzero(phi_f > x2) >= _BEND_SIDE_COLUMNS
    )
    gain = single.rms - double.rms
    return bool(
        inside
        and double.rms <= options.bend_rms_ratio * single.rms
        and gain > options.bend_floor * resolution
    )


def fit_crossings(
    interference_map: InterferenceMap,
    edge: float,
    options: Optional[AnalysisOptions] = None,
) -> CrossingFit:
    """Single-crossing fit, replaced by the two-crossing fit when it bends.

    Raises:
        FitError: the single-crossing fit fails
    """
    options = options or AnalysisOptions()
    single = fit_fringe_rates(interference_map, edge, None, options)
    try:
        double = fit_two_crossings(interference_map, edge, options, single)
    except FitError as exc:
        logger.debug(f"no two-crossing fit: {exc}")
        return single
    phi_f, _ = _fringe_columns(interference_map, edge, None, options)
    tau = interference_map.tau_values
    resolution = 2.0 * math.pi / float(tau[-1] - tau[0])
    if not bend_is_significant(single, double, phi_f, resolution, options):
        return single
    logger.info(
        f"fringe rates bend at {double.second_location:.4g} mPhi0 "
        f"(rms {single.rms:.3g} -> {double.rms:.3g})"
    )
    return double
