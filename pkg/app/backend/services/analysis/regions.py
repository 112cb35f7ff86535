"""Fringe edges, anticrossing locations and the sweep-rate partition of a map."""

from __future__ import annotations

import logging
import math
from typing import Dict, List, Optional

import numpy as np
from scipy import ndimage, signal

from app.backend.services.analytic import characteristic_sweep_rate, phase_rate
from app.backend.services.errors import FitError, ValidationError
from app.backend.services.sweep import InterferenceMap

from .crossing_fit import fit_crossings, two_crossing_rate_model
from .models import AnalysisOptions
from .spectral import uniform_step

logger = logging.getLogger(__name__)

REGION_SLOW = 1
REGION_FAST = 2
REGION_INTERMEDIATE = 3


def column_variance(interference_map: InterferenceMap) -> np.ndarray:
    """Variance of W_11 over tau, one value per Phi_f column."""
    return np.var(interference_map.values, axis=0)


def relative_column_variance(interference_map: InterferenceMap) -> np.ndarray:
    """Column variance over the squared contrast (max - min) of the whole map."""
    contrast = float(np.ptp(interference_map.values))
    variance = column_variance(interference_map)
    if contrast <= 0:
        return np.zeros_like(variance)
    return variance / contrast**2


def edge_threshold(
    relative_variance: np.ndarray, options: Optional[AnalysisOptions] = None
) -> float:
    """Relative variance a column must exceed to count as fringed.

    ``variance_threshold``, raised to ``edge_factor`` times the quietest of the
    ``edge_baseline`` leftmost columns when those already ripple (a strongly
    coupled far branch mixes the state before any crossing is reached).
    """
    options = options or AnalysisOptions()
    baseline = float(np.min(relative_variance[: options.edge_baseline]))
    return max(options.variance_threshold, options.edge_factor * baseline)


def fringe_edge(
    interference_map: InterferenceMap, options: Optional[AnalysisOptions] = None
) -> Optional[float]:
    """Smallest Phi_f whose relative column variance exceeds ``edge_threshold``.

    None when every column is flat. A map whose leftmost columns already carry
    full fringes falls back to the plain ``variance_threshold`` onset.
    """
    options = options or AnalysisOptions()
    axis = interference_map.phi_f_values
    rel_var = relative_column_variance(interference_map)
    onset = np.flatnonzero(rel_var > edge_threshold(rel_var, options))
    if onset.size == 0:
        onset = np.flatnonzero(rel_var > options.variance_threshold)
    if onset.size == 0:
        return None
    return float(axis[int(onset[0])])


def local_fringe_frequency(
    tau: np.ndarray, values: np.ndarray, window: int
) -> np.ndarray:
    """Smoothed instantaneous angular frequency of one column (rad/ns).

    Taken from the unwrapped phase of the analytic signal; ``window`` samples at
    each end are left as NaN.
    """
    dt = uniform_step(tau)
    x = np.asarray(values, dtype=np.float64)
    x = x - np.mean(x)
    phase = np.unwrap(np.angle(signal.hilbert(x)))
    rate = ndimage.uniform_filter1d(np.gradient(phase, dt), size=window)
    rate = np.abs(rate)
    if 2 * window >= rate.size:
        return np.full(rate.size, np.nan)
    rate[:window] = np.nan
    rate[-window:] = np.nan
    return rate


def fringe_spacing_deviation(
    interference_map: InterferenceMap,
    slope: Optional[float] = None,
    gap: Optional[float] = None,
    location: float = 0.0,
    options: Optional[AnalysisOptions] = None,
    second_location: Optional[float] = None,
    second_gap: Optional[float] = None,
) -> np.ndarray:
    """Per-cell relative deviation of the local fringe frequency.

    The reference is the closed-form one-crossing rate dphi/dtau when ``slope``
    and ``gap`` are given (the two-branch rate when ``second_location`` and
    ``second_gap`` are given too), otherwise the column median (a single
    crossing gives evenly spaced fringes along tau). Cells are NaN where no
    fringe is resolvable: columns left of ``location`` or without variance,
    columns with fewer than ``options.min_cycles`` fringes, cells within one
    fringe of either end of the column and the smoothing edges.
    """
    options = options or AnalysisOptions()
    tau = interference_map.tau_values
    span = float(tau[-1] - tau[0])
    rel_var = relative_column_variance(interference_map)
    phi_i = interference_map.phi_i
    out = np.full(interference_map.values.shape, np.nan)
    if phi_i >= location:
        raise ValidationError("phi_i must lie left of the anticrossing")

    for j, phi_f in enumerate(interference_map.phi_f_values):
        if phi_f <= location or rel_var[j] <= options.variance_threshold:
            continue
        local = local_fringe_frequency(
            tau, interference_map.column(j), options.fringe_window
        )
        if slope is not None and gap is not None:
            if second_location is not None and second_gap is not None:
                rates = two_crossing_rate_model(
                    np.array([phi_f]),
                    slope,
                    gap,
                    location,
                    second_location,
                    second_gap,
                    phi_i,
                )
                reference = float(rates[0])
            else:
                reference = phase_rate(slope, gap, phi_f - location, phi_i - location)
        elif np.any(np.isfinite(local)):
            reference = float(np.nanmedian(local))
        else:
            continue
        if not reference > 0:
            continue
        if reference * span < 2.0 * math.pi * options.min_cycles:
            continue
        deviation = np.abs(local - reference) / reference
        # Hilbert の端の乱れ: 両端から一周期分は使わない
        period = 2.0 * math.pi / reference
        deviation[(tau - tau[0] < period) | (tau[-1] - tau < period)] = np.nan
        out[:, j] = deviation
    return out


def locate_anticrossings(
    interference_map: InterferenceMap, options: Optional[AnalysisOptions] = None
) -> List[float]:
    """Anticrossing locations (mPhi0) read off the fringe pattern.

    The first is the left edge of the first fringe (``fringe_edge``). A second
    one is reported where the column fringe rates stop following a single
    crossing: the second crossing of a significant two-branch fit
    (``fit_crossings``). Returns [] when no column varies.
    """
    options = options or AnalysisOptions()
    edge = fringe_edge(interference_map, options)
    if edge is None:
        logger.warning("no fringe edge found: every column is flat")
        return []
    locations = [edge]
    try:
        crossing = fit_crossings(interference_map, edge, options)
    except FitError as exc:
        logger.debug(f"no fringe-rate fit beyond the edge: {exc}")
    else:
        if crossing.second_location is not None:
            locations.append(crossing.second_location)

    listed = ", ".join(f"{loc:.4g}" for loc in locations)
    logger.info(f"anticrossings located at {listed} mPhi0")
    return locations


def cell_sweep_rates(interference_map: InterferenceMap) -> np.ndarray:
    """|k| = 2|Phi_f - Phi_i|/tau for every cell, shape of ``values``."""
    phi_f = interference_map.phi_f_values[np.newaxis, :]
    tau = interference_map.tau_values[:, np.newaxis]
    return 2.0 * np.abs(phi_f - interference_map.phi_i) / tau


def classify_regions(
    interference_map: InterferenceMap, gap12: float, gap13: float, slope: float
) -> np.ndarray:
    """Label cells by sweep rate against the two characteristic rates.

    1 where k <= the lower rate (both crossings adiabatic), 2 where k >= the
    upper rate (both diabatic), 3 in between.
    """
    low, high = sorted(
        characteristic_sweep_rate(gap, slope) for gap in (gap12, gap13)
    )
    k = cell_sweep_rates(interference_map)
    labels = np.full(k.shape, REGION_INTERMEDIATE, dtype=np.int64)
    labels[k <= low] = REGION_SLOW
    labels[k >= high] = REGION_FAST
    return labels


def region_summary(
    labels: np.ndarray, deviation: np.ndarray, threshold: Optional[float] = None
) -> Dict[int, Dict[str, float]]:
    """Fringe-deviation statistics per region label.

    ``fraction_above`` counts cells deviating by more than ``threshold``
    (default: the ``distortion_threshold`` option).
    """
    if threshold is None:
        threshold = AnalysisOptions().distortion_threshold
    summary: Dict[int, Dict[str, float]] = {}
    for label in (REGION_SLOW, REGION_FAST, REGION_INTERMEDIATE):
        in_region = labels == label
        values = deviation[in_region & np.isfinite(deviation)]
        resolved = values.size > 0
        summary[label] = {
            "cells": float(in_region.sum()),
            "resolved": float(values.size),
            "median_deviation": float(np.median(values)) if resolved else math.nan,
            "fraction_above": float(np.mean(values > threshold))
            if resolved
            else math.nan,
        }
    return summary
