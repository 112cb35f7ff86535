"""Gap estimation by exhaustive scan of the closed-form population.

The objective is oscillatory in the gap with many local minima, so the scan is
a plain 1-D grid rather than a gradient search.
"""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.backend.services.analytic import phase_closed_form, population_from_phase
from app.backend.services.errors import InconsistentPointsError, ValidationError
from app.backend.services.sweep import InterferenceMap, nearest_index

from .models import AnalysisOptions, GapCandidate, GapFit

logger = logging.getLogger(__name__)

# (Phi_f mPhi0, tau ns, W_11)
MapPoint = Tuple[float, float, float]

# objective values closer than this to the minimum belong to the same optimum
_TIE_TOL = 1e-9


def gap_scan_values(gap_max: float, step: float) -> np.ndarray:
    """Scan nodes step, 2*step, ..., gap_max (0 excluded)."""
    count = int(round(gap_max / step))
    return step * np.arange(1, count + 1, dtype=np.float64)


def predicted_populations(
    gaps: np.ndarray,
    points: Sequence[MapPoint],
    slope: float,
    phi_i: float,
    location: float = 0.0,
) -> np.ndarray:
    """Closed-form W_11 for every (gap, point); shape (len(gaps), len(points))."""
    gaps = np.asarray(gaps, dtype=np.float64)
    shifted_i = phi_i - location
    out = np.ones((gaps.size, len(points)), dtype=np.float64)
    for col, (phi_f, tau, _) in enumerate(points):
        shifted_f = phi_f - location
        if shifted_f <= 0:
            # never reaches the anticrossing
            continue
        width = shifted_f * tau / (shifted_f - shifted_i)
        out[:, col] = population_from_phase(
            phase_closed_form(slope, gaps, shifted_f, width)
        )
    return out


def _runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    runs: List[Tuple[int, int]] = []
    start: Optional[int] = None
    for index, flag in enumerate(mask):
        if flag and start is None:
            start = index
        elif not flag and start is not None:
            runs.append((start, index - 1))
            start = None
    if start is not None:
        runs.append((start, mask.size - 1))
    return runs


def fit_gap(
    points: Sequence[MapPoint],
    slope: float,
    phi_i: float,
    options: Optional[AnalysisOptions] = None,
    location: float = 0.0,
) -> GapFit:
    """Scan the gap and keep the values that reproduce the measured points.

    Each point contributes max(0, |W_pred - W| - tolerance)^2. Grid nodes tied
    at the minimum form contiguous runs; every run is a candidate reported by
    its midpoint, and the primary estimate is the candidate with the smallest
    plain squared error (ties go to the smaller gap).

    Raises:
        InconsistentPointsError: the minimum objective exceeds
            ``options.residual_threshold``
    """
    options = options or AnalysisOptions()
    if not points:
        raise ValidationError("fit_gap needs at least one point")
    if not slope > 0:
        raise ValidationError("slope must be > 0")
    if phi_i >= location:
        raise ValidationError("phi_i must lie left of the anticrossing")

    measured = np.array([p[2] for p in points], dtype=np.float64)
    gaps = gap_scan_values(*options.gap_scan)
    predicted = predicted_populations(gaps, points, slope, phi_i, location)
    excess = np.maximum(np.abs(predicted - measured) - options.gap_tolerance, 0.0)
    objective = np.sum(excess**2, axis=1)
    best = float(np.min(objective))
    if best > options.residual_threshold:
        raise InconsistentPointsError(
            f"no gap in (0, {options.gap_scan[0]:g}] reproduces the points "
            f"(best objective {best:.3g} > {options.residual_threshold:g})"
        )

    candidates: List[GapCandidate] = []
    for first, last in _runs(objective <= best + _TIE_TOL):
        mid = 0.5 * (gaps[first] + gaps[last])
        mid_pred = predicted_populations(
            np.array([mid]), points, slope, phi_i, location
        )[0]
        sse = float(np.sum((mid_pred - measured) ** 2))
        candidates.append(
            GapCandidate(gap=float(mid), sse=sse, run=(gaps[first], gaps[last]))
        )

    primary = min(candidates, key=lambda c: (c.sse, c.gap))
    final = predicted_populations(
        np.array([primary.gap]), points, slope, phi_i, location
    )[0]
    if len(candidates) > 1:
        listed = ", ".join(f"{c.gap:.4g}" for c in candidates)
        logger.warning(f"gap fit is degenerate: {len(candidates)} candidates {listed}")
    logger.info(
        f"gap fit: Delta={primary.gap:.6g} "
        f"(run {primary.run[0]:.4g}..{primary.run[1]:.4g}), objective {best:.3g}"
    )
    return GapFit(
        gap=primary.gap,
        candidates=candidates,
        objective_min=best,
        point_residuals=[float(r) for r in final - measured],
    )


def select_points(
    interference_map: InterferenceMap, requests: Sequence[Tuple[float, float]]
) -> List[MapPoint]:
    """Map cells nearest to the requested (Phi_f, tau) pairs, at node coordinates."""
    phi_f_axis = interference_map.phi_f_values
    tau_axis = interference_map.tau_values
    points: List[MapPoint] = []
    for phi_f, tau in requests:
        if not (phi_f_axis[0] <= phi_f <= phi_f_axis[-1]) or not (
            tau_axis[0] <= tau <= tau_axis[-1]
        ):
            raise ValidationError(f"point ({phi_f:g}, {tau:g}) lies outside the map")
        j = nearest_index(phi_f_axis, phi_f)
        i = nearest_index(tau_axis, tau)
        points.append(
            (
                float(phi_f_axis[j]),
                float(tau_axis[i]),
                float(interference_map.values[i, j]),
            )
        )
    return points
