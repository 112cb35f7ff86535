"""Full inverse analysis of one interference map."""

from __future__ import annotations

import logging
from dataclasses import asdict, replace
from typing import Any, Dict, List, Optional, Tuple

from app.backend.services.analytic import characteristic_sweep_rate
from app.backend.services.errors import FitError, ValidationError
from app.backend.services.sweep import InterferenceMap, nearest_index

from .crossing_fit import fit_crossings
from .gap_fit import fit_gap, select_points
from .models import AnalysisOptions, SpectroscopyFit
from .regions import fringe_edge, locate_anticrossings
from .spectral import check_slope_regime, fit_slope

logger = logging.getLogger(__name__)

# share of the span between the fringe edge and the next boundary at which the
# slope reference column sits by default
_REFERENCE_FRACTION = 0.8


def default_slope_reference(
    interference_map: InterferenceMap, locations: List[float]
) -> float:
    axis = interference_map.phi_f_values
    upper = locations[1] if len(locations) > 1 else float(axis[-1])
    target = locations[0] + _REFERENCE_FRACTION * (upper - locations[0])
    return float(axis[nearest_index(axis, target)])


def _gap_requests(
    interference_map: InterferenceMap,
    location: float,
    options: AnalysisOptions,
) -> Optional[List[Tuple[float, float]]]:
    phi_f_axis = interference_map.phi_f_values
    tau_axis = interference_map.tau_values
    requests = []
    for offset, tau in options.gap_points:
        phi_f = location + offset
        if not phi_f_axis[0] <= phi_f <= phi_f_axis[-1]:
            return None
        requests.append((phi_f, min(max(tau, tau_axis[0]), tau_axis[-1])))
    return requests


def analyze_map(
    interference_map: InterferenceMap, options: Optional[AnalysisOptions] = None
) -> SpectroscopyFit:
    """Slope, gaps, anticrossing locations and region rates of a map.

    Steps: fringe edge -> crossings fitted to the column fringe rates (a
    second one when the rates bend) -> slope from the dominant period of a
    large-amplitude column -> gap scan on ``options.gap_points`` next to every
    located crossing -> characteristic sweep rates of the fitted gaps.
    A crossing whose gap points are off the map or inconsistent is reported
    without a gap.

    The fitted gap of the first crossing is the amplitude-regime hint of the
    slope fit unless ``options.gap_hint`` is set.

    Raises:
        FitError: no fringes, the slope cannot be estimated, or the slope
            reference column is outside the large-amplitude regime
    """
    options = options or AnalysisOptions()
    if not options.refine_location:
        locations = locate_anticrossings(interference_map, options)
    else:
        edge = fringe_edge(interference_map, options)
        locations = [] if edge is None else [edge]
    if not locations:
        raise FitError("map shows no fringes; nothing to analyze")
    if interference_map.phi_i >= locations[0]:
        raise ValidationError("phi_i must lie left of the first anticrossing")
    residuals: Dict[str, Any] = {"fringe_edge": locations[0]}
    if options.refine_location:
        try:
            crossing = fit_crossings(interference_map, locations[0], options)
        except FitError as exc:
            logger.warning(f"keeping the fringe edge as first crossing: {exc}")
        else:
            locations[0] = crossing.location
            if crossing.second_location is not None:
                locations.append(crossing.second_location)
            residuals["crossing_fit"] = asdict(crossing)
            # 明示されたギャップが無ければ縞の周波数フィットのギャップで判定する
            if options.gap_hint is None:
                options = replace(options, gap_hint=crossing.gap)
    first = locations[0]

    reference = options.slope_reference
    if reference is None:
        reference = default_slope_reference(interference_map, locations)
    slope = fit_slope(interference_map, reference, options, location=first)

    residuals.update(
        slope_reference_phi_f=reference,
        gap_objective={},
        gap_candidates={},
        gap_point_residuals={},
        skipped_gaps=[],
    )
    gap_estimates: List[Tuple[float, float]] = []
    for location in locations:
        requests = _gap_requests(interference_map, location, options)
        if requests is None:
            logger.warning(
                f"gap points for the crossing at {location:.4g} are off the map"
            )
            residuals["skipped_gaps"].append(location)
            continue
        points = select_points(interference_map, requests)
        try:
            result = fit_gap(
                points, slope, interference_map.phi_i, options, location=location
            )
        except FitError as exc:
            logger.warning(f"gap fit at {location:.4g} mPhi0 skipped: {exc}")
            residuals["skipped_gaps"].append(location)
            continue
        key = f"{location:.6g}"
        gap_estimates.append((location, result.gap))
        residuals["gap_objective"][key] = result.objective_min
        residuals["gap_candidates"][key] = [c.gap for c in result.candidates]
        residuals["gap_point_residuals"][key] = result.point_residuals

    regime_ok: Optional[bool] = None
    if gap_estimates and gap_estimates[0][0] == first and gap_estimates[0][1] > 0:
        try:
            check_slope_regime(
                slope,
                gap_estimates[0][1],
                reference - first,
                interference_map.phi_i - first,
            )
            regime_ok = True
        except FitError as exc:
            logger.warning(f"{exc}")
            regime_ok = False
    residuals["slope_regime_ok"] = regime_ok

    rates = [
        characteristic_sweep_rate(gap, slope) for _, gap in gap_estimates if gap > 0
    ]
    region_rates = (
        rates[0] if rates else None,
        rates[1] if len(rates) > 1 else None,
    )
    fit = SpectroscopyFit(
        slope_estimate=slope,
        gap_estimates=gap_estimates,
        anticrossing_locations=locations,
        region_rates=region_rates,
        residuals=residuals,
    )
    logger.info(
        f"analysis: l={slope:.4g}, gaps={gap_estimates}, locations={locations}"
    )
    return fit
