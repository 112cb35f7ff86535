"""Inverse analysis: spectrum parameters from interference maps."""

from .crossing_fit import (
    CrossingFit,
    bend_is_significant,
    fit_crossings,
    fit_fringe_rates,
    fit_two_crossings,
    fringe_rate_model,
    two_crossing_rate_model,
)
from .gap_fit import fit_gap, gap_scan_values, predicted_populations, select_points
from .models import (
    AnalysisOptions,
    ColumnSpectrum,
    GapCandidate,
    GapFit,
    SpectroscopyFit,
)
from .pipeline import analyze_map
from .regions import (
    REGION_FAST,
    REGION_INTERMEDIATE,
    REGION_SLOW,
    cell_sweep_rates,
    classify_regions,
    column_variance,
    edge_threshold,
    fringe_edge,
    fringe_spacing_deviation,
    local_fringe_frequency,
    locate_anticrossings,
    region_summary,
    relative_column_variance,
)
from .report import (
    SPECTRA_HEADER,
    format_report_text,
    read_report_kv,
    write_report,
    write_spectra_csv,
)
from .spectral import (
    check_slope_regime,
    column_fft,
    column_spectra,
    column_spectrum,
    fft_linearity,
    fit_slope,
    linear_fit,
    slope_from_period,
)

__all__ = [
    "REGION_FAST",
    "REGION_INTERMEDIATE",
    "REGION_SLOW",
    "SPECTRA_HEADER",
    "AnalysisOptions",
    "ColumnSpectrum",
    "CrossingFit",
    "GapCandidate",
    "GapFit",
    "SpectroscopyFit",
    "analyze_map",
    "bend_is_significant",
    "cell_sweep_rates",
    "check_slope_regime",
    "classify_regions",
    "column_fft",
    "column_spectra",
    "column_spectrum",
    "column_variance",
    "edge_threshold",
    "fft_linearity",
    "fit_crossings",
    "fit_fringe_rates",
    "fit_gap",
    "fit_slope",
    "fit_two_crossings",
    "format_report_text",
    "fringe_edge",
    "fringe_rate_model",
    "fringe_spacing_deviation",
    "gap_scan_values",
    "linear_fit",
    "local_fringe_frequency",
    "locate_anticrossings",
    "predicted_populations",
    "read_report_kv",
    "region_summary",
    "relative_column_variance",
    "select_points",
    "slope_from_period",
    "two_crossing_rate_model",
    "write_report",
    "write_spectra_csv",
]
