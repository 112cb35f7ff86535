from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from app.backend.services.errors import ValidationError

FFT_WINDOWS = ("flat", "hann", "hamming", "blackmanharris")


@dataclass(frozen=True)
class ColumnSpectrum:
    """Dominant fringe frequency of one map column.

    Args:
        phi_f: column amplitude (mPhi0)
        dominant_omega: 2*pi/T (rad/ns)
        power: one-sided power of the peak bin (population^2)
        resolution: frequency-bin width 2*pi/(tau span) (rad/ns)
    """

    phi_f: float
    dominant_omega: float
    power: float
    resolution: float

    @property
    def period(self) -> float:
        if self.dominant_omega <= 0:
            return float("inf")
        return 2.0 * math.pi / self.dominant_omega


@dataclass(frozen=True)
class GapCandidate:
    gap: float
    sse: float
    run: Tuple[float, float]


@dataclass
class GapFit:
    """Result of the exhaustive gap scan; ``candidates`` are sorted by gap."""

    gap: float
    candidates: List[GapCandidate]
    objective_min: float
    point_residuals: List[float]

    @property
    def degenerate(self) -> bool:
        return len(self.candidates) > 1


@dataclass(frozen=True)
class AnalysisOptions:
    """しきい値・スキャン範囲 (ノイズのあるデータでは調整する)

    Args:
        variance_threshold: column variance over squared map contrast that marks
            the first fringe edge
        edge_baseline: leftmost columns whose variance sets the edge baseline
        edge_factor: jump over the baseline variance that marks the edge
        distortion_threshold: relative departure of the local fringe frequency
            from the reference above which a cell counts as distorted
        bend_rms_ratio: two-crossing rms over one-crossing rms below which the
            fringe rates count as bent by a second crossing
        bend_floor: least rms gain of the two-crossing fit, in frequency bins
        fringe_window: smoothing window (samples) of the local fringe frequency
        min_cycles: columns with fewer fringes over the tau span are not used
            by the rate fits and the deviation field
        fft_window: "flat" or a scipy window name
        pad_factor: zero padding of the column FFT
        gap_tolerance: population residual ignored per point by the gap scan
        gap_scan: (max gap, step); the scan runs over (0, max]
        residual_threshold: gap scan objective above which points are
            inconsistent
        slope_reference: Phi_f column used for the slope (None picks one)
        gap_points: (Phi_f offset from the crossing, tau) pairs for the gap fit
        gap_hint: gap used for the amplitude-regime check of the slope fit
        refine_location: replace the fringe edge by the crossing fitted to the
            column fringe rates
    """

    variance_threshold: float = 1e-3
    edge_baseline: int = 3
    edge_factor: float = 10.0
    distortion_threshold: float = 0.2
    bend_rms_ratio: float = 0.6
    bend_floor: float = 0.05
    fringe_window: int = 41
    min_cycles: float = 2.0
    fft_window: str = "flat"
    pad_factor: int = 1
    gap_tolerance: float = 0.1
    gap_scan: Tuple[float, float] = (12.0, 0.01)
    residual_threshold: float = 1e-3
    slope_reference: Optional[float] = None
    gap_points: Sequence[Tuple[float, float]] = ((1.0, 3.85), (2.0, 3.85))
    gap_hint: Optional[float] = None
    refine_location: bool = True

    def __post_init__(self) -> None:
        if not self.variance_threshold > 0:
            raise ValidationError("variance_threshold must be > 0")
        if not self.distortion_threshold > 0:
            raise ValidationError("distortion_threshold must be > 0")
        if self.edge_baseline < 1:
            raise ValidationError("edge_baseline must be >= 1")
        if not self.edge_factor >= 1:
            raise ValidationError("edge_factor must be >= 1")
        if not 0 < self.bend_rms_ratio < 1:
            raise ValidationError("bend_rms_ratio must be in (0, 1)")
        if self.bend_floor < 0:
            raise ValidationError("bend_floor must be >= 0")
        if self.fringe_window < 3:
            raise ValidationError("fringe_window must be >= 3 samples")
        if self.fft_window not in FFT_WINDOWS:
            raise ValidationError(f"unknown FFT window {self.fft_window!r}")
        if self.pad_factor < 1:
            raise ValidationError("pad_factor must be >= 1")
        if self.gap_tolerance < 0:
            raise ValidationError("gap_tolerance must be >= 0")
        gap_max, gap_step = self.gap_scan
        if not (gap_max > 0 and 0 < gap_step <= gap_max):
            raise ValidationError("gap_scan needs 0 < step <= max")
        if not self.residual_threshold > 0:
            raise ValidationError("residual_threshold must be > 0")

    def as_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        values["gap_scan"] = list(self.gap_scan)
        values["gap_points"] = [list(p) for p in self.gap_points]
        return values


@dataclass
class SpectroscopyFit:
    slope_estimate: float
    gap_estimates: List[Tuple[float, float]] = field(default_factory=list)
    anticrossing_locations: List[float] = field(default_factory=list)
    region_rates: Tuple[Optional[float], Optional[float]] = (None, None)
    residuals: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.slope_estimate > 0:
            raise ValidationError("slope_estimate must be > 0")
        if any(gap < 0 for _, gap in self.gap_estimates):
            raise ValidationError("gap estimates must be >= 0")

    @property
    def k12(self) -> Optional[float]:
        return self.region_rates[0]

    @property
    def k13(self) -> Optional[float]:
        return self.region_rates[1]

    def as_dict(self) -> Dict[str, Any]:
        return {
            "slope_estimate": self.slope_estimate,
            "gap_estimates": [[loc, gap] for loc, gap in self.gap_estimates],
            "anticrossing_locations": list(self.anticrossing_locations),
            "k12": self.k12,
            "k13": self.k13,
            "residuals": self.residuals,
        }
