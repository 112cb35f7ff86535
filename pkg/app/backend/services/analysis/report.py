"""Fit report writers: a human-readable summary and a ``key = value`` file."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from app.backend.services.errors import SchemaError

from .models import ColumnSpectrum, SpectroscopyFit

logger = logging.getLogger(__name__)

REPORT_KEYS = (
    "slope_estimate",
    "gap_estimates",
    "anticrossing_locations",
    "k12",
    "k13",
    "residuals",
)
SPECTRA_HEADER = ["phi_f_mPhi0", "omega_rad_per_ns", "period_ns", "power", "resolution"]

PathLike = Union[str, Path]


def _dumps(value: Any) -> str:
    return json.dumps(value, sort_keys=True, default=float)


def _comment(header: Optional[Dict[str, Any]]) -> List[str]:
    if not header:
        return []
    return ["# " + json.dumps(header, sort_keys=True, separators=(",", ":"))]


def format_report_text(fit: SpectroscopyFit) -> str:
    def rate(value: Optional[float]) -> str:
        return "n/a" if value is None else f"{value:.6g} mPhi0/ns"

    lines = [
        "LZS spectroscopy fit",
        "====================",
        f"slope l            : {fit.slope_estimate:.6g} GHz/mPhi0",
    ]
    if fit.anticrossing_locations:
        lines.append(
            "anticrossings      : "
            + ", ".join(f"{loc:.4g} mPhi0" for loc in fit.anticrossing_locations)
        )
    else:
        lines.append("anticrossings      : none found")
    if fit.gap_estimates:
        for location, gap in fit.gap_estimates:
            lines.append(f"gap at {location:>8.4g}    : {gap:.4g} GHz")
    else:
        lines.append("gaps               : none fitted")
    lines.append(f"k12                : {rate(fit.k12)}")
    lines.append(f"k13                : {rate(fit.k13)}")
    lines.append("")
    lines.append("residuals:")
    for key in sorted(fit.residuals):
        lines.append(f"  {key}: {_dumps(fit.residuals[key])}")
    return "\n".join(lines) + "\n"


def write_report(
    text_path: PathLike,
    kv_path: PathLike,
    fit: SpectroscopyFit,
    header: Optional[Dict[str, Any]] = None,
) -> None:
    """Write both report files; ``header`` is embedded as a ``# `` JSON line."""
    text_path, kv_path = Path(text_path), Path(kv_path)
    for path in (text_path, kv_path):
        path.parent.mkdir(parents=True, exist_ok=True)

    comment = _comment(header)
    text_path.write_text(
        "\n".join(comment + [format_report_text(fit)]), encoding="utf-8"
    )
    values = fit.as_dict()
    kv_lines = comment + [f"{key} = {_dumps(values[key])}" for key in REPORT_KEYS]
    kv_path.write_text("\n".join(kv_lines) + "\n", encoding="utf-8")
    logger.info(f"Saved fit report to {text_path} and {kv_path}")


def read_report_kv(path: PathLike) -> Dict[str, Any]:
    """Parse a ``key = value`` report; values are JSON."""
    values: Dict[str, Any] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            key, sep, raw = stripped.partition("=")
            if not sep:
                raise SchemaError("expected 'key = value'", row=line_no)
            key, raw = key.strip(), raw.strip()
            try:
                values[key] = json.loads(raw)
            except json.JSONDecodeError:
                raise SchemaError(
                    f"value is not JSON: {raw!r}", row=line_no, column=key
                )
    return values


def write_spectra_csv(
    path: PathLike,
    spectra: Sequence[ColumnSpectrum],
    header: Optional[Dict[str, Any]] = None,
) -> Path:
    """Per-column FFT table, one row per Phi_f."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        for line in _comment(header):
            f.write(line + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SPECTRA_HEADER)
        for s in spectra:
            writer.writerow(
                [
                    f"{v:.9g}"
                    for v in (
                        s.phi_f,
                        s.dominant_omega,
                        s.period,
                        s.power,
                        s.resolution,
                    )
                ]
            )
    logger.info(f"Saved {len(spectra)} column spectra to {path}")
    return path
