"""CSV / PGM emission of interference maps and CSV parsing back into a map."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from app.backend.services.errors import SchemaError

from .models import GridSpec, InterferenceMap

logger = logging.getLogger(__name__)

CSV_HEADER = ["phi_f_mPhi0", "tau_ns", "population"]
PGM_MAXVAL = 65535

PathLike = Union[str, Path]


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def _comment_line(header: Optional[Dict[str, Any]]) -> Optional[str]:
    if not header:
        return None
    return "# " + json.dumps(header, sort_keys=True, separators=(",", ":"))


def write_map_csv(
    path: PathLike,
    interference_map: InterferenceMap,
    header: Optional[Dict[str, Any]] = None,
) -> Path:
    """Long-format CSV: one row per cell, ordered by Phi_f then tau.

    ``header`` (the resolved run config) is embedded as a ``# `` JSON line. Keep
    volatile values such as timestamps out of it if the file must be
    reproducible byte for byte.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    phi_f = interference_map.phi_f_values
    tau = interference_map.tau_values
    values = interference_map.values
    with open(path, "w", encoding="utf-8", newline="") as f:
        comment = _comment_line(header)
        if comment:
            f.write(comment + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for j in range(phi_f.size):
            for i in range(tau.size):
                writer.writerow([_fmt(phi_f[j]), _fmt(tau[i]), _fmt(values[i, j])])
    logger.info(f"Saved interference map ({tau.size} x {phi_f.size}) to {path}")
    return path


def _parse_float(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise SchemaError(f"non-numeric value {text!r}", row=row, column=column)
    if not np.isfinite(value):
        raise SchemaError(f"non-finite value {text!r}", row=row, column=column)
    return value


def read_map_csv(path: PathLike, phi_i: Optional[float] = None) -> InterferenceMap:
    """Parse a CSV written by ``write_map_csv``.

    Row numbers in errors are 1-based file lines. The embedded config header,
    when present, is returned under ``metadata["config"]``; ``phi_i`` is used
    only when the header does not record one.

    Raises:
        OSError: file cannot be opened
        SchemaError: malformed content
    """
    path = Path(path)
    config: Optional[Dict[str, Any]] = None
    records: List[List[float]] = []
    header_seen = False

    with open(path, "r", encoding="utf-8", newline="") as f:
        for line_no, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                body = stripped[1:].strip()
                if config is None and body.startswith("{"):
                    try:
                        config = json.loads(body)
                    except json.JSONDecodeError:
                        logger.warning(f"ignoring unparsable comment on line {line_no}")
                continue
            fields = next(csv.reader([stripped]))
            if not header_seen:
                if [name.strip() for name in fields] != CSV_HEADER:
                    raise SchemaError(
                        f"expected header {','.join(CSV_HEADER)}, got {stripped!r}",
                        row=line_no,
                    )
                header_seen = True
                continue
            if len(fields) != len(CSV_HEADER):
                raise SchemaError(
                    f"expected {len(CSV_HEADER)} fields, got {len(fields)}",
                    row=line_no,
                )
            records.append(
                [
                    _parse_float(text.strip(), line_no, name)
                    for text, name in zip(fields, CSV_HEADER)
                ]
            )

    if not header_seen:
        raise SchemaError("missing CSV header")
    if not records:
        raise SchemaError("map file has no data rows")

    data = np.asarray(records, dtype=np.float64)
    phi_f_axis = np.unique(data[:, 0])
    tau_axis = np.unique(data[:, 1])
    if phi_f_axis.size * tau_axis.size != len(records):
        raise SchemaError(
            f"{len(records)} rows do not form a full grid "
            f"({phi_f_axis.size} phi_f x {tau_axis.size} tau)"
        )

    values = np.full((tau_axis.size, phi_f_axis.size), np.nan)
    cols = np.searchsorted(phi_f_axis, data[:, 0])
    rows = np.searchsorted(tau_axis, data[:, 1])
    values[rows, cols] = data[:, 2]
    if np.isnan(values).any():
        raise SchemaError("duplicate (phi_f, tau) cells in map file")

    recorded = _phi_i_from_config(config) if config is not None else float("nan")
    if np.isfinite(recorded):
        phi_i = recorded
    if phi_i is None or not np.isfinite(phi_i):
        raise SchemaError("map file does not record phi_i in its config header")

    grid = GridSpec(
        phi_f_range=(phi_f_axis[0], phi_f_axis[-1], phi_f_axis.size),
        tau_range=(tau_axis[0], tau_axis[-1], tau_axis.size),
        phi_i=phi_i,
    )
    metadata: Dict[str, Any] = {"source": str(path)}
    if config is not None:
        metadata["config"] = config
    logger.info(
        f"Loaded interference map ({tau_axis.size} x {phi_f_axis.size}) from {path}"
    )
    return InterferenceMap(
        grid=grid,
        values=values,
        metadata=metadata,
        phi_f_axis=phi_f_axis,
        tau_axis=tau_axis,
    )


def _phi_i_from_config(config: Dict[str, Any]) -> float:
    grid = config.get("grid")
    if isinstance(grid, dict) and "phi_i" in grid:
        try:
            return float(grid["phi_i"])
        except (TypeError, ValueError):
            raise SchemaError("phi_i in config header is not a number")
    return float("nan")


def write_map_pgm(
    path: PathLike,
    interference_map: InterferenceMap,
    header: Optional[Dict[str, Any]] = None,
) -> Path:
    """Plain (P2) 16-bit grayscale heatmap.

    Rows run from the largest tau at the top down to the smallest; columns run
    along Phi_f ascending; pixel = round(W_11 * 65535).
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = np.clip(interference_map.values, 0.0, 1.0)
    pixels = np.rint(values * PGM_MAXVAL).astype(np.int64)[::-1, :]
    height, width = pixels.shape
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write("P2\n")
        comment = _comment_line(header)
        if comment:
            f.write(comment + "\n")
        f.write(f"{width} {height}\n{PGM_MAXVAL}\n")
        for row in pixels:
            f.write(" ".join(str(int(p)) for p in row) + "\n")
    logger.info(f"Saved PGM heatmap ({width} x {height}) to {path}")
    return path
