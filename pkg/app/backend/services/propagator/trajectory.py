from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.backend.services.errors import ValidationError

logger = logging.getLogger(__name__)


def trajectory_header(dim: int) -> List[str]:
    populations = [f"W{i}{i}" for i in range(1, dim + 1)]
    return ["t_ns", *populations, "re_W12", "im_W12", "trace"]


def trajectory_rows(
    trajectory: Sequence[Tuple[float, np.ndarray]]
) -> List[List[str]]:
    rows: List[List[str]] = []
    for t, rho in trajectory:
        diag = np.real(np.diag(rho))
        values = [t, *diag, rho[0, 1].real, rho[0, 1].imag, float(np.sum(diag))]
        rows.append([f"{v:.9g}" for v in values])
    return rows


def write_trajectory_csv(
    path: Union[str, Path],
    trajectory: Sequence[Tuple[float, np.ndarray]],
    header_comment: Optional[str] = None,
) -> Path:
    """(t, populations, W12 coherence, trace) を CSV に書き出す"""
    if not trajectory:
        raise ValidationError("trajectory is empty; request trajectory samples first")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dim = trajectory[0][1].shape[0]
    with open(path, "w", encoding="utf-8", newline="") as f:
        if header_comment:
            f.write(f"# {header_comment}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(trajectory_header(dim))
        writer.writerows(trajectory_rows(trajectory))
    logger.info(f"Saved trajectory ({len(trajectory)} samples) to {path}")
    return path
