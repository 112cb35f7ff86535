"""Interference-map sweep over the (Phi_f, tau) grid.

Every cell is an independent ``evolve`` call. Results land in a preallocated
array at the cell's own index, so the map does not depend on the worker count
or on the order in which the pool hands results back.
"""

from __future__ import annotations

import logging
import time
from dataclasses import replace
from datetime import datetime, timezone
from multiprocessing import Pool
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np

from app.backend.services.errors import LZSError, SweepCellError, ValidationError
from app.backend.services.propagator import StepperConfig, diagnose, evolve
from app.backend.services.qubit_model import QubitSpectrum, TrianglePulse

from .models import GridSpec, InterferenceMap

logger = logging.getLogger(__name__)

# (tau index, phi_f index, phi_f, tau)
Cell = Tuple[int, int, float, float]
# (tau index, phi_f index, W_11, trace error, min eigenvalue, purity error)
# or (tau index, phi_f index, None, error message, t_reached, phi_f, tau)
CellOutcome = Tuple[Any, ...]

# Pool ワーカーが共有する入力 (initializer で設定)
_shared: Dict[str, Any] = {}


def _init_worker(spectrum: QubitSpectrum, config: StepperConfig, phi_i: float) -> None:
    _shared["spectrum"] = spectrum
    _shared["config"] = config
    _shared["phi_i"] = phi_i


def _evaluate_cell(cell: Cell) -> CellOutcome:
    i, j, phi_f, tau = cell
    try:
        pulse = TrianglePulse(_shared["phi_i"], phi_f, tau)
        result = evolve(_shared["spectrum"], pulse, _shared["config"])
    except Exception as exc:
        # 例外はプロセス間で pickle できる形に崩して返す
        message = str(exc)
        if not isinstance(exc, LZSError):
            message = f"{type(exc).__name__}: {message}"
        return (i, j, None, message, getattr(exc, "t_reached", None), phi_f, tau)
    diag = diagnose(result.final_state)
    return (
        i,
        j,
        result.initial_population,
        diag.trace_error,
        diag.min_eigenvalue,
        abs(diag.purity - 1.0),
    )


def _cells(grid: GridSpec) -> List[Cell]:
    phi_f = grid.phi_f_values()
    tau = grid.tau_values()
    # phi_f 優先の順序 (CSV と同じ並び)
    return [
        (i, j, float(phi_f[j]), float(tau[i]))
        for j in range(phi_f.size)
        for i in range(tau.size)
    ]


class _CellFailure(Exception):
    def __init__(self, message: str, t_reached: Optional[float]) -> None:
        super().__init__(message)
        self.t_reached = t_reached


def _collect(
    outcomes: Iterable[CellOutcome], shape: Tuple[int, int]
) -> Tuple[np.ndarray, Dict[str, float]]:
    values = np.empty(shape, dtype=np.float64)
    worst = {
        "max_trace_error": 0.0,
        "min_eigenvalue": np.inf,
        "max_purity_error": 0.0,
    }
    for outcome in outcomes:
        i, j, population = outcome[0], outcome[1], outcome[2]
        if population is None:
            _, _, _, message, t_reached, phi_f, tau = outcome
            raise SweepCellError(phi_f, tau, cause=_CellFailure(message, t_reached))
        values[i, j] = population
        worst["max_trace_error"] = max(worst["max_trace_error"], outcome[3])
        worst["min_eigenvalue"] = min(worst["min_eigenvalue"], outcome[4])
        worst["max_purity_error"] = max(worst["max_purity_error"], outcome[5])
    return values, {key: float(value) for key, value in worst.items()}


def run_sweep(
    grid: GridSpec,
    spectrum: QubitSpectrum,
    config: Optional[StepperConfig] = None,
    workers: int = 1,
    chunksize: Optional[int] = None,
) -> InterferenceMap:
    """Fill an InterferenceMap with W_11 from one evolve call per cell.

    Args:
        grid: sweep grid
        spectrum: qubit spectrum
        config: stepper settings (trajectory sampling is switched off)
        workers: process count; 1 runs in-process
        chunksize: cells per task handed to a worker

    Raises:
        SweepCellError: the first failing cell aborts the sweep
    """
    config = config or StepperConfig()
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")
    if config.trajectory_samples:
        config = replace(config, trajectory_samples=0)

    cells = _cells(grid)
    workers = min(workers, len(cells))
    logger.info(
        f"sweep start: {len(cells)} cells "
        f"({grid.phi_f_range[2]} phi_f x {grid.tau_range[2]} tau), {workers} worker(s)"
    )
    started = time.perf_counter()

    if workers == 1:
        _init_worker(spectrum, config, grid.phi_i)
        values, diagnostics = _collect(map(_evaluate_cell, cells), grid.shape)
    else:
        if chunksize is None:
            chunksize = max(1, len(cells) // (workers * 8))
        # with を抜けると terminate されるので失敗セル以降は打ち切られる
        with Pool(
            processes=workers,
            initializer=_init_worker,
            initargs=(spectrum, config, grid.phi_i),
        ) as pool:
            values, diagnostics = _collect(
                pool.imap_unordered(_evaluate_cell, cells, chunksize), grid.shape
            )

    elapsed = time.perf_counter() - started
    logger.info(f"sweep finished: {len(cells)} cells in {elapsed:.2f} s")

    metadata = {
        "spectrum": spectrum.as_dict(),
        "stepper": config.as_dict(),
        "grid": grid.as_dict(),
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "diagnostics": diagnostics,
    }
    return InterferenceMap(grid=grid, values=values, metadata=metadata)


def extract_column(
    interference_map: InterferenceMap, phi_f: float
) -> Tuple[np.ndarray, np.ndarray]:
    """(tau, W_11) of the column nearest to ``phi_f``; ties go to the lower node."""
    axis = interference_map.phi_f_values
    if not axis[0] <= phi_f <= axis[-1]:
        raise ValidationError(
            f"phi_f={phi_f:g} outside grid range [{axis[0]:g}, {axis[-1]:g}]"
        )
    index = nearest_index(axis, phi_f)
    tau = interference_map.tau_values
    order = np.argsort(tau, kind="stable")
    return tau[order].copy(), interference_map.column(index)[order].copy()


def nearest_index(axis: np.ndarray, value: float) -> int:
    """Index of the node nearest to ``value`` on an ascending axis (ties go low)."""
    upper = int(np.searchsorted(axis, value, side="left"))
    if upper == 0:
        return 0
    if upper >= axis.size:
        return axis.size - 1
    lower = upper - 1
    if value - axis[lower] <= axis[upper] - value:
        return lower
    return upper
