from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from app.backend.services.errors import ValidationError

# (min, max, count)
AxisRange = Tuple[float, float, int]

# 値域チェックの許容幅
POPULATION_SLACK = 1e-8


def _check_axis(name: str, axis: AxisRange) -> AxisRange:
    lo, hi, count = axis
    lo, hi = float(lo), float(hi)
    if isinstance(count, bool) or int(count) != count:
        raise ValidationError(f"{name} count must be an integer, got {count!r}")
    count = int(count)
    if count < 1:
        raise ValidationError(f"{name} count must be >= 1, got {count}")
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValidationError(f"{name} bounds must be finite")
    if count > 1 and not lo < hi:
        raise ValidationError(f"{name} needs min < max when count > 1 ({lo:g}, {hi:g})")
    return lo, hi, count


def _axis_values(axis: AxisRange) -> np.ndarray:
    lo, hi, count = axis
    if count == 1:
        return np.array([lo], dtype=np.float64)
    return np.linspace(lo, hi, count)


@dataclass(frozen=True)
class GridSpec:
    """(Phi_f, tau) sweep grid; Phi_f in mPhi0, tau in ns."""

    phi_f_range: AxisRange
    tau_range: AxisRange
    phi_i: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi_f_range", _check_axis("phi_f", self.phi_f_range))
        object.__setattr__(self, "tau_range", _check_axis("tau", self.tau_range))
        if not math.isfinite(self.phi_i):
            raise ValidationError("phi_i must be finite")
        if self.tau_range[0] <= 0:
            raise ValidationError(f"all tau must be > 0, got min {self.tau_range[0]:g}")

    @property
    def shape(self) -> Tuple[int, int]:
        """(count_tau, count_phi_f)"""
        return self.tau_range[2], self.phi_f_range[2]

    @property
    def cell_count(self) -> int:
        return self.tau_range[2] * self.phi_f_range[2]

    def phi_f_values(self) -> np.ndarray:
        return _axis_values(self.phi_f_range)

    def tau_values(self) -> np.ndarray:
        return _axis_values(self.tau_range)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "phi_f_range": list(self.phi_f_range),
            "tau_range": list(self.tau_range),
            "phi_i": self.phi_i,
        }


@dataclass
class InterferenceMap:
    """W_11 over the grid; ``values[i, j]`` belongs to tau_i and Phi_f_j.

    The axes are stored explicitly so that a map parsed back from CSV keeps the
    exact node values it was written with.
    """

    grid: GridSpec
    values: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)
    phi_f_axis: Optional[np.ndarray] = None
    tau_axis: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.phi_f_axis is None:
            self.phi_f_axis = self.grid.phi_f_values()
        if self.tau_axis is None:
            self.tau_axis = self.grid.tau_values()
        self.phi_f_axis = np.asarray(self.phi_f_axis, dtype=np.float64)
        self.tau_axis = np.asarray(self.tau_axis, dtype=np.float64)
        expected = (self.tau_axis.size, self.phi_f_axis.size)
        if self.values.shape != expected or expected != self.grid.shape:
            raise ValidationError(
                f"map values shape {self.values.shape} "
                f"does not match grid {self.grid.shape}"
            )
        if self.values.size and (
            np.nanmin(self.values) < -POPULATION_SLACK
            or np.nanmax(self.values) > 1.0 + POPULATION_SLACK
        ):
            raise ValidationError("map values must lie in [0, 1]")

    @property
    def phi_f_values(self) -> np.ndarray:
        assert self.phi_f_axis is not None
        return self.phi_f_axis

    @property
    def tau_values(self) -> np.ndarray:
        assert self.tau_axis is not None
        return self.tau_axis

    @property
    def phi_i(self) -> float:
        return self.grid.phi_i

    def column(self, index: int) -> np.ndarray:
        return self.values[:, index]
