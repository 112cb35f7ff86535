from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple

import numpy as np

from app.backend.services.errors import ValidationError

ADAPTIVE = "adaptive"
FIXED_RK4 = "rk4"
METHODS = (ADAPTIVE, FIXED_RK4)


@dataclass(frozen=True)
class StepperConfig:
    """Integrator settings for one Liouville evolution.

    Args:
        method: "adaptive" (scipy embedded Runge-Kutta pair) or "rk4" (fixed step)
        rel_tol / abs_tol: error tolerances of the adaptive pair
        max_step: upper bound on the adaptive step (ns)
        initial_step: first adaptive step (ns), None lets scipy choose
        fixed_step: step of the fixed RK4 scheme (ns)
        adaptive_pair: scipy solve_ivp method name ("DOP853" or "RK45")
        trajectory_samples: number of uniformly spaced samples to keep, 0 = none

    The drive kink at tau/2 is always a hard breakpoint.
    """

    method: str = ADAPTIVE
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    max_step: float = math.inf
    initial_step: Optional[float] = None
    fixed_step: float = 1e-4
    adaptive_pair: str = "DOP853"
    trajectory_samples: int = 0

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValidationError(f"unknown stepper method {self.method!r}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValidationError("rel_tol and abs_tol must be > 0")
        if not self.max_step > 0:
            raise ValidationError("max_step must be > 0")
        if self.initial_step is not None and not self.initial_step > 0:
            raise ValidationError("initial_step must be > 0")
        if not self.fixed_step > 0:
            raise ValidationError("fixed_step must be > 0")
        if self.adaptive_pair not in ("DOP853", "RK45"):
            raise ValidationError(f"unsupported adaptive pair {self.adaptive_pair!r}")
        if self.trajectory_samples < 0 or self.trajectory_samples == 1:
            raise ValidationError("trajectory_samples must be 0 or >= 2")

    def with_tolerance(self, rel_tol: float) -> "StepperConfig":
        """Scale both tolerances, keeping their ratio."""
        ratio = self.abs_tol / self.rel_tol
        values = asdict(self)
        values.update(rel_tol=rel_tol, abs_tol=rel_tol * ratio)
        return StepperConfig(**values)

    def as_dict(self) -> dict:
        values = asdict(self)
        if math.isinf(self.max_step):
            values["max_step"] = None
        return values


@dataclass
class EvolutionResult:
    final_state: np.ndarray
    trajectory: Optional[List[Tuple[float, np.ndarray]]] = None
    step_count: int = 0
    rhs_eval_count: int = 0

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.final_state)).copy()

    @property
    def initial_population(self) -> float:
        """W_11(tau): population left in |L0>."""
        return float(np.real(self.final_state[0, 0]))


@dataclass(frozen=True)
class StateDiagnostics:
    trace_error: float
    hermiticity_error: float
    min_eigenvalue: float
    purity: float

    def is_physical(self, tol: float = 1e-8) -> bool:
        return (
            self.trace_error <= tol
            and self.hermiticity_error <= tol
            and self.min_eigenvalue >= -tol
        )
