"""Flux-qubit spectrum and triangle-pulse parameter types.

Units follow the usual flux-qubit convention with hbar = 1: flux detuning in
milli flux quanta (mPhi0), time in ns, and every energy/frequency as an angular
frequency in rad/ns (labelled "GHz" in reports and presets).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from app.backend.services.errors import ValidationError

# flux detuning Phi_ext - Phi0/2 in mPhi0
FluxDetuning = float

# default location of the |R1> crossing for the three-level spectrum
DEFAULT_SECOND_CROSSING = 8.0


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class TrianglePulse:
    """Single triangle flux pulse: Phi_i -> Phi_f -> Phi_i over ``tau`` ns."""

    phi_i: float
    phi_f: float
    tau: float

    def __post_init__(self) -> None:
        phi_i = _require_finite("phi_i", self.phi_i)
        phi_f = _require_finite("phi_f", self.phi_f)
        tau = _require_finite("tau", self.tau)
        if tau <= 0:
            raise ValidationError(f"tau must be positive, got {tau:g} ns")
        if phi_f == phi_i:
            raise ValidationError(
                f"degenerate pulse: phi_f == phi_i == {phi_i:g} mPhi0 (zero sweep rate)"
            )
        object.__setattr__(self, "phi_i", phi_i)
        object.__setattr__(self, "phi_f", phi_f)
        object.__setattr__(self, "tau", tau)

    @property
    def amplitude(self) -> float:
        return self.phi_f - self.phi_i

    def shifted(self, location: float) -> "TrianglePulse":
        """Re-reference detunings to an anticrossing sitting at ``location``."""
        return TrianglePulse(
            phi_i=self.phi_i - location, phi_f=self.phi_f - location, tau=self.tau
        )


@dataclass(frozen=True)
class Anticrossing:
    location: float
    gap: float
    branch_slope: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "location", _require_finite("location", self.location))
        gap = _require_finite("gap", self.gap)
        if gap < 0:
            raise ValidationError(f"gap must be >= 0, got {gap:g}")
        object.__setattr__(self, "gap", gap)
        if self.branch_slope is not None:
            slope = _require_finite("branch_slope", self.branch_slope)
            if slope <= 0:
                raise ValidationError(f"branch_slope must be > 0, got {slope:g}")
            object.__setattr__(self, "branch_slope", slope)


@dataclass(frozen=True)
class QubitSpectrum:
    """Diabatic |L0> branch plus one or two right-well branches.

    |L0> has energy -l*dPhi. Right-well branch j (slope l_j, crossing x_j) has
    energy l_j*(dPhi - x_j) - l*x_j, so it meets |L0> exactly at x_j.
    """

    left_slope: float
    anticrossings: Tuple[Anticrossing, ...]

    def __post_init__(self) -> None:
        slope = _require_finite("left_slope", self.left_slope)
        if slope <= 0:
            raise ValidationError(f"left_slope must be > 0, got {slope:g}")
        object.__setattr__(self, "left_slope", slope)
        crossings = tuple(self.anticrossings)
        if len(crossings) not in (1, 2):
            raise ValidationError(
                f"spectrum needs 1 or 2 anticrossings, got {len(crossings)}"
            )
        locations = [c.location for c in crossings]
        if any(b <= a for a, b in zip(locations, locations[1:])):
            raise ValidationError(
                f"anticrossing locations must be strictly increasing: {locations}"
            )
        object.__setattr__(self, "anticrossings", crossings)

    @classmethod
    def two_level(
        cls, slope: float, gap: float, branch_slope: Optional[float] = None
    ) -> "QubitSpectrum":
        return cls(slope, (Anticrossing(0.0, gap, branch_slope),))

    @classmethod
    def three_level(
        cls,
        slope: float,
        gap12: float,
        gap13: float,
        locations: Sequence[float] = (0.0, DEFAULT_SECOND_CROSSING),
        branch_slopes: Sequence[Optional[float]] = (None, None),
    ) -> "QubitSpectrum":
        x2, x3 = locations
        l2, l3 = branch_slopes
        return cls(slope, (Anticrossing(x2, gap12, l2), Anticrossing(x3, gap13, l3)))

    @property
    def dim(self) -> int:
        return 1 + len(self.anticrossings)

    @property
    def gaps(self) -> Tuple[float, ...]:
        return tuple(c.gap for c in self.anticrossings)

    @property
    def locations(self) -> Tuple[float, ...]:
        return tuple(c.location for c in self.anticrossings)

    def branch_slope(self, index: int) -> float:
        crossing = self.anticrossings[index]
        if crossing.branch_slope is None:
            return self.left_slope
        return crossing.branch_slope

    def linear_form(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (a, b, C) with H(dPhi) = diag(a*dPhi + b) + C."""
        slope = self.left_slope
        a = [-slope]
        b = [0.0]
        coupling = np.zeros((self.dim, self.dim), dtype=np.float64)
        for j, crossing in enumerate(self.anticrossings, start=1):
            lj = self.branch_slope(j - 1)
            a.append(lj)
            b.append(-(lj + slope) * crossing.location)
            coupling[0, j] = coupling[j, 0] = crossing.gap
        return (
            np.asarray(a, dtype=np.float64),
            np.asarray(b, dtype=np.float64),
            coupling,
        )

    def as_dict(self) -> dict:
        return {
            "left_slope": self.left_slope,
            "anticrossings": [
                {
                    "location": c.location,
                    "gap": c.gap,
                    "branch_slope": c.branch_slope,
                }
                for c in self.anticrossings
            ],
        }
