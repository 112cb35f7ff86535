from __future__ import annotations

import math

from app.backend.services.errors import ValidationError

# exponent prefactor c in exp(-c*pi*Delta^2/(k*l)) for a single passage; the
# diabatic splitting closes at 2*l*k with half-gap Delta, which gives c = 1
LZ_CALIBRATED_PREFACTOR = 1.0
# c used by the region partition (order-of-magnitude boundaries)
LZ_PARTITION_PREFACTOR = 2.0


def lz_probability(
    gap: float, slope: float, rate: float, prefactor: float = LZ_PARTITION_PREFACTOR
) -> float:
    """Diabatic passage probability exp(-prefactor*pi*Delta^2/(k*l))."""
    if rate <= 0 or slope <= 0:
        raise ValidationError("rate and slope must be > 0")
    return math.exp(-prefactor * math.pi * gap * gap / (rate * slope))


def characteristic_sweep_rate(gap: float, slope: float) -> float:
    """Sweep rate k (mPhi0/ns) at which 2*pi*Delta^2/(k*l) = 1."""
    if gap <= 0 or slope <= 0:
        raise ValidationError("gap and slope must be > 0")
    return 2.0 * math.pi * gap * gap / slope
