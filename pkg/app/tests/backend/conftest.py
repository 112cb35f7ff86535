from typing import Callable, Optional, Sequence

import numpy as np
import pytest

from app.backend.services.analytic import predicted_population_map
from app.backend.services.sweep import GridSpec, InterferenceMap


def build_map(
    values: np.ndarray,
    phi_f: Sequence[float],
    tau: Sequence[float],
    phi_i: float,
) -> InterferenceMap:
    phi_f = np.asarray(phi_f, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    grid = GridSpec(
        phi_f_range=(phi_f[0], phi_f[-1], phi_f.size),
        tau_range=(tau[0], tau[-1], tau.size),
        phi_i=phi_i,
    )
    return InterferenceMap(grid=grid, values=values, phi_f_axis=phi_f, tau_axis=tau)


@pytest.fixture
def synthetic_map() -> Callable[..., InterferenceMap]:
    """閉形式の位相から作ったノイズなしの干渉マップ"""

    def factory(
        slope: float = 2.0,
        gap: float = 2.0,
        phi_f: Optional[Sequence[float]] = None,
        tau: Optional[Sequence[float]] = None,
        phi_i: float = -5.0,
        location: float = 0.0,
    ) -> InterferenceMap:
        phi_f = np.linspace(-2.0, 10.0, 121) if phi_f is None else phi_f
        tau = np.linspace(0.01, 4.0, 400) if tau is None else tau
        values = predicted_population_map(slope, gap, phi_f, tau, phi_i, location)
        return build_map(values, phi_f, tau, phi_i)

    return factory
