import math

import numpy as np
import pytest

from app.backend.services.analytic import (
    LZ_PARTITION_PREFACTOR,
    amplitude_regime,
    characteristic_sweep_rate,
    lz_probability,
    phase_closed_form,
    phase_extreme_amplitude,
    phase_large_amplitude,
    phase_quadrature,
    phase_rate,
    population_from_phase,
    predicted_population_map,
    stueckelberg_phase,
)
from app.backend.services.errors import AnticrossingNotCrossedError, ValidationError
from app.backend.services.qubit_model import TrianglePulse


class TestStueckelbergPhase:
    def test_lower_region_points(self):
        """ギャップ推定に使う二点の位相"""
        low = stueckelberg_phase(2.0, 2.0, TrianglePulse(-5.0, 1.0, 3.85))
        high = stueckelberg_phase(2.0, 2.0, TrianglePulse(-5.0, 2.0, 3.85))
        assert low.phi == pytest.approx(2.946, abs=1e-3)
        assert high.phi == pytest.approx(6.51, abs=1e-2)

    def test_zero_gap_reduces_to_large_amplitude(self):
        pulse = TrianglePulse(-5.0, 8.0, 0.7)
        phi = stueckelberg_phase(2.0, 0.0, pulse).phi
        assert phi == pytest.approx(128.0 / 13.0 * 0.7, rel=1e-12)

    def test_small_gap_limit(self):
        pulse = TrianglePulse(-5.0, 8.0, 0.7)
        phi = stueckelberg_phase(2.0, 1e-6, pulse).phi
        assert phi == pytest.approx(phase_large_amplitude(2.0, pulse), rel=1e-9)

    @pytest.mark.parametrize(
        "slope, gap, phi_f, tau",
        [(2.0, 2.0, 1.0, 3.85), (2.0, 2.0, 8.0, 1.0), (1.3, 3.5, 4.0, 2.2)],
    )
    def test_matches_quadrature(self, slope, gap, phi_f, tau):
        pulse = TrianglePulse(-5.0, phi_f, tau)
        closed = stueckelberg_phase(slope, gap, pulse).phi
        assert closed == pytest.approx(phase_quadrature(slope, gap, pulse), rel=1e-8)

    def test_not_crossed(self):
        with pytest.raises(AnticrossingNotCrossedError):
            stueckelberg_phase(2.0, 2.0, TrianglePulse(-5.0, -1.0, 1.0))

    def test_rejects_start_right_of_crossing(self):
        with pytest.raises(ValidationError):
            stueckelberg_phase(2.0, 2.0, TrianglePulse(1.0, 5.0, 1.0))

    def test_linear_in_tau(self):
        rate = phase_rate(2.0, 2.0, 8.0, -5.0)
        phi = stueckelberg_phase(2.0, 2.0, TrianglePulse(-5.0, 8.0, 2.5)).phi
        assert phi == pytest.approx(2.5 * rate)

    def test_closed_form_broadcasts_over_gaps(self):
        gaps = np.array([0.0, 1.0, 2.0])
        values = phase_closed_form(2.0, gaps, 8.0, 1.0)
        assert values.shape == (3,)
        assert values[0] == pytest.approx(16.0)
        assert np.all(np.diff(values) > 0)


class TestLimits:
    def test_large_amplitude_period(self):
        pulse = TrianglePulse(-5.0, 8.0, 0.638)
        assert phase_large_amplitude(2.0, pulse) == pytest.approx(2 * math.pi, abs=0.01)

    def test_large_amplitude_linear_in_tau(self):
        one = phase_large_amplitude(2.0, TrianglePulse(-5.0, 8.0, 0.6))
        two = phase_large_amplitude(2.0, TrianglePulse(-5.0, 8.0, 1.2))
        assert two == pytest.approx(2.0 * one)

    def test_large_amplitude_close_to_exact(self):
        pulse = TrianglePulse(-5.0, 8.0, 1.0)
        exact = stueckelberg_phase(2.0, 2.0, pulse).phi
        approx = phase_large_amplitude(2.0, pulse)
        assert abs(exact - approx) / exact < 0.12

    def test_extreme_amplitude(self):
        pulse = TrianglePulse(-5.0, 50.0, 1.0)
        assert phase_extreme_amplitude(2.0, pulse) == pytest.approx(100.0)
        assert 2 * math.pi / phase_extreme_amplitude(2.0, pulse) == pytest.approx(
            2 * math.pi / 100.0
        )
        ratio = phase_large_amplitude(2.0, pulse) / phase_extreme_amplitude(2.0, pulse)
        assert ratio == pytest.approx(50.0 / 55.0)

    def test_limit_ordering(self):
        phi_f = np.linspace(3.5, 60.0, 40)
        errors = []
        for value in phi_f:
            pulse = TrianglePulse(-5.0, float(value), 1.0)
            exact = stueckelberg_phase(2.0, 2.0, pulse).phi
            errors.append(abs(exact - phase_large_amplitude(2.0, pulse)) / exact)
        assert np.all(np.diff(errors) < 0)

    def test_regime_flags(self):
        small = amplitude_regime(2.0, 2.0, TrianglePulse(-5.0, 1.0, 1.0))
        large = amplitude_regime(2.0, 2.0, TrianglePulse(-5.0, 8.0, 1.0))
        extreme = amplitude_regime(2.0, 2.0, TrianglePulse(-5.0, 50.0, 1.0))
        assert not small.large_amplitude
        assert large.large_amplitude and not large.extreme_amplitude
        assert extreme.large_amplitude and extreme.extreme_amplitude


class TestPopulation:
    def test_examples(self):
        assert population_from_phase(0.0) == pytest.approx(1.0)
        assert population_from_phase(math.pi) == pytest.approx(0.0)
        assert population_from_phase(2.946) == pytest.approx(0.0096, abs=5e-4)

    def test_bounds_symmetry_and_period(self):
        phi = np.random.default_rng(3).uniform(-50.0, 50.0, 200)
        w = population_from_phase(phi)
        assert np.all((w >= 0) & (w <= 1))
        np.testing.assert_allclose(w, population_from_phase(-phi))
        np.testing.assert_allclose(w, population_from_phase(phi + 2 * math.pi))

    def test_predicted_map(self):
        phi_f = np.array([-1.0, 0.0, 1.0, 2.0])
        tau = np.array([1.0, 3.85])
        values = predicted_population_map(2.0, 2.0, phi_f, tau, -5.0)
        assert values.shape == (2, 4)
        np.testing.assert_array_equal(values[:, :2], 1.0)
        expected = population_from_phase(
            stueckelberg_phase(2.0, 2.0, TrianglePulse(-5.0, 1.0, 3.85)).phi
        )
        assert values[1, 2] == pytest.approx(expected)

    def test_predicted_map_shifted(self):
        phi_f = np.array([7.0, 9.0])
        values = predicted_population_map(2.0, 1.0, phi_f, [1.0], -5.0, location=8.0)
        assert values[0, 0] == 1.0
        expected = population_from_phase(
            stueckelberg_phase(2.0, 1.0, TrianglePulse(-13.0, 1.0, 1.0)).phi
        )
        assert values[0, 1] == pytest.approx(expected)


class TestLandauZener:
    def test_no_gap_is_fully_diabatic(self):
        assert lz_probability(0.0, 2.0, 5.0) == 1.0

    def test_characteristic_rate_gives_one_over_e(self):
        k = characteristic_sweep_rate(2.0, 2.0)
        assert lz_probability(2.0, 2.0, k, LZ_PARTITION_PREFACTOR) == pytest.approx(
            math.exp(-1.0)
        )

    def test_monotone_in_rate(self):
        rates = np.logspace(-2, 3, 30)
        p = [lz_probability(2.0, 2.0, float(k)) for k in rates]
        assert np.all(np.diff(p) > 0)
        assert p[0] < 1e-6

    def test_characteristic_rates(self):
        assert characteristic_sweep_rate(2.0, 2.0) == pytest.approx(4 * math.pi)
        assert characteristic_sweep_rate(8.0, 2.0) == pytest.approx(64 * math.pi)
        assert characteristic_sweep_rate(4.0, 2.0) == pytest.approx(
            4 * characteristic_sweep_rate(2.0, 2.0)
        )

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValidationError):
            lz_probability(1.0, 2.0, 0.0)
        with pytest.raises(ValidationError):
            characteristic_sweep_rate(0.0, 2.0)


@pytest.mark.slow
def test_closed_form_matches_quadrature_on_random_draws():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        gap = rng.uniform(0.5, 10.0)
        slope = rng.uniform(0.5, 4.0)
        pulse = TrianglePulse(
            rng.uniform(-10.0, -1.0), rng.uniform(0.5, 20.0), rng.uniform(0.1, 4.0)
        )
        closed = stueckelberg_phase(slope, gap, pulse).phi
        assert closed == pytest.approx(phase_quadrature(slope, gap, pulse), rel=1e-10)
