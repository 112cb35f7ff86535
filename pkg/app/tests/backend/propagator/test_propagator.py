import csv
import math
from dataclasses import replace

import numpy as np
import pytest

from app.backend.services.analytic import (
    LZ_CALIBRATED_PREFACTOR,
    LZ_PARTITION_PREFACTOR,
    lz_probability,
)
from app.backend.services.errors import ValidationError
from app.backend.services.propagator import (
    StepperConfig,
    diagnose,
    evolve,
    evolve_fixed_rk4,
    evolve_hamiltonian,
    initial_state,
    liouville_rhs,
    single_passage_probability,
    write_trajectory_csv,
)
from app.backend.services.qubit_model import QubitSpectrum, TrianglePulse


class TestInitialState:
    def test_two_level(self):
        np.testing.assert_array_equal(initial_state(2), [[1, 0], [0, 0]])

    def test_three_level(self):
        rho = initial_state(3)
        np.testing.assert_array_equal(np.diag(rho), [1, 0, 0])
        assert np.trace(rho) == 1

    def test_rejects_other_dimensions(self):
        with pytest.raises(ValidationError):
            initial_state(4)


class TestLiouvilleRhs:
    def test_commuting_operators(self):
        h = np.diag([1.0, -1.0]).astype(complex)
        rho = np.diag([0.3, 0.7]).astype(complex)
        np.testing.assert_array_equal(liouville_rhs(h, rho), np.zeros((2, 2)))

    def test_coupling_on_ground_state(self):
        h = np.array([[0.0, 2.0], [2.0, 0.0]], dtype=complex)
        out = liouville_rhs(h, initial_state(2))
        np.testing.assert_allclose(np.diag(out), [0.0, 0.0])
        assert out[0, 1] == pytest.approx(2.0j)
        assert out[1, 0] == pytest.approx(-2.0j)

    def test_random_hermitian_pairs(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            h = a + a.conj().T
            rho = b @ b.conj().T
            out = liouville_rhs(h, rho / np.trace(rho))
            assert abs(np.trace(out)) < 1e-12
            np.testing.assert_allclose(out, out.conj().T, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            liouville_rhs(np.eye(2), np.eye(3))


class TestEvolve:
    def test_zero_gap_never_mixes(self):
        spectrum = QubitSpectrum.two_level(2.0, 0.0)
        result = evolve(spectrum, TrianglePulse(-5.0, 8.0, 1.3))
        assert result.initial_population == pytest.approx(1.0, abs=1e-10)

    def test_static_rabi_identity(self):
        gap = 2.0
        h = np.array([[0.0, gap], [gap, 0.0]])
        result = evolve_hamiltonian(
            lambda t: h, (0.0, math.pi / 4), StepperConfig(), initial_state(2)
        )
        assert result.initial_population == pytest.approx(0.0, abs=1e-8)

    def test_matches_fixed_step_oracle(self):
        spectrum = QubitSpectrum.two_level(2.0, 2.0)
        pulse = TrianglePulse(-5.0, 8.0, 1.0)
        adaptive = evolve(spectrum, pulse).initial_population
        oracle = evolve_fixed_rk4(spectrum, pulse, step=1e-4).initial_population
        assert adaptive == pytest.approx(oracle, abs=1e-6)

    @pytest.mark.slow
    def test_matches_oracle_on_random_parameters(self):
        rng = np.random.default_rng(2024)
        for _ in range(10):
            slope = rng.uniform(1.0, 3.0)
            gap = rng.uniform(0.5, 4.0)
            pulse = TrianglePulse(-5.0, rng.uniform(1.0, 10.0), rng.uniform(0.1, 4.0))
            spectrum = QubitSpectrum.two_level(slope, gap)
            adaptive = evolve(spectrum, pulse).initial_population
            oracle = evolve_fixed_rk4(spectrum, pulse, step=1e-5).initial_population
            assert adaptive == pytest.approx(oracle, abs=1e-6)

    @pytest.mark.parametrize("phi_f, tau", [(2.0, 0.5), (8.0, 2.0), (10.0, 4.0)])
    def test_halving_tolerances_barely_moves_the_population(self, phi_f, tau):
        spectrum = QubitSpectrum.two_level(2.0, 2.0)
        pulse = TrianglePulse(-5.0, phi_f, tau)
        config = StepperConfig(rel_tol=1e-7, abs_tol=1e-9)
        tighter = config.with_tolerance(0.5 * config.rel_tol)
        loose = evolve(spectrum, pulse, config).initial_population
        tight = evolve(spectrum, pulse, tighter).initial_population
        assert abs(loose - tight) < 10 * config.rel_tol

    def test_three_level_state_stays_physical(self):
        spectrum = QubitSpectrum.three_level(2.0, gap12=2.0, gap13=8.0)
        result = evolve(spectrum, TrianglePulse(-5.0, 12.0, 1.5))
        diag = diagnose(result.final_state)
        assert diag.is_physical(1e-8)
        assert diag.purity == pytest.approx(1.0, abs=1e-7)
        assert result.step_count > 0

    def test_rejects_wrong_initial_state(self):
        spectrum = QubitSpectrum.two_level(2.0, 2.0)
        with pytest.raises(ValidationError):
            evolve(spectrum, TrianglePulse(-5.0, 8.0, 1.0), rho0=initial_state(3))

    def test_rk4_method_routes_to_fixed_step(self):
        spectrum = QubitSpectrum.two_level(2.0, 2.0)
        pulse = TrianglePulse(-5.0, 3.0, 0.5)
        config = StepperConfig(method="rk4", fixed_step=1e-3)
        result = evolve(spectrum, pulse, config)
        assert result.rhs_eval_count == 4 * result.step_count
        assert result.step_count == 500


class TestTrajectory:
    @pytest.fixture
    def result(self):
        spectrum = QubitSpectrum.two_level(2.0, 2.0)
        config = StepperConfig(trajectory_samples=101)
        return evolve(spectrum, TrianglePulse(-5.0, 8.0, 1.0), config)

    def test_samples_cover_the_pulse(self, result):
        times = [t for t, _ in result.trajectory]
        assert len(times) == 101
        assert times[0] == 0.0
        assert times[-1] == pytest.approx(1.0)

    def test_trace_preserved_along_trajectory(self, result):
        for _, rho in result.trajectory:
            assert abs(np.trace(rho) - 1.0) < 1e-8

    def test_last_sample_is_final_state(self, result):
        np.testing.assert_allclose(
            result.trajectory[-1][1], result.final_state, atol=1e-9
        )

    def test_sampling_does_not_change_final_state(self, result):
        spectrum = QubitSpectrum.two_level(2.0, 2.0)
        plain = evolve(spectrum, TrianglePulse(-5.0, 8.0, 1.0))
        assert plain.initial_population == result.initial_population

    def test_csv(self, result, tmp_path):
        path = write_trajectory_csv(tmp_path / "trace.csv", result.trajectory, "x")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "# x"
        rows = list(csv.reader(lines[1:]))
        assert rows[0] == ["t_ns", "W11", "W22", "re_W12", "im_W12", "trace"]
        assert len(rows) == 102
        assert all(abs(float(r[-1]) - 1.0) < 1e-8 for r in rows[1:])

    def test_empty_trajectory_is_invalid_input(self, tmp_path):
        with pytest.raises(ValidationError):
            write_trajectory_csv(tmp_path / "trace.csv", [])


class TestStepperConfig:
    def test_rejects_unknown_method(self):
        with pytest.raises(ValidationError):
            StepperConfig(method="euler")

    def test_rejects_single_sample(self):
        with pytest.raises(ValidationError):
            StepperConfig(trajectory_samples=1)

    def test_with_tolerance_keeps_ratio(self):
        config = StepperConfig().with_tolerance(1e-7)
        assert config.rel_tol == 1e-7
        assert config.abs_tol == pytest.approx(1e-9)

    def test_as_dict_is_json_safe(self):
        values = StepperConfig().as_dict()
        assert values["max_step"] is None
        assert replace(StepperConfig(), max_step=0.1).as_dict()["max_step"] == 0.1


class TestLandauZenerCalibration:
    def test_single_passage_matches_calibrated_prefactor(self):
        gap, slope, rate = 1.0, 2.0, 5.0
        numeric = single_passage_probability(gap, slope, rate, span=40.0)
        calibrated = lz_probability(gap, slope, rate, LZ_CALIBRATED_PREFACTOR)
        partition = lz_probability(gap, slope, rate, LZ_PARTITION_PREFACTOR)
        assert numeric == pytest.approx(calibrated, abs=0.02)
        assert abs(numeric - partition) > 0.1

    def test_rejects_non_positive_rate(self):
        with pytest.raises(ValidationError):
            single_passage_probability(1.0, 2.0, 0.0, span=10.0)


def test_fixed_rk4_is_fourth_order():
    # τ/2 = 0.32 はどの刻みでも割り切れる
    spectrum = QubitSpectrum.two_level(2.0, 2.0)
    pulse = TrianglePulse(-5.0, 3.0, 0.64)
    reference = evolve_fixed_rk4(spectrum, pulse, 0.00125).final_state
    coarse = evolve_fixed_rk4(spectrum, pulse, 0.01).final_state
    fine = evolve_fixed_rk4(spectrum, pulse, 0.005).final_state
    ratio = np.max(np.abs(coarse - reference)) / np.max(np.abs(fine - reference))
    assert 8.0 <= ratio <= 32.0
