import json

import numpy as np
import pytest

from app.backend.services.errors import (
    IntegrationError,
    SchemaError,
    SweepCellError,
    ValidationError,
)
from app.backend.services.propagator import StepperConfig, evolve
from app.backend.services.qubit_model import QubitSpectrum, TrianglePulse
from app.backend.services.sweep import (
    CSV_HEADER,
    GridSpec,
    InterferenceMap,
    extract_column,
    nearest_index,
    read_map_csv,
    run_sweep,
    write_map_csv,
    write_map_pgm,
)
from app.backend.services.sweep import engine

SPECTRUM = QubitSpectrum.two_level(2.0, 2.0)
HEADER = {"grid": {"phi_i": -5.0}}


@pytest.fixture
def small_grid() -> GridSpec:
    return GridSpec(phi_f_range=(-1.0, 4.0, 4), tau_range=(0.2, 1.0, 3), phi_i=-5.0)


class TestGridSpec:
    def test_shape_is_tau_by_phi_f(self, small_grid):
        assert small_grid.shape == (3, 4)
        assert small_grid.cell_count == 12
        np.testing.assert_allclose(small_grid.phi_f_values(), [-1, 2 / 3, 7 / 3, 4])

    def test_single_point_axis(self):
        grid = GridSpec((8.0, 8.0, 1), (1.0, 1.0, 1), -5.0)
        assert grid.shape == (1, 1)
        np.testing.assert_array_equal(grid.tau_values(), [1.0])

    @pytest.mark.parametrize(
        "phi_f_range, tau_range",
        [
            ((-2.0, 10.0, 0), (0.01, 4.0, 10)),
            ((-2.0, 10.0, 10), (0.0, 4.0, 10)),
            ((10.0, -2.0, 10), (0.01, 4.0, 10)),
            ((-2.0, 10.0, 2.5), (0.01, 4.0, 10)),
        ],
    )
    def test_rejects_invalid_axes(self, phi_f_range, tau_range):
        with pytest.raises(ValidationError):
            GridSpec(phi_f_range, tau_range, -5.0)


class TestInterferenceMap:
    def test_rejects_out_of_range_values(self, small_grid):
        values = np.full(small_grid.shape, 0.5)
        values[0, 0] = 1.1
        with pytest.raises(ValidationError):
            InterferenceMap(grid=small_grid, values=values)

    def test_rejects_wrong_shape(self, small_grid):
        with pytest.raises(ValidationError):
            InterferenceMap(grid=small_grid, values=np.zeros((4, 3)))


class TestRunSweep:
    def test_single_cell_equals_evolve(self):
        grid = GridSpec((8.0, 8.0, 1), (1.0, 1.0, 1), -5.0)
        result = run_sweep(grid, SPECTRUM)
        direct = evolve(SPECTRUM, TrianglePulse(-5.0, 8.0, 1.0)).initial_population
        assert result.values[0, 0] == direct

    def test_cells_at_their_own_index(self, small_grid):
        result = run_sweep(small_grid, SPECTRUM)
        phi_f = small_grid.phi_f_values()
        tau = small_grid.tau_values()
        expected = evolve(
            SPECTRUM, TrianglePulse(-5.0, float(phi_f[2]), float(tau[1]))
        ).initial_population
        assert result.values[1, 2] == expected

    def test_worker_count_does_not_change_values(self, small_grid):
        serial = run_sweep(small_grid, SPECTRUM, workers=1)
        parallel = run_sweep(small_grid, SPECTRUM, workers=2, chunksize=1)
        assert np.array_equal(serial.values, parallel.values)

    def test_unreached_crossing_stays_in_left_state(self):
        spectrum = QubitSpectrum.two_level(2.0, 0.2)
        grid = GridSpec((-4.0, -2.0, 3), (0.1, 4.0, 5), -5.0)
        result = run_sweep(grid, spectrum)
        assert np.all(result.values > 0.98)

    def test_metadata(self, small_grid):
        result = run_sweep(small_grid, SPECTRUM)
        diagnostics = result.metadata["diagnostics"]
        assert diagnostics["max_trace_error"] < 1e-8
        assert diagnostics["min_eigenvalue"] > -1e-8
        assert result.metadata["grid"] == small_grid.as_dict()
        assert result.metadata["spectrum"] == SPECTRUM.as_dict()
        assert "timestamp" in result.metadata

    @pytest.mark.slow
    def test_reference_map_stays_physical(self):
        grid = GridSpec((-2.0, 10.0, 25), (0.01, 4.0, 40), -5.0)
        result = run_sweep(grid, SPECTRUM)
        diagnostics = result.metadata["diagnostics"]
        assert diagnostics["max_purity_error"] <= 1e-6
        assert diagnostics["max_trace_error"] <= 1e-8
        assert diagnostics["min_eigenvalue"] >= -1e-8

    def test_failing_cell_is_named(self, small_grid, monkeypatch):
        def failing(spectrum, pulse, config=None, rho0=None):
            if pulse.phi_f > 3.0:
                raise IntegrationError("step size underflow", t_reached=0.42)
            return evolve(spectrum, pulse, config, rho0)

        monkeypatch.setattr(engine, "evolve", failing)
        with pytest.raises(SweepCellError) as excinfo:
            run_sweep(small_grid, SPECTRUM)
        assert excinfo.value.cell == (4.0, 0.2)
        assert excinfo.value.t_reached == 0.42
        assert excinfo.value.exit_code == 3

    def test_unexpected_error_is_named(self, small_grid, monkeypatch):
        def failing(spectrum, pulse, config=None, rho0=None):
            if pulse.tau > 0.5:
                raise ValueError("array must not contain infs or NaNs")
            return evolve(spectrum, pulse, config, rho0)

        monkeypatch.setattr(engine, "evolve", failing)
        with pytest.raises(SweepCellError) as excinfo:
            run_sweep(small_grid, SPECTRUM)
        # phi_f 優先の順序で最初に失敗するセル
        assert excinfo.value.cell == (-1.0, 0.6)
        assert "ValueError" in str(excinfo.value)
        assert excinfo.value.t_reached is None

    def test_rejects_zero_workers(self, small_grid):
        with pytest.raises(ValidationError):
            run_sweep(small_grid, SPECTRUM, workers=0)

    def test_trajectory_sampling_switched_off(self):
        grid = GridSpec((8.0, 8.0, 1), (1.0, 1.0, 1), -5.0)
        result = run_sweep(grid, SPECTRUM, StepperConfig(trajectory_samples=50))
        assert result.metadata["stepper"]["trajectory_samples"] == 0


class TestColumns:
    @pytest.fixture
    def grid_map(self) -> InterferenceMap:
        grid = GridSpec((0.0, 3.0, 4), (0.5, 2.0, 4), -5.0)
        values = np.arange(16, dtype=float).reshape(4, 4) / 16.0
        return InterferenceMap(grid=grid, values=values)

    def test_column_at_node(self, grid_map):
        tau, values = extract_column(grid_map, 2.0)
        np.testing.assert_allclose(tau, [0.5, 1.0, 1.5, 2.0])
        np.testing.assert_allclose(values, grid_map.values[:, 2])

    def test_between_nodes_goes_to_nearest(self, grid_map):
        _, values = extract_column(grid_map, 2.8)
        np.testing.assert_allclose(values, grid_map.values[:, 3])

    def test_tie_goes_to_lower_node(self, grid_map):
        _, values = extract_column(grid_map, 1.5)
        np.testing.assert_allclose(values, grid_map.values[:, 1])

    def test_out_of_range(self, grid_map):
        with pytest.raises(ValidationError):
            extract_column(grid_map, 3.5)

    def test_nearest_index_clamps(self):
        axis = np.array([0.0, 1.0, 2.0])
        assert nearest_index(axis, -5.0) == 0
        assert nearest_index(axis, 9.0) == 2
        assert nearest_index(axis, 0.5) == 0
        assert nearest_index(axis, 0.51) == 1


class TestCsvCodec:
    @pytest.fixture
    def sample_map(self, synthetic_map) -> InterferenceMap:
        return synthetic_map(
            phi_f=np.linspace(-1.0, 6.0, 8), tau=np.linspace(0.1, 2.0, 20)
        )

    def test_layout(self, sample_map, tmp_path):
        path = write_map_csv(tmp_path / "map.csv", sample_map, header=HEADER)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == '# {"grid":{"phi_i":-5.0}}'
        assert lines[1] == ",".join(CSV_HEADER)
        assert len(lines) == 2 + 8 * 20
        # Phi_f 優先, その中で tau 昇順
        first, second = lines[2].split(","), lines[3].split(",")
        assert first[0] == second[0] == "-1"
        assert float(first[1]) < float(second[1])

    def test_round_trip_keeps_nine_digits(self, sample_map, tmp_path):
        path = write_map_csv(tmp_path / "map.csv", sample_map, header=HEADER)
        parsed = read_map_csv(path)
        assert parsed.phi_i == -5.0
        np.testing.assert_allclose(
            parsed.values, sample_map.values, rtol=5e-9, atol=1e-9
        )
        np.testing.assert_allclose(parsed.tau_values, sample_map.tau_values, rtol=5e-9)
        assert parsed.metadata["config"] == HEADER

    def test_phi_i_fallback_without_header(self, sample_map, tmp_path):
        path = write_map_csv(tmp_path / "map.csv", sample_map)
        with pytest.raises(SchemaError):
            read_map_csv(path)
        assert read_map_csv(path, phi_i=-5.0).phi_i == -5.0

    def test_header_phi_i_wins(self, sample_map, tmp_path):
        path = write_map_csv(tmp_path / "map.csv", sample_map, header=HEADER)
        assert read_map_csv(path, phi_i=-3.0).phi_i == -5.0

    def test_non_numeric_cell_names_location(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "phi_f_mPhi0,tau_ns,population\n1,0.5,0.2\n1,1.0,abc\n", encoding="utf-8"
        )
        with pytest.raises(SchemaError) as excinfo:
            read_map_csv(path, phi_i=-5.0)
        assert excinfo.value.row == 3
        assert excinfo.value.column == "population"

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,0.5,0.2\n", encoding="utf-8")
        with pytest.raises(SchemaError) as excinfo:
            read_map_csv(path, phi_i=-5.0)
        assert excinfo.value.row == 1

    def test_incomplete_grid(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "phi_f_mPhi0,tau_ns,population\n1,0.5,0.2\n1,1.0,0.3\n2,0.5,0.4\n",
            encoding="utf-8",
        )
        with pytest.raises(SchemaError):
            read_map_csv(path, phi_i=-5.0)

    def test_missing_file_is_os_error(self, tmp_path):
        with pytest.raises(OSError):
            read_map_csv(tmp_path / "missing.csv", phi_i=-5.0)


class TestPgm:
    def test_layout(self, tmp_path):
        grid = GridSpec((0.0, 1.0, 2), (1.0, 2.0, 2), -5.0)
        values = np.array([[0.0, 1.0], [0.5, 0.25]])
        path = write_map_pgm(
            tmp_path / "map.pgm", InterferenceMap(grid=grid, values=values), {"a": 1}
        )
        lines = path.read_text(encoding="ascii").splitlines()
        assert lines[0] == "P2"
        assert json.loads(lines[1][2:]) == {"a": 1}
        assert lines[2] == "2 2"
        assert lines[3] == "65535"
        # 上の行ほど tau が大きい
        assert lines[4] == "32768 16384"
        assert lines[5] == "0 65535"
