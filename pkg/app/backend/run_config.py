"""Run configuration: presets, YAML/JSON files and CLI overrides.

Resolution order is preset -> config file -> command-line flags. The resolved
config (minus run-only settings such as the worker count) is embedded in every
artifact header so a map can be regenerated from its own file.
"""

from __future__ import annotations

import copy
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError

from app.backend.config import OUTPUT_DIR
from app.backend.services.analysis import AnalysisOptions
from app.backend.services.errors import ConfigError, LZSError
from app.backend.services.propagator import StepperConfig
from app.backend.services.qubit_model import Anticrossing, QubitSpectrum
from app.backend.services.sweep import GridSpec

logger = logging.getLogger(__name__)

PresetName = Literal["fig1b", "fig4a", "fig4b", "fig4c"]
PRESET_NAMES: Tuple[str, ...] = ("fig1b", "fig4a", "fig4b", "fig4c")

_ONE_LEVEL_GRID = {
    "phi_i": -5.0,
    "phi_f_min": -2.0,
    "phi_f_max": 10.0,
    "phi_f_count": 240,
    "tau_min": 0.01,
    "tau_max": 4.0,
    "tau_count": 400,
}
# 三準位: 二つ目の交差 (8 mPhi0) の先まで見えるように Phi_f を広げる
_THREE_LEVEL_GRID = dict(_ONE_LEVEL_GRID, phi_f_max=14.0, phi_f_count=320)

PRESETS: Dict[str, Dict[str, Any]] = {
    # 二準位, l = 2 GHz/mPhi0, Delta = 2 GHz, Phi_i = -5 mPhi0
    "fig1b": {
        "spectrum": {"slope": 2.0, "gaps": [2.0], "locations": [0.0]},
        "grid": _ONE_LEVEL_GRID,
    },
    # Delta13 : Delta12 = 10
    "fig4a": {
        "spectrum": {"slope": 2.0, "gaps": [1.0, 10.0], "locations": [0.0, 8.0]},
        "grid": _THREE_LEVEL_GRID,
    },
    # Delta13 : Delta12 = 4
    "fig4b": {
        "spectrum": {"slope": 2.0, "gaps": [2.0, 8.0], "locations": [0.0, 8.0]},
        "grid": _THREE_LEVEL_GRID,
    },
    # Delta13 : Delta12 = 1/4
    "fig4c": {
        "spectrum": {"slope": 2.0, "gaps": [8.0, 2.0], "locations": [0.0, 8.0]},
        "grid": _THREE_LEVEL_GRID,
    },
}


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SpectrumConfig(_Section):
    """Spectrum section; ``gaps[i]`` belongs to the crossing at ``locations[i]``."""

    slope: float = 2.0
    gaps: List[float] = Field(default_factory=lambda: [2.0])
    locations: Optional[List[float]] = None
    branch_slopes: Optional[List[Optional[float]]] = None

    @field_validator("slope")
    @classmethod
    def validate_slope(cls, value: float) -> float:
        if not (math.isfinite(value) and value > 0):
            raise ValueError("slope must be a positive finite number")
        return value

    @field_validator("gaps")
    @classmethod
    def validate_gaps(cls, value: List[float]) -> List[float]:
        if len(value) not in (1, 2):
            raise ValueError("gaps needs 1 (two-level) or 2 (three-level) entries")
        if any(not math.isfinite(g) or g < 0 for g in value):
            raise ValueError("gaps must be finite and >= 0")
        return value

    @model_validator(mode="after")
    def validate_lengths(self) -> "SpectrumConfig":
        n = len(self.gaps)
        if self.locations is None:
            self.locations = [0.0, 8.0][:n]
        for name in ("locations", "branch_slopes"):
            values = getattr(self, name)
            if values is not None and len(values) != n:
                raise ValueError(f"{name} must have as many entries as gaps ({n})")
        return self

    def to_spectrum(self) -> QubitSpectrum:
        branch_slopes = self.branch_slopes or [None] * len(self.gaps)
        crossings = tuple(
            Anticrossing(location, gap, branch)
            for location, gap, branch in zip(self.locations, self.gaps, branch_slopes)
        )
        return QubitSpectrum(self.slope, crossings)


class GridConfig(_Section):
    phi_i: float = -5.0
    phi_f_min: float = -2.0
    phi_f_max: float = 10.0
    phi_f_count: int = 240
    tau_min: float = 0.01
    tau_max: float = 4.0
    tau_count: int = 400

    @field_validator("phi_f_count", "tau_count")
    @classmethod
    def validate_count(cls, value: int) -> int:
        if value < 1:
            raise ValueError("grid counts must be >= 1")
        return value

    @field_validator("tau_min")
    @classmethod
    def validate_tau_min(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("tau_min must be > 0")
        return value

    def to_grid(self) -> GridSpec:
        return GridSpec(
            phi_f_range=(self.phi_f_min, self.phi_f_max, self.phi_f_count),
            tau_range=(self.tau_min, self.tau_max, self.tau_count),
            phi_i=self.phi_i,
        )


class StepperSettings(_Section):
    method: Literal["adaptive", "rk4"] = "adaptive"
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    max_step: Optional[float] = None
    initial_step: Optional[float] = None
    fixed_step: float = 1e-4
    adaptive_pair: Literal["DOP853", "RK45"] = "DOP853"
    trajectory_samples: int = 0

    @field_validator("rel_tol", "abs_tol", "fixed_step")
    @classmethod
    def validate_positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("must be > 0")
        return value

    def to_stepper(self) -> StepperConfig:
        values = self.model_dump()
        if values["max_step"] is None:
            values["max_step"] = math.inf
        return StepperConfig(**values)


class OutputConfig(_Section):
    """Artifacts to write; file names are relative to ``directory``."""

    directory: Optional[str] = None
    map_csv: str = "map.csv"
    pgm: bool = False
    map_pgm: str = "map.pgm"
    trace_csv: str = "trace.csv"
    report_text: str = "report.txt"
    report_kv: str = "report.kv"
    fft_csv: str = "fft.csv"

    def resolve_directory(self) -> Path:
        return Path(self.directory) if self.directory else OUTPUT_DIR

    def path(self, name: str) -> Path:
        return self.resolve_directory() / getattr(self, name)


class AnalysisSettings(_Section):
    variance_threshold: float = 1e-3
    edge_baseline: int = 3
    edge_factor: float = 10.0
    distortion_threshold: float = 0.2
    bend_rms_ratio: float = 0.6
    bend_floor: float = 0.05
    fringe_window: int = 41
    min_cycles: float = 2.0
    fft_window: str = "flat"
    pad_factor: int = 1
    gap_tolerance: float = 0.1
    gap_scan: Tuple[float, float] = (12.0, 0.01)
    residual_threshold: float = 1e-3
    slope_reference: Optional[float] = None
    gap_points: List[Tuple[float, float]] = Field(
        default_factory=lambda: [(1.0, 3.85), (2.0, 3.85)]
    )
    gap_hint: Optional[float] = None
    refine_location: bool = True

    def to_options(self) -> AnalysisOptions:
        values = self.model_dump()
        values["gap_points"] = tuple(tuple(p) for p in values["gap_points"])
        values["gap_scan"] = tuple(values["gap_scan"])
        return AnalysisOptions(**values)


class RunConfig(_Section):
    preset: Optional[PresetName] = None
    spectrum: SpectrumConfig = Field(default_factory=SpectrumConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    stepper: StepperSettings = Field(default_factory=StepperSettings)
    outputs: OutputConfig = Field(default_factory=OutputConfig)
    analysis: AnalysisSettings = Field(default_factory=AnalysisSettings)

    def header(self) -> Dict[str, Any]:
        """Artifact header: the resolved config without the output section."""
        return self.model_dump(mode="json", exclude={"outputs"})


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def preset_values(name: str) -> Dict[str, Any]:
    if name not in PRESETS:
        raise ConfigError(
            f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}"
        )
    return copy.deepcopy(PRESETS[name])


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a YAML (or JSON) config file into a plain dict.

    Raises:
        OSError: file cannot be read
        ConfigError: file is not a mapping or not valid YAML
    """
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config file {path}: {exc}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a mapping")
    return data


def _format_errors(exc: PydanticValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(p) for p in error["loc"])
        parts.append(f"{location}: {error['msg']}")
    return "; ".join(parts)


def resolve_config(
    preset: Optional[str] = None,
    config_path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """Merge preset, file and flag values into a validated RunConfig.

    A ``preset`` key inside the file is honoured when no preset is passed.

    Raises:
        ConfigError: unknown preset or invalid values
        OSError: config file cannot be read
    """
    file_values = load_config_file(config_path) if config_path else {}
    name = preset or file_values.get("preset")
    values: Dict[str, Any] = preset_values(name) if name else {}
    values = _merge(values, file_values)
    values = _merge(values, overrides or {})
    if name:
        values["preset"] = name
    try:
        config = RunConfig.model_validate(values)
    except PydanticValidationError as exc:
        raise ConfigError(f"invalid run config: {_format_errors(exc)}")
    # ドメイン側の検証 (GridSpec, QubitSpectrum など) もここで走らせる
    try:
        config.spectrum.to_spectrum()
        config.grid.to_grid()
        config.stepper.to_stepper()
        config.analysis.to_options()
    except LZSError as exc:
        raise ConfigError(f"invalid run config: {exc}")
    logger.debug(f"resolved run config: {config.header()}")
    return config
