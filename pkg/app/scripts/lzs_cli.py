"""lzs: LZS interference maps of a flux qubit and their inverse analysis.

Commands:
    sweep    simulate a (Phi_f, tau) map and write CSV (and PGM)
    trace    time trace of the density matrix for one (Phi_f, tau)
    analyze  slope, gaps, anticrossings and region rates from a map CSV
    fft      per-column FFT table and the 2*pi/T vs Phi_f line
    fit-gap  gap scan on (Phi_f, tau, W_11) points

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional

from app.backend.config import LOG_LEVEL, default_workers
from app.backend.run_config import PRESET_NAMES, RunConfig, resolve_config
from app.backend.services.analysis import (
    AnalysisOptions,
    SpectroscopyFit,
    analyze_map,
    column_spectra,
    fft_linearity,
    fit_gap,
    fit_slope,
    format_report_text,
    fringe_edge,
    select_points,
    write_report,
    write_spectra_csv,
)
from app.backend.services.errors import (
    EXIT_IO,
    EXIT_OK,
    FitError,
    LZSError,
    ValidationError,
)
from app.backend.services.propagator import evolve, write_trajectory_csv
from app.backend.services.qubit_model import TrianglePulse
from app.backend.services.sweep import (
    InterferenceMap,
    read_map_csv,
    run_sweep,
    write_map_csv,
    write_map_pgm,
)

logger = logging.getLogger(__name__)

DEFAULT_TRACE_SAMPLES = 401


def _header_line(config: RunConfig) -> str:
    return json.dumps(config.header(), sort_keys=True, separators=(",", ":"))


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """RunConfig from --preset / --config plus the command-line overrides."""
    overrides: Dict[str, Any] = {}
    if args.out is not None:
        overrides["outputs"] = {"directory": str(args.out)}
    if getattr(args, "pgm", False):
        overrides.setdefault("outputs", {})["pgm"] = True
    config = resolve_config(args.preset, args.config, overrides)
    if args.tolerance is not None:
        # abs_tol は rel_tol との比を保つ
        ratio = config.stepper.abs_tol / config.stepper.rel_tol
        overrides["stepper"] = {
            "rel_tol": args.tolerance,
            "abs_tol": args.tolerance * ratio,
        }
        config = resolve_config(args.preset, args.config, overrides)
    return config


def cmd_sweep(config: RunConfig, workers: int) -> InterferenceMap:
    interference_map = run_sweep(
        config.grid.to_grid(),
        config.spectrum.to_spectrum(),
        config.stepper.to_stepper(),
        workers=workers,
    )
    header = config.header()
    write_map_csv(config.outputs.path("map_csv"), interference_map, header=header)
    if config.outputs.pgm:
        write_map_pgm(config.outputs.path("map_pgm"), interference_map, header=header)
    diagnostics = interference_map.metadata["diagnostics"]
    logger.info(
        f"sweep diagnostics: max trace error {diagnostics['max_trace_error']:.3g}, "
        f"min eigenvalue {diagnostics['min_eigenvalue']:.3g}, "
        f"max purity error {diagnostics['max_purity_error']:.3g}"
    )
    return interference_map


def cmd_trace(
    config: RunConfig, phi_f: float, tau: float, samples: int = DEFAULT_TRACE_SAMPLES
) -> Path:
    if samples < 2:
        raise ValidationError(f"--samples must be >= 2, got {samples}")
    stepper = replace(config.stepper.to_stepper(), trajectory_samples=samples)
    pulse = TrianglePulse(config.grid.phi_i, phi_f, tau)
    result = evolve(config.spectrum.to_spectrum(), pulse, stepper)
    path = write_trajectory_csv(
        config.outputs.path("trace_csv"),
        result.trajectory or [],
        header_comment=_header_line(config),
    )
    print(f"W11(tau) = {result.initial_population:.9g}")
    return path


def _read_map(path: Path, config: Optional[RunConfig]) -> InterferenceMap:
    phi_i = config.grid.phi_i if config is not None else None
    return read_map_csv(path, phi_i=phi_i)


def cmd_analyze(map_path: Path, config: RunConfig) -> SpectroscopyFit:
    interference_map = _read_map(map_path, config)
    fit = analyze_map(interference_map, config.analysis.to_options())
    header = interference_map.metadata.get("config") or config.header()
    write_report(
        config.outputs.path("report_text"),
        config.outputs.path("report_kv"),
        fit,
        header=header,
    )
    print(format_report_text(fit), end="")
    return fit


def cmd_fft(
    map_path: Path,
    config: RunConfig,
    phi_f_min: Optional[float] = None,
    phi_f_ref: Optional[float] = None,
    gap: Optional[float] = None,
) -> None:
    interference_map = _read_map(map_path, config)
    options = config.analysis.to_options()
    if gap is not None:
        options = replace(options, gap_hint=gap)
    if phi_f_min is None:
        edge = fringe_edge(interference_map, options)
        phi_f_min = float(interference_map.phi_f_values[0]) if edge is None else edge
    spectra = column_spectra(interference_map, phi_f_min, options)
    write_spectra_csv(
        config.outputs.path("fft_csv"),
        spectra,
        header=interference_map.metadata.get("config") or config.header(),
    )
    try:
        slope, rms = fft_linearity(interference_map, phi_f_min, options)
        print(f"2pi/T vs Phi_f slope: {slope:.6g} (rms {rms:.3g})")
    except FitError as exc:
        logger.warning(f"{exc}")
    if phi_f_ref is not None:
        slope = fit_slope(interference_map, phi_f_ref, options)
        print(f"slope from Phi_f={phi_f_ref:g}: {slope:.6g}")


def cmd_fit_gap(
    points: List[List[float]],
    slope: float,
    phi_i: float,
    options: AnalysisOptions,
    location: float = 0.0,
) -> float:
    result = fit_gap(
        [(p[0], p[1], p[2]) for p in points], slope, phi_i, options, location
    )
    print(f"gap: {result.gap:.6g}")
    if result.degenerate:
        print("candidates: " + ", ".join(f"{c.gap:.4g}" for c in result.candidates))
    return result.gap


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", choices=PRESET_NAMES, help="named parameter set")
    common.add_argument("--config", type=Path, help="YAML/JSON run config")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument(
        "--tolerance", type=float, help="relative tolerance of the integrator"
    )

    parser = argparse.ArgumentParser(
        prog="lzs", description="LZS interferometry of a flux qubit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", parents=[common], help="simulate a map")
    sweep.add_argument(
        "--workers",
        type=int,
        default=None,
        help="worker processes (default: LZS_WORKERS or CPU count)",
    )
    sweep.add_argument("--pgm", action="store_true", help="also write a PGM heatmap")

    trace = sub.add_parser("trace", parents=[common], help="one time trace")
    trace.add_argument("--phi-f", type=float, required=True, help="mPhi0")
    trace.add_argument("--tau", type=float, required=True, help="ns")
    trace.add_argument("--samples", type=int, default=DEFAULT_TRACE_SAMPLES)

    analyze = sub.add_parser("analyze", parents=[common], help="invert a map")
    analyze.add_argument("map", type=Path, nargs="?", help="map CSV")

    fft = sub.add_parser("fft", parents=[common], help="column FFT table")
    fft.add_argument("map", type=Path, nargs="?", help="map CSV")
    fft.add_argument("--phi-f-min", type=float, help="first column (mPhi0)")
    fft.add_argument("--phi-f-ref", type=float, help="column for the slope estimate")
    fft.add_argument(
        "--gap", type=float, help="Delta (GHz) for the amplitude-regime check"
    )

    gap = sub.add_parser("fit-gap", parents=[common], help="gap scan")
    gap.add_argument(
        "--point",
        nargs=3,
        type=float,
        action="append",
        metavar=("PHI_F", "TAU", "W11"),
        help="measured population; repeat for each point",
    )
    gap.add_argument("--map", type=Path, help="read the points from this map CSV")
    gap.add_argument(
        "--at",
        nargs=2,
        type=float,
        action="append",
        metavar=("PHI_F", "TAU"),
        help="map cell to use (with --map); repeat for each point",
    )
    gap.add_argument("--slope", type=float, required=True, help="l (GHz/mPhi0)")
    gap.add_argument("--phi-i", type=float, help="initial detuning (mPhi0)")
    gap.add_argument("--location", type=float, default=0.0, help="crossing (mPhi0)")
    gap.add_argument(
        "--gap-tolerance", type=float, help="population residual ignored per point"
    )
    return parser


def _run(args: argparse.Namespace) -> int:
    config = load_run_config(args)

    if args.command == "sweep":
        workers = args.workers if args.workers is not None else default_workers()
        cmd_sweep(config, workers)
    elif args.command == "trace":
        cmd_trace(config, args.phi_f, args.tau, args.samples)
    elif args.command == "analyze":
        cmd_analyze(args.map or config.outputs.path("map_csv"), config)
    elif args.command == "fft":
        cmd_fft(
            args.map or config.outputs.path("map_csv"),
            config,
            args.phi_f_min,
            args.phi_f_ref,
            args.gap,
        )
    elif args.command == "fit-gap":
        options = config.analysis.to_options()
        if args.gap_tolerance is not None:
            options = replace(options, gap_tolerance=args.gap_tolerance)
        phi_i = args.phi_i
        points = [list(p) for p in args.point or []]
        if args.map is not None:
            interference_map = _read_map(args.map, config)
            if phi_i is None:
                phi_i = interference_map.phi_i
            points += [list(p) for p in select_points(interference_map, args.at or [])]
        if phi_i is None:
            phi_i = config.grid.phi_i
        if not points:
            raise ValidationError("fit-gap needs --point or --map with --at")
        cmd_fit_gap(points, args.slope, phi_i, options, args.location)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, LOG_LEVEL, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    try:
        return _run(args)
    except LZSError as exc:
        logger.error(f"{exc}")
        return exc.exit_code
    except OSError as exc:
        logger.error(f"I/O failure: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
