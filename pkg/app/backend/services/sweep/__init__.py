"""(Phi_f, tau) parameter sweeps and interference-map artifacts."""

from .codec import CSV_HEADER, read_map_csv, write_map_csv, write_map_pgm
from .engine import extract_column, nearest_index, run_sweep
from .models import GridSpec, InterferenceMap

__all__ = [
    "CSV_HEADER",
    "GridSpec",
    "InterferenceMap",
    "extract_column",
    "nearest_index",
    "read_map_csv",
    "run_sweep",
    "write_map_csv",
    "write_map_pgm",
]
