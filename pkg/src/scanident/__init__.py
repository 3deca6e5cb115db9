"""Support identification of block and rectangular signals with a penalized
multiscale scan."""

__version__ = "0.1.0"

from .regions import Interval, Rect, hamming_distance, intersects  # noqa: E402
from .grid import (  # noqa: E402
    ApproxSet1D,
    ApproxSet2D,
    GridError,
    GridParams,
    best_approximation,
    build_grid,
    build_grid_1d,
    build_grid_2d,
    grid_stats,
)
from .scan import (  # noqa: E402
    PrefixAggregate,
    ScanError,
    ScanResult,
    penalty,
    scan_both,
    scan_max,
    window_stat,
)
from .calibrate import (  # noqa: E402
    CalibrationCache,
    CalibrationKey,
    CalibrationRecord,
    calibrate,
    null_maxima,
    simulate_null_max,
)
from .identify import (  # noqa: E402
    CalibrationMissing,
    Identification,
    MultiConfig,
    identify_multi,
    identify_single,
    similarity,
)

__all__ = [
    "Interval", "Rect", "hamming_distance", "intersects",
    "ApproxSet1D", "ApproxSet2D", "GridError", "GridParams",
    "best_approximation", "build_grid", "build_grid_1d", "build_grid_2d",
    "grid_stats",
    "PrefixAggregate", "ScanError", "ScanResult", "penalty", "scan_both",
    "scan_max", "window_stat",
    "CalibrationCache", "CalibrationKey", "CalibrationRecord", "calibrate",
    "null_maxima", "simulate_null_max",
    "CalibrationMissing", "Identification", "MultiConfig", "identify_multi",
    "identify_single", "similarity",
]
