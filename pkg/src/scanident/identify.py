"""Single- and multi-signal identification on top of the penalized scan."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .calibrate import CalibrationRecord
from .grid import ApproxSet
from .regions import Region, hamming_distance
from .scan import PrefixAggregate, ScanError, scan_both, scan_max


class CalibrationMissing(LookupError):
    """No critical value available for the requested configuration."""


@dataclass
class Identification:
    """Outcome of a run.

    ``max_stat`` is the largest statistic over the full candidate set (the
    first iteration for multi runs); ``stats`` holds the statistic of each
    selected region in selection order.
    """

    kind: str  # "empty" | "single" | "multi"
    regions: list = field(default_factory=list)
    stats: list = field(default_factory=list)
    max_stat: float = float("-inf")
    threshold_used: float = float("nan")
    stop_stat: Optional[float] = None

    @property
    def found(self) -> bool:
        return self.kind != "empty"

    @property
    def region(self) -> Optional[Region]:
        return self.regions[0] if self.regions else None


@dataclass(frozen=True)
class MultiConfig:
    alpha: float = 0.05
    max_iterations: int = 100
    known_k: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.known_k is not None and self.known_k < 1:
            raise ValueError("known_k must be >= 1")


Calib = Union[CalibrationRecord, float, None]


def _threshold(calib: Calib, alpha: Optional[float] = None) -> float:
    if calib is None:
        raise CalibrationMissing(
            "no critical value: run `scanident calibrate` for this n/dim/alpha first"
        )
    if isinstance(calib, CalibrationRecord):
        if alpha is not None and calib.key.alpha != alpha:
            raise CalibrationMissing(
                f"calibration is for alpha={calib.key.alpha}, requested {alpha}"
            )
        return calib.quantile
    return float(calib)


def _aggregate(data, aset: ApproxSet) -> PrefixAggregate:
    if isinstance(data, PrefixAggregate):
        agg = data
    else:
        agg = PrefixAggregate.from_data(data)
    if agg.dim != aset.dim or agg.n != aset.n:
        raise ScanError(
            f"data shape does not match a {aset.dim}D set with n={aset.n}"
        )
    return agg


def decide_single(value: float, argmax, threshold: float) -> Identification:
    if argmax is None or value < threshold:
        return Identification("empty", max_stat=value, threshold_used=threshold)
    return Identification("single", [argmax], [value], value, threshold)


def identify_single(data, alpha: Optional[float], grid: ApproxSet, calib: Calib,
                    penalized: bool = True) -> Identification:
    """Empty if the scan maximum falls below the critical value, otherwise
    the maximizing candidate.

    ``calib`` is a ``CalibrationRecord`` or a bare threshold. The
    unpenalized variant needs its own (unpenalized) critical value.
    """
    threshold = _threshold(calib, alpha)
    if isinstance(calib, CalibrationRecord) and calib.key.penalized != penalized:
        raise CalibrationMissing("calibration statistic does not match `penalized`")
    res = scan_max(_aggregate(data, grid), grid, penalized=penalized)
    return decide_single(res.value, res.argmax, threshold)


def identify_multi(data, config: MultiConfig, grid: ApproxSet,
                   calib: Calib) -> Identification:
    """Repeatedly take the penalized argmax and drop every candidate that
    meets it, until the maximum falls below the critical value, the set runs
    out, ``max_iterations`` is hit, or ``known_k`` regions are selected."""
    if grid.dim != 1:
        raise ValueError("multi-signal identification is 1D only")
    threshold = _threshold(calib, config.alpha)
    agg = _aggregate(data, grid)
    cap = config.max_iterations
    if config.known_k is not None:
        cap = min(cap, config.known_k)
    selected: list = []
    stats: list = []
    first = None
    stop = None
    while len(selected) < cap:
        res = scan_both(agg, grid, exclude=selected).penalized
        if first is None:
            first = res.value
        if res.argmax is None or res.value < threshold:
            stop = res.value if res.argmax is not None else None
            break
        selected.append(res.argmax)
        stats.append(res.value)
    kind = "multi" if selected else "empty"
    return Identification(kind, selected, stats, first, threshold, stop)


def similarity(est: Identification, truth: Region) -> float:
    if est.kind == "multi":
        raise ValueError("similarity is defined for single results; "
                         "use min_distances for multi results")
    if not est.found:
        return 0.0
    return 1.0 - hamming_distance(est.region, truth)


def min_distances(est: Identification, truths: Sequence[Region]) -> np.ndarray:
    """For each true region, the distance to its closest estimate (1 if none)."""
    out = np.ones(len(truths))
    for t, truth in enumerate(truths):
        for r in est.regions:
            out[t] = min(out[t], hamming_distance(r, truth))
    return out


IDENTIFICATION_COLUMNS_1D = ("iteration", "start", "end", "stat", "threshold")
IDENTIFICATION_COLUMNS_2D = ("iteration", "j1", "j2", "k1", "k2", "stat", "threshold")


def identification_rows(est: Identification) -> list[dict]:
    rows = []
    for i, (r, s) in enumerate(zip(est.regions, est.stats), start=1):
        row = {"iteration": i, "stat": float(s), "threshold": float(est.threshold_used)}
        if hasattr(r, "start"):
            row.update(start=r.start, end=r.end)
        else:
            row.update(j1=r.j1, j2=r.j2, k1=r.k1, k2=r.k2)
        rows.append(row)
    return rows
