"""Synthetic data and the similarity experiments.

Every dataset is drawn from ``rng_stream(seed, panel, point, rep)``: first
the signal location (when random), then the noise. The penalized and the
unpenalized procedure see the same dataset.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional, Sequence

import numpy as np

from .calibrate import (CalibrationCache, CalibrationKey, calibrate_both,
                        map_blocks, rng_stream)
from .grid import ApproxSet, GridParams, build_grid
from .identify import decide_single, identify_multi, min_distances, MultiConfig
from .io import write_csv
from .regions import Interval, Rect, Region, hamming_distance, intersects
from .scan import PrefixAggregate, scan_both


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SignalSpec:
    """Planted signals.

    With ``placement="fixed"``, ``regions`` holds ``(region, amplitude)``
    pairs. With ``placement="uniform"``, ``shapes`` holds ``(shape,
    amplitude)`` pairs, where a shape is ``(length,)`` or ``(width,
    height)``, and locations are drawn uniformly; 1D signals are kept at
    least ``min_gap`` apart.
    """

    dim: int = 1
    regions: tuple = ()
    shapes: tuple = ()
    placement: str = "fixed"
    min_gap: int = 0


def _place_1d(n, lengths, gap, rng):
    need = sum(lengths) + gap * (len(lengths) - 1)
    if need > n:
        raise SimulationError(f"signals of total span {need} do not fit in n={n}")
    free = n - need
    k = len(lengths)
    # uniform over all orderly placements with the given gaps
    picks = np.sort(rng.choice(free + k, size=k, replace=False)) - np.arange(k)
    starts = []
    offset = 0
    for L, p in zip(lengths, picks):
        starts.append(int(p) + offset)
        offset += L + gap
    return [Interval(s, s + L) for s, L in zip(starts, lengths)]


def _place(spec: SignalSpec, n: int, rng) -> list:
    if spec.placement == "fixed":
        regions = [r for r, _ in spec.regions]
        for r in regions:
            if not r.fits(n):
                raise SimulationError(f"{r} does not fit in a domain of side {n}")
        return regions
    if spec.placement != "uniform":
        raise SimulationError(f"unknown placement {spec.placement!r}")
    shapes = [s for s, _ in spec.shapes]
    if spec.dim == 1:
        return _place_1d(n, [int(s[0]) for s in shapes], spec.min_gap, rng)
    out = []
    for w, h in shapes:
        if w > n or h > n:
            raise SimulationError(f"{w}x{h} rectangle does not fit in {n}x{n}")
        j1 = int(rng.integers(0, n - w + 1))
        k1 = int(rng.integers(0, n - h + 1))
        out.append(Rect(j1, j1 + w, k1, k1 + h))
    return out


def _check_disjoint(regions):
    for a in range(len(regions)):
        for b in range(a + 1, len(regions)):
            if intersects(regions[a], regions[b]):
                raise SimulationError("planted regions must be disjoint")


def generate_from(spec: SignalSpec, n: int, rng: np.random.Generator):
    """``(data, truths)`` drawing placement and noise from ``rng``."""
    regions = _place(spec, n, rng)
    _check_disjoint(regions)
    amps = [a for _, a in (spec.regions if spec.placement == "fixed" else spec.shapes)]
    data = rng.standard_normal((n,) * spec.dim)
    for r, a in zip(regions, amps):
        if spec.dim == 1:
            data[r.start:r.end] += a
        else:
            data[r.j1:r.j2, r.k1:r.k2] += a
    return data, regions


def generate(spec: SignalSpec, n: int, seed: int, *index: int):
    return generate_from(spec, n, rng_stream(seed, *index))


def strength_rule(n: int, size: int, dim: int = 1) -> float:
    """``mu * sqrt(|I*|)`` used by the ratio sweep: 1.2 times the boundary
    term plus 0.1."""
    return 1.2 * math.sqrt(2.0 * (1.0 + math.log(n**dim / size))) + 0.1


@dataclass(frozen=True)
class ExperimentSpec:
    """Declarative experiment description.

    ``kind`` is ``mu`` (x is ``mu * sqrt(|I*|)``, one panel per shape),
    ``ratio`` (x is ``n / |I*|`` with the strength rule) or ``multi``.
    Shapes are lengths in 1D and ``WxH`` strings in 2D.
    """

    name: str = "custom"
    kind: str = "mu"
    n: int = 10000
    dim: int = 1
    alpha: float = 0.05
    x_values: tuple = (1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0)
    shapes: tuple = ("1000",)
    reps: int = 2000
    seed: int = 2024
    calib_reps: int = 10000
    calib_seed: int = 7
    c: float = 6.0
    zeta: float = 0.5
    min_length: Optional[int] = None
    # multi-signal scenario
    starts: tuple = ()
    strength: float = 6.0
    min_gap: int = 0
    known_k: Optional[int] = None
    null_reps: int = 0

    def __post_init__(self):
        if self.reps < 1:
            raise SimulationError("reps must be >= 1")
        if self.kind != "multi" and not self.x_values:
            raise SimulationError("x_values must be nonempty")
        if self.kind not in ("mu", "ratio", "multi"):
            raise SimulationError(f"unknown experiment kind {self.kind!r}")

    @property
    def grid_params(self) -> GridParams:
        return GridParams(self.n, self.dim, self.c, self.zeta, self.min_length)

    @property
    def calibration_key(self) -> CalibrationKey:
        return CalibrationKey(self.n, self.dim, True, self.alpha, self.calib_reps,
                              self.calib_seed, self.c, self.zeta, self.min_length)

    def describe(self) -> str:
        return "\n".join(f"{k}={_render(v)}" for k, v in asdict(self).items())

    @classmethod
    def from_text(cls, text: str) -> "ExperimentSpec":
        """Parse ``key=value`` lines; ``#`` starts a comment, lists are
        comma separated."""
        types = {f.name: f for f in fields(cls)}
        values = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SimulationError(f"expected key=value, got {raw!r}")
            key, value = (p.strip() for p in line.split("=", 1))
            if key not in types:
                raise SimulationError(f"unknown experiment field {key!r}")
            values[key] = _parse(key, value, cls.__dataclass_fields__[key].default)
        return cls(**values)


def _render(v):
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    return "none" if v is None else str(v)


_FLOAT_TUPLES = {"x_values"}
_INT_TUPLES = {"starts"}
_INT_FIELDS = {"n", "dim", "reps", "seed", "calib_reps", "calib_seed",
               "min_gap", "null_reps"}
_OPT_INT = {"min_length", "known_k"}
_FLOAT_FIELDS = {"alpha", "c", "zeta", "strength"}


def _parse(key, value, default):
    try:
        if key in _FLOAT_TUPLES:
            return tuple(float(v) for v in value.split(",") if v.strip())
        if key in _INT_TUPLES:
            return tuple(int(v) for v in value.split(",") if v.strip())
        if key == "shapes":
            return tuple(v.strip() for v in value.split(",") if v.strip())
        if key in _INT_FIELDS:
            return int(value)
        if key in _OPT_INT:
            return None if value.lower() == "none" else int(value)
        if key in _FLOAT_FIELDS:
            return float(value)
    except ValueError as exc:
        raise SimulationError(f"bad value for {key}: {value!r}") from exc
    return value


def parse_shape(text: str, dim: int) -> tuple:
    parts = [int(p) for p in str(text).lower().split("x")]
    if len(parts) != dim:
        raise SimulationError(f"shape {text!r} does not have {dim} sides")
    return tuple(parts)


FIGURE_PRESETS = {
    "figure1": ExperimentSpec(name="figure1", kind="mu", shapes=("1000", "100")),
    "figure2": ExperimentSpec(
        name="figure2", kind="ratio",
        x_values=(5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0),
    ),
    "figure3": ExperimentSpec(
        name="figure3", kind="mu", n=100, dim=2,
        x_values=(2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0),
        shapes=("30x40", "15x80"),
    ),
    "multi": ExperimentSpec(
        name="multi", kind="multi", shapes=("100",), starts=(1000, 4000, 7000),
        strength=6.0, reps=500, null_reps=2000, x_values=(),
    ),
}


@dataclass
class SimilarityCurve:
    panel: str
    x: np.ndarray
    mean_penalized: np.ndarray
    se_penalized: np.ndarray
    mean_unpenalized: np.ndarray
    se_unpenalized: np.ndarray
    reps: int
    thresholds: tuple = (float("nan"), float("nan"))

    def __len__(self):
        return len(self.x)


def _mean_se(values: np.ndarray):
    m = values.mean(axis=-1)
    if values.shape[-1] > 1:
        se = values.std(axis=-1, ddof=1) / math.sqrt(values.shape[-1])
    else:
        se = np.zeros_like(m)
    return m, se


def thresholds_for(spec: ExperimentSpec, cache: Optional[CalibrationCache] = None,
                   threads: int = 1, aset: Optional[ApproxSet] = None):
    """``(gamma, tau)``: penalized and unpenalized critical values."""
    pen, raw = calibrate_both(spec.calibration_key, cache, threads, aset)
    return pen.quantile, raw.quantile


def _similarity_block(aset, signal, seed, tags, gamma, tau, indices):
    pen = np.empty(len(indices))
    raw = np.empty(len(indices))
    for t, rep in enumerate(indices):
        data, truths = generate(signal, aset.n, seed, *tags, rep)
        both = scan_both(PrefixAggregate.from_data(data), aset)
        truth = truths[0]
        p = decide_single(both.penalized.value, both.penalized.argmax, gamma)
        u = decide_single(both.unpenalized.value, both.unpenalized.argmax, tau)
        pen[t] = 1.0 - hamming_distance(p.region, truth) if p.found else 0.0
        raw[t] = 1.0 - hamming_distance(u.region, truth) if u.found else 0.0
    return pen, raw


def similarity_samples(aset: ApproxSet, shape: tuple, amplitude: float, reps: int,
                       seed: int, tags: tuple, gamma: float, tau: float,
                       threads: int = 1):
    """Per-replicate similarities of both procedures at one design point."""
    signal = SignalSpec(aset.dim, shapes=((shape, amplitude),), placement="uniform")
    return map_blocks(
        lambda b: _similarity_block(aset, signal, seed, tags, gamma, tau, b),
        np.arange(reps), threads,
    )


def _curve(aset, spec, panel_idx, label, points, gamma, tau, threads):
    xs, mp, sp, mu_, su = [], [], [], [], []
    for t, (x, shape, amp) in enumerate(points):
        pen, raw = similarity_samples(aset, shape, amp, spec.reps, spec.seed,
                                      (panel_idx, t), gamma, tau, threads)
        a, b = _mean_se(pen)
        c, d = _mean_se(raw)
        xs.append(x)
        mp.append(a)
        sp.append(b)
        mu_.append(c)
        su.append(d)
    return SimilarityCurve(label, np.array(xs), np.array(mp), np.array(sp),
                           np.array(mu_), np.array(su), spec.reps, (gamma, tau))


def run_curve_mu(spec: ExperimentSpec, gamma: float, tau: float,
                 aset: Optional[ApproxSet] = None, threads: int = 1
                 ) -> list[SimilarityCurve]:
    """One curve per shape; amplitude ``x / sqrt(|I*|)`` at each x."""
    aset = aset if aset is not None else build_grid(spec.grid_params)
    curves = []
    for p, label in enumerate(spec.shapes):
        shape = parse_shape(label, spec.dim)
        size = math.prod(shape)
        points = [(x, shape, x / math.sqrt(size)) for x in spec.x_values]
        curves.append(_curve(aset, spec, p, label, points, gamma, tau, threads))
    return curves


def run_curve_2d(spec: ExperimentSpec, gamma: float, tau: float,
                 aset: Optional[ApproxSet] = None, threads: int = 1):
    if spec.dim != 2:
        raise SimulationError("run_curve_2d needs dim=2")
    return run_curve_mu(spec, gamma, tau, aset, threads)


def run_curve_ratio(spec: ExperimentSpec, gamma: float, tau: float,
                    aset: Optional[ApproxSet] = None, threads: int = 1
                    ) -> list[SimilarityCurve]:
    """Sweep ``n / |I*|`` with ``mu sqrt(|I*|)`` set by ``strength_rule``."""
    if spec.dim != 1:
        raise SimulationError("the ratio sweep is 1D")
    aset = aset if aset is not None else build_grid(spec.grid_params)
    points = []
    for ratio in spec.x_values:
        size = max(1, round(spec.n / ratio))
        amp = strength_rule(spec.n, size) / math.sqrt(size)
        points.append((ratio, (size,), amp))
    return [_curve(aset, spec, 0, "ratio", points, gamma, tau, threads)]


@dataclass
class MultiSummary:
    reps: int
    recovered_fraction: float
    mean_k: float
    se_k: float
    worst_distance_mean: float
    null_reps: int = 0
    null_nonempty_rate: float = float("nan")
    threshold: float = float("nan")
    per_run: list = field(default_factory=list)


def _multi_block(aset, signal, config, gamma, seed, tag, indices):
    k_hat = np.empty(len(indices))
    worst = np.empty(len(indices))
    for t, rep in enumerate(indices):
        data, truths = generate(signal, aset.n, seed, tag, rep)
        est = identify_multi(data, config, aset, gamma)
        k_hat[t] = len(est.regions)
        worst[t] = min_distances(est, truths).max() if truths else 0.0
    return k_hat, worst


def run_multi(spec: ExperimentSpec, gamma: float, aset: Optional[ApproxSet] = None,
              threads: int = 1, tol: float = 0.1) -> MultiSummary:
    """Multi-signal recovery: fraction of runs where every true signal has an
    estimate within distance ``tol``, mean number of selected regions, and
    the nonempty rate on pure-noise data when ``null_reps > 0``."""
    aset = aset if aset is not None else build_grid(spec.grid_params)
    length = parse_shape(spec.shapes[0], 1)[0]
    amp = spec.strength / math.sqrt(length)
    if spec.starts:
        regions = tuple((Interval(s, s + length), amp) for s in spec.starts)
        signal = SignalSpec(1, regions=regions)
    else:
        k = spec.known_k or 1
        signal = SignalSpec(1, shapes=(((length,), amp),) * k, placement="uniform",
                            min_gap=spec.min_gap)
    config = MultiConfig(alpha=spec.alpha, known_k=spec.known_k)
    k_hat, worst = map_blocks(
        lambda b: _multi_block(aset, signal, config, gamma, spec.seed, 0, b),
        np.arange(spec.reps), threads,
    )
    m, se = _mean_se(k_hat)
    summary = MultiSummary(spec.reps, float(np.mean(worst < tol)), float(m), float(se),
                           float(worst.mean()), threshold=gamma)
    summary.per_run = [{"rep": i, "k_hat": int(k), "worst_distance": float(w)}
                       for i, (k, w) in enumerate(zip(k_hat, worst))]
    if spec.null_reps > 0:
        null = SignalSpec(1)
        k0, _ = map_blocks(
            lambda b: _multi_block(aset, null, config, gamma, spec.seed, 1, b),
            np.arange(spec.null_reps), threads,
        )
        summary.null_reps = spec.null_reps
        summary.null_nonempty_rate = float(np.mean(k0 > 0))
    return summary


CURVE_COLUMNS = ("panel", "x", "mean_penalized", "se_penalized",
                 "mean_unpenalized", "se_unpenalized", "reps")


def curve_rows(curves: Sequence[SimilarityCurve]) -> list[dict]:
    rows = []
    for c in curves:
        for i in range(len(c)):
            rows.append({
                "panel": c.panel, "x": float(c.x[i]),
                "mean_penalized": float(c.mean_penalized[i]),
                "se_penalized": float(c.se_penalized[i]),
                "mean_unpenalized": float(c.mean_unpenalized[i]),
                "se_unpenalized": float(c.se_unpenalized[i]),
                "reps": c.reps,
            })
    return rows


def emit_csv(path, columns, rows, meta=None):
    write_csv(path, columns, rows, meta)


def emit_curves(path, curves: Sequence[SimilarityCurve], spec: ExperimentSpec,
                extra_meta: Optional[dict] = None):
    meta = {"experiment": spec.name, "seed": spec.seed}
    if curves:
        meta["gamma"] = repr(curves[0].thresholds[0])
        meta["tau"] = repr(curves[0].thresholds[1])
    meta.update(extra_meta or {})
    meta["spec"] = spec.describe()
    write_csv(path, CURVE_COLUMNS, curve_rows(curves), meta)


def curves_from_rows(rows: Sequence[dict]) -> list[SimilarityCurve]:
    panels: dict[str, list] = {}
    for r in rows:
        panels.setdefault(r["panel"], []).append(r)
    out = []
    for label, rs in panels.items():
        col = lambda k: np.array([float(r[k]) for r in rs])  # noqa: E731
        out.append(SimilarityCurve(label, col("x"), col("mean_penalized"),
                                   col("se_penalized"), col("mean_unpenalized"),
                                   col("se_unpenalized"), int(rs[0]["reps"])))
    return out


def with_overrides(spec: ExperimentSpec, **kw) -> ExperimentSpec:
    return replace(spec, **{k: v for k, v in kw.items() if v is not None})
