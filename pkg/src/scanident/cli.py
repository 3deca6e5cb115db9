"""Command line entry point: ``scanident {calibrate,identify,simulate,grid-stats}``."""

from __future__ import annotations

import argparse
from dataclasses import replace
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibrate import (DEFAULT_REPS, CalibrationCache, CalibrationError,
                        CalibrationKey, calibrate_both)
from .grid import GridError, GridParams, build_grid, grid_stats, grid_stats_rows, \
    GRID_STATS_COLUMNS
from .identify import (IDENTIFICATION_COLUMNS_1D, IDENTIFICATION_COLUMNS_2D,
                       MultiConfig, identification_rows, identify_multi,
                       identify_single)
from .io import render_csv, write_csv
from .scan import ScanError
from .simulate import (FIGURE_PRESETS, ExperimentSpec, SimulationError,
                       emit_curves, run_curve_mu, run_curve_ratio, run_multi,
                       with_overrides)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_IO = 4
EXIT_NO_CALIBRATION = 5


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _alpha(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"alpha must be in (0, 1), got {text}")
    return v


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _add_grid_flags(p, n_required=True):
    p.add_argument("--n", type=int, required=n_required, default=None,
                   help="sequence length / grid side")
    p.add_argument("--dim", type=int, choices=(1, 2), default=1)
    p.add_argument("--c", type=float, default=6.0, help="grid resolution constant")
    p.add_argument("--zeta", type=float, default=0.5, help="grid resolution exponent")
    p.add_argument("--min-length", type=_positive_int, default=None,
                   help="drop candidates shorter than this")


def _add_calib_flags(p):
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--reps", type=_positive_int, default=DEFAULT_REPS,
                   help="Monte Carlo replicates for the critical value")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--cache", type=Path, default=None,
                   help="calibration cache file (default: $SCANIDENT_CACHE or "
                        "~/.cache/scanident/calibration.tsv)")
    p.add_argument("--threads", type=_positive_int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scanident", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="simulate and cache a critical value")
    _add_grid_flags(p)
    _add_calib_flags(p)
    p.add_argument("--unpenalized", action="store_true",
                   help="print the unpenalized critical value instead")

    p = sub.add_parser("identify", help="identify signal support in a data file")
    _add_grid_flags(p, n_required=False)
    _add_calib_flags(p)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--multi", action="store_true", help="multi-signal procedure")
    p.add_argument("--known-k", type=_positive_int, default=None,
                   help="stop the multi procedure after this many signals")
    p.add_argument("--max-iterations", type=_positive_int, default=100)
    p.add_argument("--negate", action="store_true",
                   help="negate the input (for negative amplitudes)")
    p.add_argument("--unpenalized", action="store_true")

    p = sub.add_parser("simulate", help="run a similarity experiment")
    p.add_argument("experiment", choices=(*FIGURE_PRESETS, "custom"))
    p.add_argument("--spec-file", type=Path, default=None,
                   help="key=value experiment description (custom)")
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--reps", type=_positive_int, default=None,
                   help="replicates per design point")
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--calib-reps", type=_positive_int, default=None)
    p.add_argument("--calib-seed", type=_seed, default=None)
    p.add_argument("--auto-calibrate", action="store_true",
                   help="compute missing critical values instead of failing")
    p.add_argument("--cache", type=Path, default=None)
    p.add_argument("--threads", type=_positive_int, default=1)

    p = sub.add_parser("grid-stats", help="per-scale candidate counts")
    _add_grid_flags(p)
    p.add_argument("--output", type=Path, default=None)
    return parser


def _grid_params(args, n=None) -> GridParams:
    try:
        return GridParams(n if n is not None else args.n, args.dim, args.c,
                          args.zeta, args.min_length)
    except GridError as exc:
        raise CliError(str(exc), EXIT_USAGE)


def _key(args, params) -> CalibrationKey:
    try:
        return CalibrationKey(params.n, params.dim, True, args.alpha, args.reps,
                              args.seed, params.c, params.zeta, params.min_length)
    except CalibrationError as exc:
        raise CliError(str(exc), EXIT_USAGE)


def _cache(args) -> CalibrationCache:
    return CalibrationCache(args.cache)


def cmd_calibrate(args) -> int:
    params = _grid_params(args)
    key = _key(args, params)
    try:
        pen, raw = calibrate_both(key, _cache(args), args.threads)
    except OSError as exc:
        raise CliError(f"calibration failed: {exc}", EXIT_IO)
    rec = raw if args.unpenalized else pen
    print(repr(rec.quantile))
    print(f"status={rec.status}", file=sys.stderr)
    return EXIT_OK


def read_data(path: Path, dim: int) -> np.ndarray:
    try:
        text = path.read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO)
    rows = []
    seen_header = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([float(v) for v in line.split(",")])
        except ValueError:
            if not rows and not seen_header:
                seen_header = True  # a single leading header line is allowed
                continue
            raise CliError(f"{path}:{lineno}: not numeric: {line[:40]!r}", EXIT_DATA)
    if not rows:
        raise CliError(f"{path}: no data", EXIT_DATA)
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise CliError(f"{path}: ragged rows", EXIT_DATA)
    arr = np.array(rows)
    if dim == 1:
        if arr.shape[1] != 1:
            raise CliError(f"{path}: 1D input needs one value per line", EXIT_DATA)
        arr = arr[:, 0]
    elif arr.shape[0] != arr.shape[1]:
        raise CliError(f"{path}: 2D input must be square, got {arr.shape}", EXIT_DATA)
    if not np.all(np.isfinite(arr)):
        raise CliError(f"{path}: non-finite values", EXIT_DATA)
    return arr


def cmd_identify(args) -> int:
    if args.multi and args.dim != 1:
        raise CliError("--multi is only supported for 1D input", EXIT_USAGE)
    data = read_data(args.input, args.dim)
    n = data.shape[0]
    if args.n is not None and args.n != n:
        raise CliError(f"--n={args.n} but the input has n={n}", EXIT_DATA)
    if args.negate:
        data = -data
    params = _grid_params(args, n)
    key = _key(args, params)
    if args.unpenalized:
        key = replace(key, penalized=False)
    try:
        rec = _cache(args).lookup(key)
    except (OSError, CalibrationError) as exc:
        raise CliError(f"cannot read calibration cache: {exc}", EXIT_IO)
    if rec is None:
        raise CliError(
            f"no calibration for n={n} dim={args.dim} alpha={args.alpha} "
            f"reps={args.reps} seed={args.seed}; run `scanident calibrate` first",
            EXIT_NO_CALIBRATION,
        )
    aset = build_grid(params)
    try:
        if args.multi:
            est = identify_multi(data, MultiConfig(args.alpha, args.max_iterations,
                                                   args.known_k), aset, rec)
        else:
            est = identify_single(data, args.alpha, aset, rec,
                                  penalized=not args.unpenalized)
    except ScanError as exc:
        raise CliError(str(exc), EXIT_DATA)
    columns = IDENTIFICATION_COLUMNS_1D if args.dim == 1 else IDENTIFICATION_COLUMNS_2D
    meta = {
        "found": "true" if est.found else "false",
        "kind": est.kind,
        "max_stat": repr(est.max_stat),
        "threshold": repr(est.threshold_used),
        "params": (f"n={n} dim={args.dim} alpha={args.alpha} reps={args.reps} "
                   f"seed={args.seed} c={args.c} zeta={args.zeta} "
                   f"min_length={args.min_length} multi={args.multi} "
                   f"known_k={args.known_k} negate={args.negate} "
                   f"penalized={not args.unpenalized}"),
    }
    try:
        write_csv(args.output, columns, identification_rows(est), meta)
    except OSError as exc:
        raise CliError(f"cannot write {args.output}: {exc}", EXIT_IO)
    print(f"found={'true' if est.found else 'false'} regions={len(est.regions)}")
    return EXIT_OK


def _experiment(args) -> tuple[ExperimentSpec, str | None]:
    text = None
    if args.experiment == "custom":
        if args.spec_file is None:
            raise CliError("custom experiments need --spec-file", EXIT_USAGE)
        try:
            text = args.spec_file.read_text()
        except OSError as exc:
            raise CliError(f"cannot read {args.spec_file}: {exc}", EXIT_IO)
        try:
            spec = ExperimentSpec.from_text(text)
        except (SimulationError, TypeError) as exc:
            raise CliError(f"bad experiment spec: {exc}", EXIT_USAGE)
    else:
        spec = FIGURE_PRESETS[args.experiment]
    try:
        spec = with_overrides(spec, reps=args.reps, seed=args.seed,
                              calib_reps=args.calib_reps, calib_seed=args.calib_seed)
    except SimulationError as exc:
        raise CliError(str(exc), EXIT_USAGE)
    return spec, text


def cmd_simulate(args) -> int:
    spec, spec_text = _experiment(args)
    try:
        key = spec.calibration_key
    except CalibrationError as exc:
        raise CliError(str(exc), EXIT_USAGE)
    cache = _cache(args)
    if not args.auto_calibrate:
        try:
            have = cache.lookup(key) is not None and cache.lookup(
                replace(key, penalized=False)) is not None
        except (OSError, CalibrationError) as exc:
            raise CliError(f"cannot read calibration cache: {exc}", EXIT_IO)
        if not have:
            raise CliError(
                f"no calibration for n={spec.n} dim={spec.dim} alpha={spec.alpha} "
                f"reps={spec.calib_reps} seed={spec.calib_seed}; calibrate first or "
                "pass --auto-calibrate", EXIT_NO_CALIBRATION)
    aset = build_grid(spec.grid_params)
    pen, raw = calibrate_both(key, cache, args.threads, aset)
    meta = {"spec_file": spec_text} if spec_text is not None else {}
    try:
        if spec.kind == "multi":
            summary = run_multi(spec, pen.quantile, aset, args.threads)
            rows = [{
                "reps": summary.reps,
                "recovered_fraction": summary.recovered_fraction,
                "mean_k": summary.mean_k, "se_k": summary.se_k,
                "worst_distance_mean": summary.worst_distance_mean,
                "null_reps": summary.null_reps,
                "null_nonempty_rate": summary.null_nonempty_rate,
                "threshold": summary.threshold,
            }]
            meta.update({"experiment": spec.name, "seed": spec.seed,
                         "spec": spec.describe()})
            write_csv(args.output, list(rows[0]), rows, meta)
        else:
            run = run_curve_ratio if spec.kind == "ratio" else run_curve_mu
            curves = run(spec, pen.quantile, raw.quantile, aset, args.threads)
            emit_curves(args.output, curves, spec, meta)
    except SimulationError as exc:
        raise CliError(str(exc), EXIT_USAGE)
    except OSError as exc:
        raise CliError(f"cannot write {args.output}: {exc}", EXIT_IO)
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_grid_stats(args) -> int:
    params = _grid_params(args)
    stats = grid_stats(build_grid(params))
    meta = {"params": f"n={params.n} dim={params.dim} c={params.c} "
                      f"zeta={params.zeta} min_length={params.min_length}",
            "total": stats.total, "raw_total": stats.raw_total,
            "memory_bytes": stats.memory_bytes}
    rows = grid_stats_rows(stats)
    if args.output is None:
        sys.stdout.write(render_csv(GRID_STATS_COLUMNS, rows, meta))
    else:
        try:
            write_csv(args.output, GRID_STATS_COLUMNS, rows, meta)
        except OSError as exc:
            raise CliError(f"cannot write {args.output}: {exc}", EXIT_IO)
    return EXIT_OK


COMMANDS = {
    "calibrate": cmd_calibrate,
    "identify": cmd_identify,
    "simulate": cmd_simulate,
    "grid-stats": cmd_grid_stats,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"scanident: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
