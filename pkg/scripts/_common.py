"""Shared argument handling for the experiment scripts."""

import argparse
from pathlib import Path

from scanident.calibrate import CalibrationCache
from scanident.grid import build_grid
from scanident.simulate import FIGURE_PRESETS, thresholds_for, with_overrides


def parser(description, default_out):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--reps", type=int, default=None, help="replicates per point")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--calib-reps", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--cache", type=Path, default=None)
    p.add_argument("--output", type=Path, default=Path("results") / default_out)
    return p


def setup(name, args):
    spec = with_overrides(FIGURE_PRESETS[name], reps=args.reps, seed=args.seed,
                          calib_reps=args.calib_reps)
    aset = build_grid(spec.grid_params)
    gamma, tau = thresholds_for(spec, CalibrationCache(args.cache), args.threads, aset)
    print(f"{name}: gamma={gamma:.4f} tau={tau:.4f} "
          f"({aset.total_count} candidates)")
    return spec, aset, gamma, tau


def show(curves):
    for c in curves:
        print(f"[{c.panel}]  x  penalized (se)  unpenalized (se)")
        for i in range(len(c)):
            print(f"  {c.x[i]:7g}  {c.mean_penalized[i]:.4f} ({c.se_penalized[i]:.4f})"
                  f"  {c.mean_unpenalized[i]:.4f} ({c.se_unpenalized[i]:.4f})")
