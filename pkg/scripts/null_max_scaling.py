"""95th percentile of the penalized null maximum for n = 10^3, 10^4, 10^5,
and scan timings for n = 2^17..2^21."""

import argparse
import time

import numpy as np

from scanident.calibrate import null_maxima, quantile_from_maxima
from scanident.grid import GridParams, build_grid
from scanident.scan import PrefixAggregate, scan_both


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=12)
    p.add_argument("--skip-quantiles", action="store_true")
    args = p.parse_args()
    if not args.skip_quantiles:
        for n in (1000, 10000, 100000):
            pen, raw = null_maxima(build_grid(GridParams(n)), args.reps, args.seed)
            print(f"n={n:>6}  q95 penalized {quantile_from_maxima(pen, 0.05):.4f}"
                  f"  unpenalized {quantile_from_maxima(raw, 0.05):.4f}")
    rng = np.random.default_rng(0)
    # compile the kernels before timing
    scan_both(PrefixAggregate.from_data(rng.standard_normal(4096)),
              build_grid(GridParams(4096)))
    prev = None
    for k in range(17, 22):
        n = 2**k
        x = rng.standard_normal(n)
        t = time.perf_counter()
        aset = build_grid(GridParams(n))
        scan_both(PrefixAggregate.from_data(x), aset)
        dt = time.perf_counter() - t
        ratio = f"  ratio {dt / prev:.2f}" if prev else ""
        print(f"n=2^{k}  {aset.total_count} candidates  {dt:.3f}s{ratio}")
        prev = dt


if __name__ == "__main__":
    main()
