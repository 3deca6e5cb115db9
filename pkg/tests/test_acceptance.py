"""Acceptance criteria, one test (or one test per clause) per criterion.

Each test records a ``PASS``/``FAIL`` line that is printed immediately and
again in the terminal summary. Criteria that the implementation cannot meet
are marked ``xfail(strict=True)`` with the measured reason; their assertions
are the criteria as stated.

Monte Carlo baselines below were produced by a pilot run of this code at the
same seeds and are checked at +-0.03.
"""

import math
import time

import numpy as np
import pytest

from scanident.calibrate import (CalibrationCache, CalibrationKey, calibrate_both,
                                 null_maxima, quantile_from_maxima, rejection_rate)
from scanident.grid import GridParams, best_approximation, build_grid
from scanident.regions import Interval
from scanident.scan import PrefixAggregate, penalty, scan_both
from scanident.simulate import (FIGURE_PRESETS, run_curve_2d, run_curve_mu,
                                run_curve_ratio, run_multi)

from oracles import approx_set_1d, approx_set_2d, brute_scan_1d, brute_scan_2d

pytestmark = pytest.mark.slow

RESULTS: list[str] = []

TOL = 0.03

# (x, penalized, unpenalized)
FIG1_BASELINE = {
    "1000": [(1.5, 0.0620, 0.0072), (2.0, 0.1154, 0.0119), (2.5, 0.2161, 0.0299),
             (3.0, 0.3289, 0.0719), (3.5, 0.4765, 0.1579), (4.0, 0.6274, 0.2909),
             (4.5, 0.7309, 0.4575), (5.0, 0.8141, 0.6119)],
    "100": [(1.5, 0.0121, 0.0052), (2.0, 0.0257, 0.0102), (2.5, 0.0611, 0.0326),
            (3.0, 0.1169, 0.0799), (3.5, 0.2368, 0.1661), (4.0, 0.3712, 0.2912),
            (4.5, 0.5512, 0.4748), (5.0, 0.6835, 0.6218)],
}
FIG2_BASELINE = [(5, 0.3805, 0.0589), (10, 0.3959, 0.1023), (20, 0.4119, 0.1662),
                 (50, 0.4003, 0.2473), (100, 0.4115, 0.3331), (200, 0.4081, 0.4009),
                 (500, 0.4166, 0.5079), (1000, 0.4109, 0.5736)]
FIG3_BASELINE = {
    "30x40": [(2.5, 0.0864, 0.0116), (3.0, 0.1531, 0.0219), (3.5, 0.2226, 0.0496),
              (4.0, 0.3257, 0.0861), (4.5, 0.4499, 0.1602), (5.0, 0.5655, 0.2755),
              (5.5, 0.6322, 0.3982), (6.0, 0.6890, 0.4957)],
    "15x80": [(2.5, 0.0823, 0.0124), (3.0, 0.1455, 0.0189), (3.5, 0.2288, 0.0474),
              (4.0, 0.3186, 0.0766), (4.5, 0.4587, 0.1614), (5.0, 0.5722, 0.2771),
              (5.5, 0.6534, 0.3948), (6.0, 0.7154, 0.5192)],
}


def record(num, ok, detail):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'} | {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def baseline_check(curve, expected):
    bad = []
    for i, (x, p, u) in enumerate(expected):
        assert curve.x[i] == pytest.approx(x)
        if abs(curve.mean_penalized[i] - p) > TOL or abs(curve.mean_unpenalized[i] - u) > TOL:
            bad.append((x, round(curve.mean_penalized[i], 4),
                        round(curve.mean_unpenalized[i], 4)))
    return bad


@pytest.fixture(scope="module")
def cache(tmp_path_factory):
    return CalibrationCache(tmp_path_factory.mktemp("acceptance") / "calibration.tsv")


@pytest.fixture(scope="module")
def grid10k():
    return build_grid(GridParams(10000))


@pytest.fixture(scope="module")
def thresholds_10k(cache, grid10k):
    spec = FIGURE_PRESETS["figure1"]
    pen, raw = calibrate_both(spec.calibration_key, cache, aset=grid10k)
    return pen, raw


def test_c1_grid_cardinality_1d():
    parts = []
    ok = True
    for n in (1000, 10000):
        t = time.perf_counter()
        aset = build_grid(GridParams(n))
        total = aset.total_count
        elapsed = time.perf_counter() - t
        l_max = aset.params.l_max
        bound = sum(144 * l * 2**l for l in range(1, l_max + 1)) \
            + math.floor(2 * n * math.log(n))
        ok &= total <= bound and elapsed < 1.0
        parts.append(f"n={n} total={total} bound={bound} t={elapsed:.3f}s")
    record(1, ok, "; ".join(parts))


@pytest.mark.xfail(strict=True, reason="layer l=1 holds 5 rectangles against a "
                   "bound of 4: ceiling rounding of the spacings, see decisions ledger")
def test_c2_grid_cardinality_2d():
    parts = []
    ok = True
    for n in (64, 100):
        t = time.perf_counter()
        aset = build_grid(GridParams(n, dim=2))
        elapsed = time.perf_counter() - t
        over = [(L.scale, L.unique_count, 2 * L.scale**3 * 2**L.scale)
                for L in aset.layers if L.unique_count > 2 * L.scale**3 * 2**L.scale]
        over_raw = [L.scale for L in aset.layers
                    if L.raw_count > 2 * L.scale**3 * 2**L.scale]
        ok &= not over and elapsed < 5.0
        parts.append(f"n={n} layers over bound (l, count, bound)={over} "
                     f"[with multiplicity: l={over_raw}] t={elapsed:.2f}s")
    record(2, ok, "; ".join(parts))


def test_c3_lemma2_approximation(grid10k):
    n = 10000
    rng = np.random.default_rng(2025)
    cap = math.floor(n**0.9)
    t = time.perf_counter()
    fails = 0
    worst_ratio = worst_gap = 0.0
    for _ in range(500):
        # log-uniform size so every scale is exercised
        L = min(cap, max(1, int(math.exp(rng.uniform(0, math.log(cap))))))
        j = int(rng.integers(0, n - L + 1))
        target = Interval(j, j + L)
        b = best_approximation(grid10k, target)
        inter = max(0, min(b.end, target.end) - max(b.start, target.start))
        d = 1 - inter / math.sqrt(b.size * L)
        bound = 1 / (3 * math.sqrt(math.log2(n / L)))
        gap = abs(penalty(n, b.size) - penalty(n, L))
        worst_ratio = max(worst_ratio, d / bound)
        worst_gap = max(worst_gap, gap)
        fails += d > bound or gap > 0.2
    elapsed = time.perf_counter() - t
    record(3, fails == 0 and elapsed < 30,
           f"500 targets, failures={fails}, worst D/bound={worst_ratio:.3f}, "
           f"worst penalty gap={worst_gap:.4f}, t={elapsed:.1f}s")


def test_c4_oracle_equivalence():
    t = time.perf_counter()
    mism = 0
    n = 200
    aset = build_grid(GridParams(n))
    pairs = approx_set_1d(n)
    s, e = aset.candidates()
    assert set(zip(s.tolist(), e.tolist())) == pairs
    rng = np.random.default_rng(404)
    for _ in range(50):
        x = rng.standard_normal(n) + rng.uniform(0, 1) * (rng.random(n) < 0.3)
        agg = PrefixAggregate.from_data(x)
        both = scan_both(agg, aset)
        for res, pen in ((both.penalized, True), (both.unpenalized, False)):
            v, arg = brute_scan_1d(agg.table, n, pairs, pen)
            mism += res.value != v or res.argmax.astuple() != arg
    n2 = 24
    a2 = build_grid(GridParams(n2, dim=2))
    rects = approx_set_2d(n2)
    assert set(zip(*(a.tolist() for a in a2.candidates()))) == rects
    for _ in range(20):
        agg = PrefixAggregate.from_data(rng.standard_normal((n2, n2)))
        both = scan_both(agg, a2)
        for res, pen in ((both.penalized, True), (both.unpenalized, False)):
            v, arg = brute_scan_2d(agg.table, n2, rects, pen)
            mism += res.value != v or res.argmax.astuple() != arg
    elapsed = time.perf_counter() - t
    record(4, mism == 0 and elapsed < 60,
           f"140 comparisons, mismatches={mism}, t={elapsed:.1f}s")


def test_c5_type_one_error(thresholds_10k, grid10k):
    pen_rec, raw_rec = thresholds_10k
    assert pen_rec.key.reps == 10000 and pen_rec.key.alpha == 0.05
    pen, raw = null_maxima(grid10k, 2000, seed=99)
    rate = rejection_rate(pen, pen_rec.quantile)
    rate_u = rejection_rate(raw, raw_rec.quantile)
    band = 3 * math.sqrt(0.05 * 0.95 / 2000)
    record(5, abs(rate - 0.05) <= band,
           f"n=10000 gamma={pen_rec.quantile:.4f} fresh rejection rate={rate:.4f} "
           f"(band 0.05+-{band:.4f}); unpenalized tau={raw_rec.quantile:.4f} "
           f"rate={rate_u:.4f}")


@pytest.fixture(scope="module")
def figure1(thresholds_10k, grid10k):
    pen, raw = thresholds_10k
    curves = run_curve_mu(FIGURE_PRESETS["figure1"], pen.quantile, raw.quantile, grid10k)
    return {c.panel: c for c in curves}


def _se(c):
    return np.sqrt(c.se_penalized**2 + c.se_unpenalized**2)


def test_c6_figure1_left(figure1):
    c = figure1["1000"]
    diff = c.mean_penalized - c.mean_unpenalized
    dominates = bool(np.all(diff >= 0))
    strict = int(np.sum(diff > 2 * _se(c)))
    bad = baseline_check(c, FIG1_BASELINE["1000"])
    record(6, dominates and strict >= 4 and not bad,
           f"|I*|=1000 pen>=unpen at all points={dominates}, >2SE at {strict}/8, "
           f"baseline misses={bad}")


def test_c7_figure1_right(figure1):
    c = figure1["100"]
    ok = bool(np.all(c.mean_penalized >= c.mean_unpenalized - 2 * _se(c)))
    bad = baseline_check(c, FIG1_BASELINE["100"])
    record(7, ok and not bad,
           f"|I*|=100 pen>=unpen-2SE at all points={ok}, baseline misses={bad}")


def test_c8_figure2(thresholds_10k, grid10k):
    pen, raw = thresholds_10k
    (c,) = run_curve_ratio(FIGURE_PRESETS["figure2"], pen.quantile, raw.quantile,
                           grid10k)
    gap = c.mean_penalized - c.mean_unpenalized
    se = _se(c)
    maximal = bool(np.all(gap[0] >= gap[1:]))
    steps = [gap[i + 1] - gap[i] <= 2 * math.hypot(se[i], se[i + 1])
             for i in range(len(gap) - 1)]
    bad = baseline_check(c, FIG2_BASELINE)
    record(8, maximal and all(steps) and not bad,
           f"gaps={np.round(gap, 4).tolist()} max at smallest ratio={maximal}, "
           f"non-increasing within 2SE={all(steps)}, baseline misses={bad}")


@pytest.fixture(scope="module")
def figure3(cache):
    spec = FIGURE_PRESETS["figure3"]
    aset = build_grid(spec.grid_params)
    pen, raw = calibrate_both(spec.calibration_key, cache, aset=aset)
    curves = run_curve_2d(spec, pen.quantile, raw.quantile, aset)
    return {c.panel: c for c in curves}


def test_c9a_figure3_dominance(figure3):
    ok = True
    bad = []
    for label, c in figure3.items():
        ok &= bool(np.all(c.mean_penalized > c.mean_unpenalized))
        bad += baseline_check(c, FIG3_BASELINE[label])
    record("9a", ok and not bad,
           f"pen>unpen at every point for both shapes={ok}, baseline misses={bad}")


@pytest.mark.xfail(strict=True, reason="30x40 trails 15x80 by ~0.02-0.025 at "
                   "x>=5.5 (confirmed at a second seed); see decisions ledger")
def test_c9b_figure3_aspect_ratio(figure3):
    a, b = figure3["30x40"], figure3["15x80"]
    z = np.abs(a.mean_penalized - b.mean_penalized) / np.hypot(a.se_penalized,
                                                                b.se_penalized)
    record("9b", bool(np.all(z <= 3)),
           f"|pen(30x40)-pen(15x80)|/SE per point={np.round(z, 2).tolist()} (limit 3)")


@pytest.fixture(scope="module")
def multi(thresholds_10k, grid10k):
    pen, _ = thresholds_10k
    return run_multi(FIGURE_PRESETS["multi"], pen.quantile, grid10k)


@pytest.mark.xfail(strict=True, reason="at mu*sqrt(|I*|)=6 a single length-100 "
                   "signal is found within D<0.1 only ~62% of the time, even by an "
                   "exhaustive scan; see decisions ledger")
def test_c10a_multi_recovery(multi):
    record("10a", multi.recovered_fraction >= 0.95,
           f"all 3 recovered with max_j min_i D<0.1 in {multi.recovered_fraction:.3f} "
           f"of {multi.reps} runs (need >=0.95)")


def test_c10b_multi_mean_k(multi):
    c_alpha = 0.05 / 0.95
    record("10b", multi.mean_k <= 3 + 0.06,
           f"mean K-hat={multi.mean_k:.3f} (se {multi.se_k:.3f}), limit 3.06; "
           f"C(alpha)={c_alpha:.4f}")


def test_c10c_multi_null(multi):
    limit = 0.05 + 3 * math.sqrt(0.05 * 0.95 / multi.null_reps)
    record("10c", multi.null_nonempty_rate <= limit,
           f"null nonempty rate={multi.null_nonempty_rate:.4f} over "
           f"{multi.null_reps} runs, limit {limit:.4f}")


def _time_once(n, x):
    t = time.perf_counter()
    aset = build_grid(GridParams(n))
    scan_both(PrefixAggregate.from_data(x), aset)
    return time.perf_counter() - t


def _timed(sizes, rng, rounds=7):
    """Min over interleaved rounds, so a slow spell on a shared core hits
    every size rather than one."""
    data = {n: rng.standard_normal(n) for n in sizes}
    best = dict.fromkeys(sizes, math.inf)
    for _ in range(rounds):
        for n in sizes:
            best[n] = min(best[n], _time_once(n, data[n]))
    return best


def test_c11_complexity():
    rng = np.random.default_rng(11)
    _timed([2**12], rng, rounds=1)  # jit warm-up
    sizes = [2**k for k in range(17, 22)]
    times = _timed(sizes + [10**6], rng)
    ratios = [times[2 * n] / times[n] for n in sizes[:-1]]
    t6 = times[10**6]
    record(11, max(ratios) <= 2.5 and t6 < 10,
           f"T(2n)/T(n)={[round(r, 2) for r in ratios]}, n=10^6 {t6:.2f}s")


def test_c12_null_max_bounded():
    # 2000 replicates per n (the validation default) keep n=10^5 affordable
    q = {}
    for n in (1000, 10000, 100000):
        pen, _ = null_maxima(build_grid(GridParams(n)), 2000, seed=12)
        q[n] = quantile_from_maxima(pen, 0.05)
    steps = [q[10000] - q[1000], q[100000] - q[10000]]
    overall = max(q.values()) - q[1000]
    record(12, max(steps) <= 0.5 and overall <= 0.5,
           f"95th percentiles={ {k: round(v, 4) for k, v in q.items()} }, "
           f"increase over the range={overall:.4f}")
