import os
import sys
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from scanident.calibrate import (CACHE_COLUMNS, CACHE_HEADER, CalibrationCache,
                                 CalibrationError, CalibrationKey, calibrate,
                                 calibrate_both, default_cache_path, null_maxima,
                                 order_statistic_index, quantile_from_maxima,
                                 rejection_rate, rng_stream, simulate_null_max)
from scanident.grid import GridParams, build_grid

N = 120


@pytest.fixture(scope="module")
def aset():
    return build_grid(GridParams(N))


def test_order_statistic_examples():
    assert order_statistic_index(0.5, 10) == 5
    assert quantile_from_maxima(np.arange(10.0)[::-1], 0.5) == 4.0  # 5th smallest
    assert order_statistic_index(0.05, 10000) == 9500
    assert order_statistic_index(0.05, 2000) == 1900
    assert order_statistic_index(0.01, 100) == 99
    assert order_statistic_index(0.3, 10) == 7  # 0.7 * 10 is 7.000000000000001


@given(st.integers(1, 5000), st.floats(0.001, 0.999))
def test_order_statistic_range(reps, alpha):
    k = order_statistic_index(alpha, reps)
    assert 1 <= k <= reps
    assert k >= (1 - alpha) * reps - 1e-6


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=50),
       st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_quantile_monotone_in_alpha(xs, a1, a2):
    lo, hi = sorted((a1, a2))
    assert quantile_from_maxima(xs, lo) >= quantile_from_maxima(xs, hi)


@pytest.mark.parametrize("kw", [dict(alpha=0.0), dict(alpha=1.0), dict(reps=99),
                                dict(seed=-1), dict(seed=2**64)])
def test_key_validation(kw):
    with pytest.raises(CalibrationError):
        CalibrationKey(N, **kw)


def test_key_digests():
    a = CalibrationKey(N)
    assert a.digest == CalibrationKey(N).digest
    assert a.digest != CalibrationKey(N, alpha=0.1).digest
    assert a.digest != CalibrationKey(N, penalized=False).digest
    assert a.replicate_digest == CalibrationKey(N, alpha=0.1, penalized=False).replicate_digest
    assert a.replicate_digest != CalibrationKey(N, seed=1).replicate_digest


def test_streams_independent_and_deterministic():
    a = rng_stream(5, 0).standard_normal(4)
    assert np.array_equal(a, rng_stream(5, 0).standard_normal(4))
    assert not np.array_equal(a, rng_stream(5, 1).standard_normal(4))
    assert not np.array_equal(a, rng_stream(6, 0).standard_normal(4))
    assert not np.array_equal(rng_stream(5, 0, 1).standard_normal(4),
                              rng_stream(5, 1, 0).standard_normal(4))


def test_simulate_null_max(aset):
    v1 = simulate_null_max(N, 1, True, aset, 3, 42)
    assert v1 == simulate_null_max(N, 1, True, aset, 3, 42)
    assert v1 <= simulate_null_max(N, 1, False, aset, 3, 42)
    with pytest.raises(CalibrationError):
        simulate_null_max(N + 1, 1, True, aset, 3, 42)


def test_null_maxima_thread_independent(aset):
    p1, r1 = null_maxima(aset, 150, 9, threads=1)
    p4, r4 = null_maxima(aset, 150, 9, threads=4)
    assert np.array_equal(p1, p4) and np.array_equal(r1, r4)
    assert np.all(p1 <= r1)
    assert p1[7] == simulate_null_max(N, 1, True, aset, 7, 9)
    tail, _ = null_maxima(aset, 50, 9, start=100)
    assert np.array_equal(tail, p1[100:])


def test_calibrate_cache_roundtrip(tmp_path, aset):
    cache = CalibrationCache(tmp_path / "cal.tsv")
    key = CalibrationKey(N, reps=200, seed=3)
    rec = calibrate(key, cache, aset=aset)
    assert rec.status == "computed"
    assert np.isfinite(rec.quantile)
    assert rec.quantile == quantile_from_maxima(rec.replicate_maxima, 0.05)
    lines = (tmp_path / "cal.tsv").read_text().splitlines()
    assert lines[0] == CACHE_HEADER
    assert lines[1].split("\t") == list(CACHE_COLUMNS)
    assert len(lines) == 4  # both statistics stored
    again = calibrate(key, cache)
    assert again.status == "cached"
    assert again.quantile == rec.quantile
    assert again.key == key
    raw = calibrate(CalibrationKey(N, penalized=False, reps=200, seed=3), cache)
    assert raw.status == "cached" and raw.quantile >= rec.quantile


def test_maxima_reused_across_alpha(tmp_path, aset, monkeypatch):
    cache = CalibrationCache(tmp_path / "cal.tsv")
    r05 = calibrate(CalibrationKey(N, reps=200, seed=4), cache, aset=aset)
    monkeypatch.setattr(sys.modules["scanident.calibrate"], "null_maxima", lambda *a, **k: pytest.fail("recomputed"))
    r10 = calibrate(CalibrationKey(N, alpha=0.10, reps=200, seed=4), cache)
    assert r10.status == "computed"
    assert r05.quantile >= r10.quantile
    assert np.array_equal(np.sort(r05.replicate_maxima), np.sort(r10.replicate_maxima))


def test_degraded_on_bad_cache(tmp_path, aset):
    path = tmp_path / "cal.tsv"
    path.write_text("not a cache\n")
    key = CalibrationKey(N, reps=100, seed=1)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        rec = calibrate(key, CalibrationCache(path), aset=aset)
    assert rec.status == "degraded"
    assert any("cache" in str(x.message) for x in w)
    assert path.read_text() == "not a cache\n"
    assert rec.quantile == calibrate(key, None, aset=aset).quantile


def test_degraded_on_unwritable(tmp_path, aset):
    if os.geteuid() == 0:
        pytest.skip("root ignores directory permissions")
    d = tmp_path / "ro"
    d.mkdir()
    d.chmod(0o500)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rec = calibrate(CalibrationKey(N, reps=100), CalibrationCache(d / "c.tsv"),
                            aset=aset)
        assert rec.status == "degraded"
    finally:
        d.chmod(0o700)


def test_cache_is_a_file_path(tmp_path, aset):
    # a directory where the cache file should be makes every write fail
    path = tmp_path / "cal.tsv"
    path.mkdir()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rec = calibrate(CalibrationKey(N, reps=100), CalibrationCache(path), aset=aset)
    assert rec.status == "degraded"


def test_aset_mismatch(tmp_path, aset):
    with pytest.raises(CalibrationError):
        calibrate_both(CalibrationKey(N + 1, reps=100), None, aset=aset)


def test_default_cache_env(monkeypatch, tmp_path):
    monkeypatch.setenv("SCANIDENT_CACHE", str(tmp_path / "x.tsv"))
    assert default_cache_path() == tmp_path / "x.tsv"
    assert CalibrationCache().path == tmp_path / "x.tsv"


def test_rejection_rate():
    assert rejection_rate([1.0, 2.0, 3.0, 4.0], 3.0) == 0.5


def test_tail_decay(aset):
    # log-survival of the penalized null max falls faster than -kappa/4
    pen, _ = null_maxima(aset, 2000, 21)
    kappas = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 2.5])
    surv = np.array([np.mean(pen > k) for k in kappas])
    assert np.all(np.diff(surv) <= 0)
    ok = surv > 0
    slope = np.polyfit(kappas[ok], np.log(surv[ok]), 1)[0]
    assert slope < -0.25
