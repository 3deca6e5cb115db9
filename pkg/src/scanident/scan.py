"""Penalized scan over an approximation set.

The statistic of a candidate ``I`` is ``Y(I) - sqrt(2 log(e N / |I|))`` with
``Y(I) = sum(data[I]) / sqrt(|I|)`` and ``N = n**dim``; the unpenalized
variant drops the second term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from . import _kernels
from .grid import ApproxSet
from .regions import Interval, Rect, Region

# above this length the 1D prefix sums are accumulated with compensation
COMPENSATED_MIN_N = 1_000_000


class ScanError(ValueError):
    pass


@dataclass(frozen=True)
class PrefixAggregate:
    """Cumulative sums: length ``n + 1`` in 1D, ``(n + 1, n + 1)`` in 2D."""

    dim: int
    n: int
    table: np.ndarray

    @classmethod
    def from_data(cls, data) -> "PrefixAggregate":
        data = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(data)):
            raise ScanError("data contains non-finite values")
        if data.ndim == 1:
            n = data.shape[0]
            if n >= COMPENSATED_MIN_N:
                table = _kernels.kahan_cumsum(data)
            else:
                table = np.zeros(n + 1)
                np.cumsum(data, out=table[1:])
        elif data.ndim == 2:
            n = data.shape[0]
            if data.shape[1] != n:
                raise ScanError(f"2D data must be square, got {data.shape}")
            table = np.zeros((n + 1, n + 1))
            table[1:, 1:] = data.cumsum(axis=0).cumsum(axis=1)
        else:
            raise ScanError(f"data must be 1D or 2D, got ndim={data.ndim}")
        table.setflags(write=False)
        return cls(data.ndim, n, table)

    def window_sum(self, region: Region) -> float:
        _check_region(self, region)
        S = self.table
        if self.dim == 1:
            return float(S[region.end] - S[region.start])
        r = region
        return float(((S[r.j2, r.k2] - S[r.j1, r.k2]) - S[r.j2, r.k1]) + S[r.j1, r.k1])


def _check_region(agg: PrefixAggregate, region: Region):
    want = Interval if agg.dim == 1 else Rect
    if not isinstance(region, want):
        raise ScanError(f"expected a {want.__name__} for {agg.dim}D data")
    if not region.fits(agg.n):
        raise ScanError(f"{region} lies outside a domain of side {agg.n}")


def window_stat(agg: PrefixAggregate, region: Region) -> float:
    return agg.window_sum(region) / math.sqrt(region.size)


def penalty(n: int, size: int, dim: int = 1) -> float:
    N = n**dim
    if not 1 <= size <= N:
        raise ScanError(f"size {size} outside [1, {N}]")
    return math.sqrt(2.0 * (1.0 + math.log(N / size)))


@lru_cache(maxsize=8)
def _tables(n: int, dim: int):
    # index 0 is a placeholder so tables are indexed by size directly
    N = n**dim
    sizes = np.arange(N + 1, dtype=np.float64)
    sizes[0] = 1.0
    sqrt_tab = np.sqrt(sizes)
    pen_tab = np.sqrt(2.0 * (1.0 + np.log(N / sizes)))
    sqrt_tab.setflags(write=False)
    pen_tab.setflags(write=False)
    return sqrt_tab, pen_tab


def stat_tables(n: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """``(sqrt(size), penalty(size))`` lookups indexed by size; the scan
    kernels read these, so anything comparing bit-for-bit should too."""
    return _tables(n, dim)


@dataclass(frozen=True)
class ScanResult:
    value: float
    argmax: Optional[Region]
    penalized: bool
    evaluated: int

    @property
    def empty(self) -> bool:
        return self.argmax is None


@dataclass(frozen=True)
class DualScan:
    penalized: ScanResult
    unpenalized: ScanResult


def _blocked_table(agg: PrefixAggregate, exclude: Sequence[Region]):
    n = agg.n
    if agg.dim == 1:
        mark = np.zeros(n, dtype=np.int64)
        for r in exclude:
            _check_region(agg, r)
            mark[r.start:r.end] = 1
        table = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(mark, out=table[1:])
    else:
        mark = np.zeros((n, n), dtype=np.int64)
        for r in exclude:
            _check_region(agg, r)
            mark[r.j1:r.j2, r.k1:r.k2] = 1
        table = np.zeros((n + 1, n + 1), dtype=np.int64)
        table[1:, 1:] = mark.cumsum(axis=0).cumsum(axis=1)
    return table


def _check_pair(agg: PrefixAggregate, aset: ApproxSet):
    if agg.dim != aset.dim or agg.n != aset.n:
        raise ScanError(
            f"data is {agg.dim}D with n={agg.n}, set is {aset.dim}D with n={aset.n}"
        )


def scan_both(agg: PrefixAggregate, aset: ApproxSet,
              exclude: Sequence[Region] = ()) -> DualScan:
    """Penalized and unpenalized maxima from a single pass."""
    _check_pair(agg, aset)
    sqrt_tab, pen_tab = _tables(agg.n, agg.dim)
    use_block = len(exclude) > 0
    if use_block:
        blocked = _blocked_table(agg, exclude)
    else:
        blocked = np.zeros((1,) * agg.dim, dtype=np.int64)
    if agg.dim == 1:
        bp, pj, pk, bu, uj, uk, cnt = _kernels.scan_1d(
            agg.table, sqrt_tab, pen_tab, *aset.kernel_args(), use_block, blocked
        )
        pen_arg = Interval(int(pj), int(pk)) if pj != _kernels.NO_INDEX else None
        raw_arg = Interval(int(uj), int(uk)) if uj != _kernels.NO_INDEX else None
    else:
        bp, pi, bu, ui, cnt = _kernels.scan_2d(
            agg.table, sqrt_tab, pen_tab, *aset.kernel_args(), use_block, blocked
        )
        pen_arg = aset.rect(int(pi)) if pi != _kernels.NO_INDEX else None
        raw_arg = aset.rect(int(ui)) if ui != _kernels.NO_INDEX else None
    cnt = int(cnt)
    return DualScan(
        ScanResult(float(bp), pen_arg, True, cnt),
        ScanResult(float(bu), raw_arg, False, cnt),
    )


def scan_max(agg: PrefixAggregate, aset: ApproxSet, penalized: bool = True,
             exclude: Sequence[Region] = ()) -> ScanResult:
    """Maximize the (penalized) statistic over candidates that avoid ``exclude``.

    Returns a result with ``argmax=None`` and ``value=-inf`` when every
    candidate is excluded.
    """
    both = scan_both(agg, aset, exclude)
    return both.penalized if penalized else both.unpenalized


def iter_statistics(agg: PrefixAggregate, aset: ApproxSet,
                    penalized: bool = True, chunk: int = 1 << 16
                    ) -> Iterator[tuple[Region, float]]:
    """Stream ``(candidate, statistic)`` pairs one layer at a time.

    Slow; meant for inspection. Not used by the scan itself.
    """
    _check_pair(agg, aset)
    sqrt_tab, pen_tab = _tables(agg.n, agg.dim)
    S = agg.table
    if aset.dim == 1:
        for starts, ends in _iter_1d_chunks(aset):
            L = ends - starts
            v = (S[ends] - S[starts]) / sqrt_tab[L]
            if penalized:
                v = v - pen_tab[L]
            for s, e, x in zip(starts.tolist(), ends.tolist(), v.tolist()):
                yield Interval(s, e), x
    else:
        j1, j2, k1, k2 = aset.candidates()
        for lo in range(0, len(j1), chunk):
            sl = slice(lo, lo + chunk)
            a1, a2, b1, b2 = j1[sl], j2[sl], k1[sl], k2[sl]
            area = (a2 - a1) * (b2 - b1)
            s = ((S[a2, b2] - S[a1, b2]) - S[a2, b1]) + S[a1, b1]
            v = s / sqrt_tab[area]
            if penalized:
                v = v - pen_tab[area]
            for t, x in enumerate(v.tolist()):
                yield Rect(int(a1[t]), int(a2[t]), int(b1[t]), int(b2[t])), x


def _iter_1d_chunks(aset) -> Iterable[tuple[np.ndarray, np.ndarray]]:
    min_len = aset.params.min_length or 1
    for idx, layer in enumerate(aset.layers):
        g = aset.layer_grid(idx)
        for a in range(len(g)):
            diff = g[a + 1:] - g[a]
            ok = (diff > layer.m) & (diff <= 2.0 * layer.m) & (diff >= min_len)
            ends = g[a + 1:][ok]
            if len(ends):
                yield np.full(len(ends), g[a]), ends
    for L in range(min_len, aset.small_len + 1):
        s = np.arange(0, aset.n - L + 1, dtype=np.int64)
        yield s, s + L
