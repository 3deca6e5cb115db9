"""Multiscale approximation sets of candidate intervals and rectangles.

1D: for each scale ``l = 1..l_max`` with ``l_max = floor(log2(n / ln n))``, the
layer holds every ``(j, k]`` whose endpoints lie on the grid of multiples of
``d_l = ceil(m_l / (c * l**zeta))`` (clipped to ``[0, n]``) and whose length
satisfies ``m_l < k - j <= 2 m_l`` with ``m_l = n / 2**l``. Every interval of
length at most ``m_{l_max}`` is added exhaustively. The 1D layers are kept as
endpoint grids and walked lazily by the scan kernels.

2D: for each scale ``l`` and split ``i = 0..l`` the rectangle corners sit on
a ``d1 x d2`` lattice with ``d1 = ceil(n 2**(i-l) / sqrt(l))`` and
``d2 = ceil(n 2**-i / sqrt(l))``; widths span 1..floor(sqrt(l)) steps of d1
and heights 1..floor(2 sqrt(l)) steps of d2. Every rectangle with area at most
``n**2 / 2**l_max`` (``l_max = floor(log2(n**2 / ln n))``) is added
exhaustively. The 2D family is small enough to keep explicitly.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import _kernels
from .regions import Interval, Rect, Region, hamming_distance


class GridError(ValueError):
    """Invalid approximation set parameters."""


@dataclass(frozen=True)
class GridParams:
    n: int
    dim: int = 1
    c: float = 6.0
    zeta: float = 0.5
    min_length: Optional[int] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise GridError(f"n must be an integer >= 2, got {self.n}")
        if self.dim not in (1, 2):
            raise GridError(f"dim must be 1 or 2, got {self.dim}")
        if not self.c > 0:
            raise GridError(f"c must be positive, got {self.c}")
        if not self.zeta >= 0.5:
            raise GridError(f"zeta must be >= 0.5, got {self.zeta}")
        if self.min_length is not None and self.min_length < 1:
            raise GridError(f"min_length must be >= 1, got {self.min_length}")

    @property
    def domain_size(self) -> int:
        return self.n**self.dim

    @property
    def l_max(self) -> int:
        return max(0, math.floor(math.log2(self.domain_size / math.log(self.n))))


@dataclass(frozen=True)
class Layer:
    """One scale of the approximation set.

    ``spacing`` is ``(d,)`` in 1D and the tuple of ``(d1, d2)`` pairs, one per
    split ``i``, in 2D. ``raw_count`` counts generated in-domain candidates
    with multiplicity, ``unique_count`` the distinct ones within the layer and
    ``dedup_count`` those not already contributed by an earlier layer.
    """

    scale: Union[int, str]
    m: float
    spacing: tuple
    raw_count: int
    unique_count: int
    dedup_count: int


def _steps_within(d, span):
    """Largest integer ``q`` with ``q * d <= span``, exact for float spans."""
    q = math.floor(span / d)
    while (q + 1) * d <= span:
        q += 1
    while q * d > span:
        q -= 1
    return q


def _points_within(p, d, n, span):
    """For each arithmetic point ``i*d`` (i < p) of a grid ``{0, d, .., n}``,
    the number of grid points ``<= i*d + span``."""
    q = _steps_within(d, span)
    i = np.arange(p, dtype=np.int64)
    return np.minimum(i + q, p - 1) + 1 + (i * d + span >= n)


def _sum_within(p, d, n, span):
    """``_points_within(p, d, n, span).sum()`` in closed form."""
    q = _steps_within(d, span)
    c = max(0, p - q)  # points whose reach stays inside the arithmetic part
    total = c * (c - 1) // 2 + c * q + (p - c) * (p - 1) + p
    # points that also reach the endpoint n: i*d >= n - span
    i0 = max(0, math.ceil((n - span) / d))
    while i0 > 0 and (i0 - 1) * d + span >= n:
        i0 -= 1
    while i0 * d + span < n:
        i0 += 1
    return total + max(0, p - i0)


def _check_min(length, min_length):
    return min_length is None or length >= min_length


class ApproxSet1D:
    dim = 1

    def __init__(self, params: GridParams):
        self.params = params
        n = params.n
        min_len = params.min_length or 1
        self.layers: list[Layer] = []
        grids = []
        ms = []
        for l in range(1, params.l_max + 1):
            m = n / 2.0**l
            d = math.ceil(m / (params.c * l**params.zeta))
            p = -(-n // d)
            g = np.empty(p + 1, dtype=np.int64)
            g[:p] = np.arange(0, n, d, dtype=np.int64)
            g[p] = n
            # lengths on one layer are bounded below by floor(m) + 1
            if min_len > math.floor(m) + 1:
                hi = _points_within(p, d, n, 2.0 * m)
                lo = np.minimum(_points_within(p, d, n, min_len - 1), hi)
                cnt = int(np.sum(hi - lo))
            else:
                cnt = _sum_within(p, d, n, 2.0 * m) - _sum_within(p, d, n, m)
            self.layers.append(Layer(l, m, (d,), cnt, cnt, cnt))
            grids.append(g)
            ms.append(m)
        if params.l_max >= 1:
            self.small_len = math.floor(n / 2.0**params.l_max)
        else:
            self.small_len = n
        first = min_len
        small_cnt = sum(n - L + 1 for L in range(first, self.small_len + 1))
        self.small = Layer("small", float(self.small_len), (1,), small_cnt,
                           small_cnt, small_cnt)
        self._grid = np.concatenate(grids) if grids else np.zeros(0, np.int64)
        self._offsets = np.zeros(len(grids) + 1, dtype=np.int64)
        self._offsets[1:] = np.cumsum([len(g) for g in grids])
        self._m = np.asarray(ms, dtype=np.float64)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def total_count(self) -> int:
        return sum(L.dedup_count for L in self.layers) + self.small.dedup_count

    @property
    def raw_count(self) -> int:
        return self.total_count

    def kernel_args(self):
        return (self._grid, self._offsets, self._m, self.small_len,
                self.params.min_length or 1)

    def layer_grid(self, index: int) -> np.ndarray:
        return self._grid[self._offsets[index]:self._offsets[index + 1]]

    def candidates(self) -> tuple[np.ndarray, np.ndarray]:
        """Materialize all ``(start, end)`` pairs, layers first, then the
        exhaustive short intervals. Memory is ``16 * total_count`` bytes."""
        min_len = self.params.min_length or 1
        starts, ends = [], []
        for idx, layer in enumerate(self.layers):
            g = self.layer_grid(idx)
            diff = g[None, :] - g[:, None]
            ok = (diff > layer.m) & (diff <= 2.0 * layer.m) & (diff >= min_len)
            a, b = np.nonzero(ok)
            starts.append(g[a])
            ends.append(g[b])
        for L in range(min_len, self.small_len + 1):
            s = np.arange(0, self.n - L + 1, dtype=np.int64)
            starts.append(s)
            ends.append(s + L)
        if not starts:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        return np.concatenate(starts), np.concatenate(ends)

    def __contains__(self, region: Interval) -> bool:
        L = region.size
        if not region.fits(self.n) or not _check_min(L, self.params.min_length):
            return False
        if L <= self.small_len:
            return True
        for idx, layer in enumerate(self.layers):
            if layer.m < L <= 2.0 * layer.m:
                g = self.layer_grid(idx)
                a = np.searchsorted(g, region.start)
                b = np.searchsorted(g, region.end)
                return (a < len(g) and g[a] == region.start
                        and b < len(g) and g[b] == region.end)
        return False

    def serialize(self) -> bytes:
        buf = io.BytesIO()
        buf.write(repr(self.params).encode())
        for idx, layer in enumerate(self.layers):
            buf.write(repr((layer.scale, layer.m, layer.spacing)).encode())
            buf.write(self.layer_grid(idx).astype("<i8").tobytes())
        buf.write(repr(("small", self.small_len)).encode())
        return buf.getvalue()

    def fingerprint(self) -> str:
        return hashlib.sha256(self.serialize()).hexdigest()


def _generate_2d_layer(n, l, params):
    """Rectangles of one 2D scale as encoded ids, plus spacings and raw count."""
    # resolution factor; the defaults c=6, zeta=0.5 give sqrt(l)
    r = (params.c / 6.0) * l**params.zeta
    ids = []
    spacing = []
    raw = 0
    for i in range(l + 1):
        d1 = math.ceil(n * 2.0 ** (i - l) / r)
        d2 = math.ceil(n * 2.0 ** (-i) / r)
        spacing.append((d1, d2))
        j_cap = math.floor(r * 2 ** (l - i))
        k_cap = math.floor(r * 2**i)
        w_cap = math.floor(r)
        h_cap = math.floor(2 * r)
        a = np.arange(0, min(j_cap, -(-n // d1) - 1) + 1, dtype=np.int64)
        b = np.arange(0, min(k_cap, -(-n // d2) - 1) + 1, dtype=np.int64)
        w = np.arange(1, w_cap + 1, dtype=np.int64)
        h = np.arange(1, h_cap + 1, dtype=np.int64)
        if len(a) == 0 or len(b) == 0 or len(w) == 0 or len(h) == 0:
            continue
        x1 = np.minimum(a * d1, n)
        x2 = np.minimum((a[:, None] + w[None, :]) * d1, n)
        y1 = np.minimum(b * d2, n)
        y2 = np.minimum((b[:, None] + h[None, :]) * d2, n)
        xs = np.broadcast_to(x1[:, None], x2.shape).ravel()
        xe = x2.ravel()
        keep = xe > xs
        xs, xe = xs[keep], xe[keep]
        ys = np.broadcast_to(y1[:, None], y2.shape).ravel()
        ye = y2.ravel()
        keep = ye > ys
        ys, ye = ys[keep], ye[keep]
        J1 = np.repeat(xs, len(ys))
        J2 = np.repeat(xe, len(ys))
        K1 = np.tile(ys, len(xs))
        K2 = np.tile(ye, len(xs))
        if params.min_length is not None:
            keep = (J2 - J1) * (K2 - K1) >= params.min_length
            J1, J2, K1, K2 = J1[keep], J2[keep], K1[keep], K2[keep]
        raw += len(J1)
        ids.append(_encode(n, J1, J2, K1, K2))
    ids = np.unique(np.concatenate(ids)) if ids else np.zeros(0, np.int64)
    return ids, tuple(spacing), raw


def _encode(n, j1, j2, k1, k2):
    # sorts lexicographically by (j1, k1, j2, k2)
    b = n + 1
    return ((j1 * b + k1) * b + j2) * b + k2


def _decode(n, ids):
    b = n + 1
    k2 = ids % b
    rest = ids // b
    j2 = rest % b
    rest //= b
    k1 = rest % b
    j1 = rest // b
    return j1, j2, k1, k2


def _small_2d(n, max_area, min_area):
    ids = []
    for w in range(1, min(max_area, n) + 1):
        for h in range(1, min(max_area // w, n) + 1):
            if w * h < min_area:
                continue
            x = np.arange(0, n - w + 1, dtype=np.int64)
            y = np.arange(0, n - h + 1, dtype=np.int64)
            X = np.repeat(x, len(y))
            Y = np.tile(y, len(x))
            ids.append(_encode(n, X, X + w, Y, Y + h))
    return np.unique(np.concatenate(ids)) if ids else np.zeros(0, np.int64)


class ApproxSet2D:
    dim = 2

    def __init__(self, params: GridParams):
        self.params = params
        n = params.n
        self.layers: list[Layer] = []
        seen = np.zeros(0, dtype=np.int64)
        for l in range(1, params.l_max + 1):
            ids, spacing, raw = _generate_2d_layer(n, l, params)
            fresh = np.setdiff1d(ids, seen, assume_unique=True)
            seen = np.union1d(seen, ids)
            self.layers.append(
                Layer(l, n * n / 2.0**l, spacing, raw, len(ids), len(fresh))
            )
        if params.l_max >= 1:
            self.small_area = math.floor(n * n / 2.0**params.l_max)
        else:
            self.small_area = n * n
        small = _small_2d(n, self.small_area, params.min_length or 1)
        fresh = np.setdiff1d(small, seen, assume_unique=True)
        self.small = Layer("small", float(self.small_area), (1,), len(small),
                           len(small), len(fresh))
        ids = np.union1d(seen, small)
        self.j1, self.j2, self.k1, self.k2 = (
            np.ascontiguousarray(a) for a in _decode(n, ids)
        )

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def total_count(self) -> int:
        return len(self.j1)

    @property
    def raw_count(self) -> int:
        return sum(L.raw_count for L in self.layers) + self.small.raw_count

    def kernel_args(self):
        return (self.j1, self.j2, self.k1, self.k2)

    def candidates(self):
        return self.j1, self.j2, self.k1, self.k2

    def rect(self, index: int) -> Rect:
        return Rect(int(self.j1[index]), int(self.j2[index]),
                    int(self.k1[index]), int(self.k2[index]))

    def __contains__(self, region: Rect) -> bool:
        n = self.n
        if not region.fits(n):
            return False
        key = _encode(n, region.j1, region.j2, region.k1, region.k2)
        ids = _encode(n, self.j1, self.j2, self.k1, self.k2)
        pos = np.searchsorted(ids, key)
        return bool(pos < len(ids) and ids[pos] == key)

    def serialize(self) -> bytes:
        buf = io.BytesIO()
        buf.write(repr(self.params).encode())
        for a in (self.j1, self.j2, self.k1, self.k2):
            buf.write(a.astype("<i8").tobytes())
        return buf.getvalue()

    def fingerprint(self) -> str:
        return hashlib.sha256(self.serialize()).hexdigest()


ApproxSet = Union[ApproxSet1D, ApproxSet2D]


def build_grid_1d(params: GridParams) -> ApproxSet1D:
    if params.dim != 1:
        raise GridError("build_grid_1d needs dim=1")
    return ApproxSet1D(params)


def build_grid_2d(params: GridParams) -> ApproxSet2D:
    if params.dim != 2:
        raise GridError("build_grid_2d needs dim=2")
    return ApproxSet2D(params)


def build_grid(params: GridParams) -> ApproxSet:
    return build_grid_1d(params) if params.dim == 1 else build_grid_2d(params)


def best_approximation(aset: ApproxSet, target: Region) -> Region:
    """The member closest to ``target`` in overlap distance.

    Exhaustive over the whole set; ties go to the lexicographically smallest
    candidate. Intended for checking approximation quality, not for scanning.
    """
    if aset.total_count == 0:
        raise GridError("approximation set is empty")
    if not target.fits(aset.n):
        raise GridError(f"{target} is outside the domain")
    if aset.dim == 1:
        if not isinstance(target, Interval):
            raise TypeError("1D set needs an Interval target")
        grid, offsets, m, small_len, min_len = aset.kernel_args()
        _, j, k = _kernels.nearest_1d(aset.n, grid, offsets, m, small_len,
                                      min_len, target.start, target.end)
        if j == _kernels.NO_INDEX:
            s, e = aset.candidates()
            order = np.lexsort((e, s))
            return Interval(int(s[order[0]]), int(e[order[0]]))
        return Interval(int(j), int(k))
    if not isinstance(target, Rect):
        raise TypeError("2D set needs a Rect target")
    ox = np.clip(np.minimum(aset.j2, target.j2) - np.maximum(aset.j1, target.j1), 0, None)
    oy = np.clip(np.minimum(aset.k2, target.k2) - np.maximum(aset.k1, target.k1), 0, None)
    area = (aset.j2 - aset.j1) * (aset.k2 - aset.k1)
    d = 1.0 - (ox * oy) / np.sqrt(area.astype(float) * target.size)
    return aset.rect(int(np.argmin(d)))


def approximation_distance(aset: ApproxSet, target: Region) -> float:
    return hamming_distance(best_approximation(aset, target), target)


@dataclass
class GridStats:
    dim: int
    n: int
    rows: list = field(default_factory=list)
    total: int = 0
    raw_total: int = 0
    memory_bytes: int = 0


def grid_stats(aset: ApproxSet) -> GridStats:
    """Per-layer counts, totals and a rough memory estimate.

    In 1D the estimate covers the stored endpoint grids; the candidates
    themselves are never held. In 2D it is the four coordinate arrays.
    """
    stats = GridStats(dim=aset.dim, n=aset.n)
    for layer in [*aset.layers, aset.small]:
        stats.rows.append(layer)
    stats.total = aset.total_count
    stats.raw_total = aset.raw_count
    if aset.dim == 1:
        stats.memory_bytes = int(aset.kernel_args()[0].nbytes)
    else:
        stats.memory_bytes = int(sum(a.nbytes for a in aset.candidates()))
    return stats


def _spacing_text(spacing):
    if all(isinstance(s, tuple) for s in spacing):
        return ";".join(f"{a}x{b}" for a, b in spacing)
    return ";".join(str(s) for s in spacing)


def grid_stats_rows(stats: GridStats) -> list[dict]:
    return [
        {
            "scale": layer.scale,
            "spacing": _spacing_text(layer.spacing),
            "raw_count": layer.raw_count,
            "dedup_count": layer.dedup_count,
        }
        for layer in stats.rows
    ]


GRID_STATS_COLUMNS = ("scale", "spacing", "raw_count", "dedup_count")


def grid_stats_csv(stats: GridStats) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=GRID_STATS_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(grid_stats_rows(stats))
    return out.getvalue()
