"""Half-open index regions and the overlap distance between them.

An ``Interval(start, end)`` is the index set ``(start, end]``, which covers
``data[start:end]`` of a zero-based array. A ``Rect(j1, j2, k1, k2)`` is the
product ``(j1, j2] x (k1, k2]`` and covers ``data[j1:j2, k1:k2]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True, order=True)
class Interval:
    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid interval ({self.start}, {self.end}]")

    @property
    def size(self) -> int:
        return self.end - self.start

    def fits(self, n: int) -> bool:
        return self.end <= n

    def astuple(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass(frozen=True)
class Rect:
    j1: int
    j2: int
    k1: int
    k2: int

    def __post_init__(self):
        if not (0 <= self.j1 < self.j2 and 0 <= self.k1 < self.k2):
            raise ValueError(
                f"invalid rectangle ({self.j1}, {self.j2}] x ({self.k1}, {self.k2}]"
            )

    @property
    def size(self) -> int:
        return (self.j2 - self.j1) * (self.k2 - self.k1)

    @property
    def width(self) -> int:
        return self.j2 - self.j1

    @property
    def height(self) -> int:
        return self.k2 - self.k1

    def fits(self, n: int) -> bool:
        return self.j2 <= n and self.k2 <= n

    def sort_key(self) -> tuple[int, int, int, int]:
        # scan tie-break order
        return (self.j1, self.k1, self.j2, self.k2)

    def astuple(self) -> tuple[int, int, int, int]:
        return (self.j1, self.j2, self.k1, self.k2)


Region = Union[Interval, Rect]


def _overlap(a0: int, a1: int, b0: int, b1: int) -> int:
    return max(0, min(a1, b1) - max(a0, b0))


def intersection_size(a: Region, b: Region) -> int:
    if isinstance(a, Interval) and isinstance(b, Interval):
        return _overlap(a.start, a.end, b.start, b.end)
    if isinstance(a, Rect) and isinstance(b, Rect):
        return _overlap(a.j1, a.j2, b.j1, b.j2) * _overlap(a.k1, a.k2, b.k1, b.k2)
    raise TypeError("regions must have the same dimension")


def intersects(a: Region, b: Region) -> bool:
    return intersection_size(a, b) > 0


def hamming_distance(a: Region, b: Region) -> float:
    """``1 - |a & b| / sqrt(|a| |b|)``; 0 for identical regions, 1 for disjoint ones."""
    inter = intersection_size(a, b)
    if inter == 0:
        return 1.0
    if a == b:
        return 0.0
    return 1.0 - inter / math.sqrt(a.size * b.size)


def region_from_tuple(coords) -> Region:
    coords = tuple(int(c) for c in coords)
    if len(coords) == 2:
        return Interval(*coords)
    if len(coords) == 4:
        return Rect(*coords)
    raise ValueError(f"expected 2 or 4 coordinates, got {len(coords)}")
