import math

import pytest
from hypothesis import given, strategies as st

from scanident.regions import (Interval, Rect, hamming_distance, intersection_size,
                               intersects, region_from_tuple)


@st.composite
def intervals(draw, n=50):
    a = draw(st.integers(0, n - 1))
    b = draw(st.integers(a + 1, n))
    return Interval(a, b)


@st.composite
def rects(draw, n=20):
    j1 = draw(st.integers(0, n - 1))
    k1 = draw(st.integers(0, n - 1))
    return Rect(j1, draw(st.integers(j1 + 1, n)), k1, draw(st.integers(k1 + 1, n)))


def test_known_distance():
    assert hamming_distance(Interval(0, 4), Interval(2, 6)) == pytest.approx(0.5)


def test_identity_and_disjoint():
    a = Interval(3, 9)
    assert hamming_distance(a, a) == 0.0
    assert hamming_distance(a, Interval(9, 12)) == 1.0
    assert not intersects(a, Interval(9, 12))  # (3,9] and (9,12] share nothing
    assert intersects(a, Interval(8, 12))


def test_rect_distance():
    a = Rect(0, 2, 0, 2)
    b = Rect(1, 3, 0, 2)
    assert intersection_size(a, b) == 2
    assert hamming_distance(a, b) == pytest.approx(0.5)


def test_invalid():
    with pytest.raises(ValueError):
        Interval(3, 3)
    with pytest.raises(ValueError):
        Interval(-1, 2)
    with pytest.raises(ValueError):
        Rect(0, 1, 2, 2)
    with pytest.raises(TypeError):
        hamming_distance(Interval(0, 1), Rect(0, 1, 0, 1))


def test_from_tuple():
    assert region_from_tuple((1, 4)) == Interval(1, 4)
    assert region_from_tuple([0, 2, 1, 3]) == Rect(0, 2, 1, 3)
    with pytest.raises(ValueError):
        region_from_tuple((1, 2, 3))


@given(intervals(), intervals())
def test_distance_properties_1d(a, b):
    d = hamming_distance(a, b)
    assert 0.0 <= d <= 1.0
    assert d == hamming_distance(b, a)
    assert (d == 1.0) == (not intersects(a, b))
    assert (d == 0.0) == (a == b)


@given(rects(), rects())
def test_distance_properties_2d(a, b):
    d = hamming_distance(a, b)
    assert 0.0 <= d <= 1.0
    assert d == hamming_distance(b, a)
    assert (d == 1.0) == (intersection_size(a, b) == 0)
    assert (d == 0.0) == (a == b)
    inter = intersection_size(a, b)
    if inter:
        assert d == pytest.approx(1 - inter / math.sqrt(a.size * b.size))
