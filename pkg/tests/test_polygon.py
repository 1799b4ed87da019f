import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hmmellam.polygon import clip_convex, dedupe, is_simple, signed_area


def test_signed_area_orientation():
    sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
    assert signed_area(sq) == 1.0
    assert signed_area(sq[::-1]) == -1.0


def test_clip_overlapping_squares():
    a = [(0, 0), (2, 0), (2, 2), (0, 2)]
    b = [(1, 1), (3, 1), (3, 3), (1, 3)]
    assert signed_area(clip_convex(a, b)) == pytest.approx(1.0)


def test_clip_disjoint_is_empty():
    a = [(0, 0), (1, 0), (1, 1), (0, 1)]
    b = [(2, 2), (3, 2), (3, 3), (2, 3)]
    assert signed_area(clip_convex(a, b)) == 0.0


def test_clip_nonconvex_subject():
    # L-shaped subject of area 3 against a large box
    L = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
    box = [(-1, -1), (3, -1), (3, 3), (-1, 3)]
    assert signed_area(clip_convex(L, box)) == pytest.approx(3.0)
    # upper half of the L
    half = [(-1, 1), (3, 1), (3, 3), (-1, 3)]
    assert signed_area(clip_convex(L, half)) == pytest.approx(1.0)


def test_simplicity():
    assert is_simple([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert not is_simple([(0, 0), (1, 1), (1, 0), (0, 1)])


def test_dedupe():
    assert dedupe([(0, 0), (0, 1e-15), (1, 0), (0, 0)], 1e-12) == [(0, 0), (1, 0)]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=3, max_size=3))
def test_clip_triangle_partition(tri):
    """Halves of a square split along a diagonal partition any clipped triangle."""
    if abs(signed_area(tri)) < 1e-6:
        return
    if signed_area(tri) < 0:
        tri = tri[::-1]
    box = [(-2, -2), (2, -2), (2, 2), (-2, 2)]
    lower = [(-2, -2), (2, -2), (2, 2)]
    upper = [(-2, -2), (2, 2), (-2, 2)]
    total = signed_area(clip_convex(tri, box))
    parts = signed_area(clip_convex(tri, lower)) + signed_area(clip_convex(tri, upper))
    assert parts == pytest.approx(total, abs=1e-9)
