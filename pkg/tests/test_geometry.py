"""Property tests for the polygon and contour helpers."""

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chartscene.geometry import (
    circularity,
    hu_descriptor,
    is_simple_polygon,
    polygon_area,
    polygon_bbox,
    polygon_centroid,
    polygon_perimeter,
    polygon_signed_area,
    shape_distance,
)
from chartscene.model import LineGeom


def star_polygon(rng, n, cx, cy, rmin, rmax):
    # random star-shaped polygon around a center; always simple
    pts = []
    for i in range(n):
        theta = 2 * math.pi * i / n
        r = rng.uniform(rmin, rmax)
        pts.append((cx + r * math.cos(theta), cy + r * math.sin(theta)))
    return pts


def oracle_area(pts):
    total = 0.0
    for (x1, y1), (x2, y2) in zip(pts, pts[1:] + pts[:1]):
        total += x1 * y2 - x2 * y1
    return abs(total) / 2.0


def oracle_centroid(pts):
    a = 0.0
    cx = cy = 0.0
    for (x1, y1), (x2, y2) in zip(pts, pts[1:] + pts[:1]):
        cross = x1 * y2 - x2 * y1
        a += cross
        cx += (x1 + x2) * cross
        cy += (y1 + y2) * cross
    a /= 2.0
    return (cx / (6 * a), cy / (6 * a))


def test_polygon_oracles_random_suite():
    rng = random.Random(20240817)
    for _ in range(250):
        n = rng.randint(3, 24)
        pts = star_polygon(rng, n, rng.uniform(-50, 50), rng.uniform(-50, 50), 2.0, 30.0)
        assert is_simple_polygon(pts)
        area = polygon_area(pts)
        assert area == pytest.approx(oracle_area(pts), rel=1e-9)
        cx, cy = polygon_centroid(pts)
        ox, oy = oracle_centroid(pts)
        assert cx == pytest.approx(ox, rel=1e-9, abs=1e-9)
        assert cy == pytest.approx(oy, rel=1e-9, abs=1e-9)
        xmin, ymin, xmax, ymax = polygon_bbox(pts)
        assert xmin == min(p[0] for p in pts) and ymax == max(p[1] for p in pts)


@given(st.integers(3, 16), st.integers(0, 10 ** 9))
@settings(max_examples=60, deadline=None)
def test_signed_area_orientation(n, seed):
    rng = random.Random(seed)
    pts = star_polygon(rng, n, 0, 0, 1.0, 10.0)
    ccw = polygon_signed_area(pts)
    assert polygon_signed_area(list(reversed(pts))) == pytest.approx(-ccw)


def test_is_simple_rejects_bowtie():
    assert not is_simple_polygon([(0, 0), (10, 10), (10, 0), (0, 10)])
    assert is_simple_polygon([(0, 0), (10, 0), (10, 10), (0, 10)])


def test_circularity_bounds():
    circle = [(math.cos(t) * 10, math.sin(t) * 10)
              for t in [2 * math.pi * i / 72 for i in range(72)]]
    assert circularity(circle) > 0.99
    sliver = [(0, 0), (100, 0), (100, 1), (0, 1)]
    assert circularity(sliver) < 0.2


def test_perimeter_square():
    assert polygon_perimeter([(0, 0), (4, 0), (4, 4), (0, 4)]) == pytest.approx(16.0)


def test_line_geometry_oracles():
    rng = random.Random(7)
    for _ in range(250):
        x1, y1, x2, y2 = (rng.uniform(-100, 100) for _ in range(4))
        if (x1, y1) == (x2, y2):
            continue
        line = LineGeom.from_endpoints(x1, y1, x2, y2)
        assert line.length == pytest.approx(math.hypot(x2 - x1, y2 - y1), rel=1e-12)
        assert line.center == ((x1 + x2) / 2, (y1 + y2) / 2)
        expected = math.degrees(math.atan2(-(y2 - y1), x2 - x1))
        if expected > 90:
            expected -= 180
        elif expected < -90:
            expected += 180
        assert line.angle == pytest.approx(expected, abs=1e-9)


def test_shape_distance_invariance():
    # descriptor distance is invariant under translation and uniform scale
    tri = [(0, 0), (4, 0), (2, 3)]
    moved = [(x * 3 + 17, y * 3 - 5) for x, y in tri]
    assert shape_distance(tri, moved) == pytest.approx(0.0, abs=1e-6)


def test_shape_distance_discriminates():
    tri = [(0, 0), (4, 0), (2, 3)]
    bar = [(0, 0), (40, 0), (40, 2), (0, 2)]
    assert shape_distance(tri, bar) > 0.05


def test_hu_descriptor_finite():
    pts = star_polygon(random.Random(3), 12, 5, 5, 2, 8)
    desc = hu_descriptor(pts)
    assert len(desc) == 7
    assert all(math.isfinite(d) for d in desc)
