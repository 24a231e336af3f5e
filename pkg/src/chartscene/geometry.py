"""2D polygon and line helpers shared by scene ingestion and validation.

All coordinates are image pixels, origin top-left, y growing downward.
"""

from __future__ import annotations

import math
from typing import Sequence

Point = tuple[float, float]


def polygon_signed_area(points: Sequence[Point]) -> float:
    """Shoelace signed area; positive for counter-clockwise vertex order."""
    area = 0.0
    n = len(points)
    for i in range(n):
        x1, y1 = points[i]
        x2, y2 = points[(i + 1) % n]
        area += x1 * y2 - x2 * y1
    return area / 2.0


def polygon_area(points: Sequence[Point]) -> float:
    return abs(polygon_signed_area(points))


def polygon_centroid(points: Sequence[Point]) -> Point:
    """Area centroid; degenerates to the vertex mean for zero-area polygons."""
    a = polygon_signed_area(points)
    if abs(a) < 1e-12:
        n = len(points)
        return (sum(p[0] for p in points) / n, sum(p[1] for p in points) / n)
    cx = cy = 0.0
    n = len(points)
    for i in range(n):
        x1, y1 = points[i]
        x2, y2 = points[(i + 1) % n]
        cross = x1 * y2 - x2 * y1
        cx += (x1 + x2) * cross
        cy += (y1 + y2) * cross
    return (cx / (6.0 * a), cy / (6.0 * a))


def polygon_perimeter(points: Sequence[Point]) -> float:
    n = len(points)
    return sum(math.hypot(points[(i + 1) % n][0] - points[i][0],
                          points[(i + 1) % n][1] - points[i][1]) for i in range(n))


def polygon_bbox(points: Sequence[Point]) -> tuple[float, float, float, float]:
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return (min(xs), min(ys), max(xs), max(ys))


def circularity(points: Sequence[Point]) -> float:
    """Isoperimetric quotient 4*pi*A / P^2; 1.0 for a perfect circle."""
    p = polygon_perimeter(points)
    if p <= 0:
        return 0.0
    return 4.0 * math.pi * polygon_area(points) / (p * p)


def _orient(a: Point, b: Point, c: Point) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a: Point, b: Point, p: Point) -> bool:
    return (min(a[0], b[0]) - 1e-12 <= p[0] <= max(a[0], b[0]) + 1e-12
            and min(a[1], b[1]) - 1e-12 <= p[1] <= max(a[1], b[1]) + 1e-12)


def segments_intersect(p1: Point, p2: Point, p3: Point, p4: Point) -> bool:
    d1 = _orient(p3, p4, p1)
    d2 = _orient(p3, p4, p2)
    d3 = _orient(p1, p2, p3)
    d4 = _orient(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0:
        return True
    if d1 == 0 and _on_segment(p3, p4, p1):
        return True
    if d2 == 0 and _on_segment(p3, p4, p2):
        return True
    if d3 == 0 and _on_segment(p1, p2, p3):
        return True
    if d4 == 0 and _on_segment(p1, p2, p4):
        return True
    return False


def is_simple_polygon(points: Sequence[Point]) -> bool:
    """True if no two non-adjacent edges intersect. O(n^2)."""
    n = len(points)
    if n < 3:
        return False
    edges = [(points[i], points[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            # skip adjacent edges (shared vertex)
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if segments_intersect(edges[i][0], edges[i][1], edges[j][0], edges[j][1]):
                return False
    return True


def polygon_moments(points: Sequence[Point]) -> dict[str, float]:
    """Raw geometric moments m00..m30 of the polygon interior (Green's theorem)."""
    m = {k: 0.0 for k in ("m00", "m10", "m01", "m20", "m11", "m02", "m30", "m21", "m12", "m03")}
    n = len(points)
    for i in range(n):
        x0, y0 = points[i]
        x1, y1 = points[(i + 1) % n]
        a = x0 * y1 - x1 * y0
        m["m00"] += a
        m["m10"] += a * (x0 + x1)
        m["m01"] += a * (y0 + y1)
        m["m20"] += a * (x0 * x0 + x0 * x1 + x1 * x1)
        m["m11"] += a * (2 * x0 * y0 + x0 * y1 + x1 * y0 + 2 * x1 * y1)
        m["m02"] += a * (y0 * y0 + y0 * y1 + y1 * y1)
        m["m30"] += a * (x0 ** 3 + x0 * x0 * x1 + x0 * x1 * x1 + x1 ** 3)
        m["m21"] += a * (3 * x0 * x0 * y0 + x0 * x0 * y1 + 2 * x0 * x1 * y0 + 2 * x0 * x1 * y1
                         + x1 * x1 * y0 + 3 * x1 * x1 * y1)
        m["m12"] += a * (3 * y0 * y0 * x0 + y0 * y0 * x1 + 2 * y0 * y1 * x0 + 2 * y0 * y1 * x1
                         + y1 * y1 * x0 + 3 * y1 * y1 * x1)
        m["m03"] += a * (y0 ** 3 + y0 * y0 * y1 + y0 * y1 * y1 + y1 ** 3)
    m["m00"] /= 2.0
    m["m10"] /= 6.0
    m["m01"] /= 6.0
    m["m20"] /= 12.0
    m["m11"] /= 24.0
    m["m02"] /= 12.0
    m["m30"] /= 20.0
    m["m21"] /= 60.0
    m["m12"] /= 60.0
    m["m03"] /= 20.0
    return m


def hu_descriptor(points: Sequence[Point]) -> tuple[float, ...]:
    """7-component scale/translation/rotation-invariant contour-moment descriptor.

    Components are log-scaled Hu invariants so pairwise distances stay O(1).
    """
    m = polygon_moments(points)
    a = m["m00"]
    if a < 0:  # clockwise polygons flip the sign of every moment
        m = {k: -v for k, v in m.items()}
        a = m["m00"]
    if a <= 0:
        return (0.0,) * 7
    cx = m["m10"] / a
    cy = m["m01"] / a
    mu20 = m["m20"] - cx * m["m10"]
    mu02 = m["m02"] - cy * m["m01"]
    mu11 = m["m11"] - cx * m["m01"]
    mu30 = m["m30"] - 3 * cx * m["m20"] + 2 * cx * cx * m["m10"]
    mu03 = m["m03"] - 3 * cy * m["m02"] + 2 * cy * cy * m["m01"]
    mu21 = m["m21"] - 2 * cx * m["m11"] - cy * m["m20"] + 2 * cx * cx * m["m01"]
    mu12 = m["m12"] - 2 * cy * m["m11"] - cx * m["m02"] + 2 * cy * cy * m["m10"]
    n20 = mu20 / a ** 2
    n02 = mu02 / a ** 2
    n11 = mu11 / a ** 2
    n30 = mu30 / a ** 2.5
    n03 = mu03 / a ** 2.5
    n21 = mu21 / a ** 2.5
    n12 = mu12 / a ** 2.5
    h = (
        n20 + n02,
        (n20 - n02) ** 2 + 4 * n11 ** 2,
        (n30 - 3 * n12) ** 2 + (3 * n21 - n03) ** 2,
        (n30 + n12) ** 2 + (n21 + n03) ** 2,
        (n30 - 3 * n12) * (n30 + n12) * ((n30 + n12) ** 2 - 3 * (n21 + n03) ** 2)
        + (3 * n21 - n03) * (n21 + n03) * (3 * (n30 + n12) ** 2 - (n21 + n03) ** 2),
        (n20 - n02) * ((n30 + n12) ** 2 - (n21 + n03) ** 2)
        + 4 * n11 * (n30 + n12) * (n21 + n03),
        (3 * n21 - n03) * (n30 + n12) * ((n30 + n12) ** 2 - 3 * (n21 + n03) ** 2)
        - (n30 - 3 * n12) * (n21 + n03) * (3 * (n30 + n12) ** 2 - (n21 + n03) ** 2),
    )
    out = []
    for v in h:
        if abs(v) < 1e-30:
            out.append(0.0)
            continue
        c = math.copysign(math.log10(abs(v)), v)
        if abs(c) < 1e-3:  # invariant ~1: keep the reciprocal bounded
            c = math.copysign(1e-3, c if c != 0 else 1.0)
        out.append(1.0 / c)
    return tuple(out)


def shape_distance(a: Sequence[Point], b: Sequence[Point]) -> float:
    """Mean absolute difference of the log-scaled moment descriptors."""
    da = hu_descriptor(a)
    db = hu_descriptor(b)
    return sum(abs(x - y) for x, y in zip(da, db)) / len(da)
