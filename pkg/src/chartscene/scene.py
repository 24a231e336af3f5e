"""Scene manifest ingestion: geometry derivation, shape classification,
semantic filtering/grouping, and element descriptions."""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Any, Optional, Sequence

from . import geometry
from .model import (
    BoundingBox,
    ElementEntry,
    ImageDescription,
    LineGeom,
    NarrativeFeatures,
    ParseError,
    PlaneGeom,
    PointGeom,
    SceneElement,
    SceneMember,
    Violation,
    _check_keys,
    _expect_list,
    _expect_map,
    _expect_num,
    _expect_str,
)

POINT_AREA_FRACTION = 0.005     # bbox area below this fraction of the image -> point
POINT_CIRCULARITY = 0.8
CIRCLE_CIRCULARITY = 0.85
RECT_FILL_RATIO = 0.9
TRIANGLE_COVER = 0.9
FLAT_ASPECT = 4.0
GROUP_DISTANCE = 0.25           # contour-descriptor distance threshold
RELEVANT_AREA_FRACTION = 0.01


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    segment_id: str
    polygon: tuple[tuple[float, float], ...]
    semantic_label: str
    score: Optional[float] = None
    mask_ref: Optional[str] = None


@dataclass(frozen=True)
class SceneManifest:
    image_ref: str
    image_size: tuple[int, int]
    segments: tuple[Segment, ...]
    detected_lines: tuple[tuple[float, float, float, float], ...] = ()

    @classmethod
    def from_obj(cls, obj: Any, path: str = "manifest") -> "SceneManifest":
        m = _expect_map(obj, path)
        _check_keys(m, ("imageRef", "imageSize", "segments", "detectedLines"), path)
        size = _expect_map(m.get("imageSize"), f"{path}.imageSize")
        _check_keys(size, ("w", "h"), f"{path}.imageSize")
        segments = []
        for i, s in enumerate(_expect_list(m.get("segments"), f"{path}.segments")):
            sm = _expect_map(s, f"{path}.segments[{i}]")
            _check_keys(sm, ("segmentId", "polygon", "semanticLabel", "score", "maskRef"),
                        f"{path}.segments[{i}]")
            polygon = tuple(
                (_expect_num(_expect_map(p, f"{path}.segments[{i}].polygon[{j}]").get("x"),
                             f"{path}.segments[{i}].polygon[{j}].x"),
                 _expect_num(p.get("y"), f"{path}.segments[{i}].polygon[{j}].y"))
                for j, p in enumerate(_expect_list(sm.get("polygon"), f"{path}.segments[{i}].polygon"))
            )
            segments.append(Segment(
                _expect_str(sm.get("segmentId"), f"{path}.segments[{i}].segmentId"),
                polygon,
                _expect_str(sm.get("semanticLabel"), f"{path}.segments[{i}].semanticLabel"),
                _expect_num(sm["score"], f"{path}.segments[{i}].score") if "score" in sm else None,
                _expect_str(sm["maskRef"], f"{path}.segments[{i}].maskRef") if "maskRef" in sm else None,
            ))
        lines = tuple(
            tuple(_expect_num(line.get(k), f"{path}.detectedLines[{i}].{k}")
                  for k in ("x1", "y1", "x2", "y2"))
            for i, line in enumerate(_expect_list(m.get("detectedLines", []), f"{path}.detectedLines"))
        )
        return cls(
            _expect_str(m.get("imageRef"), f"{path}.imageRef"),
            (int(_expect_num(size.get("w"), f"{path}.imageSize.w")),
             int(_expect_num(size.get("h"), f"{path}.imageSize.h"))),
            tuple(segments),
            lines,
        )

    def to_obj(self) -> dict:
        out: dict[str, Any] = {
            "imageRef": self.image_ref,
            "imageSize": {"w": self.image_size[0], "h": self.image_size[1]},
            "segments": [],
        }
        for s in self.segments:
            seg: dict[str, Any] = {
                "segmentId": s.segment_id,
                "polygon": [{"x": x, "y": y} for x, y in s.polygon],
                "semanticLabel": s.semantic_label,
            }
            if s.score is not None:
                seg["score"] = s.score
            if s.mask_ref is not None:
                seg["maskRef"] = s.mask_ref
            out["segments"].append(seg)
        if self.detected_lines:
            out["detectedLines"] = [
                {"x1": x1, "y1": y1, "x2": x2, "y2": y2} for x1, y1, x2, y2 in self.detected_lines
            ]
        return out

    def _violations(self, path: str = "manifest") -> list[Violation]:
        out: list[Violation] = []
        ids = [s.segment_id for s in self.segments]
        if len(set(ids)) != len(ids):
            out.append(Violation(f"{path}.segments", "segment ids must be unique"))
        w, h = self.image_size
        for i, s in enumerate(self.segments):
            for j, (x, y) in enumerate(s.polygon):
                if not (0 <= x <= w and 0 <= y <= h):
                    out.append(Violation(f"{path}.segments[{i}].polygon[{j}]",
                                         "polygon point outside image bounds"))
        return out


# ---------------------------------------------------------------------------
# geometry derivation

def derive_line_geometry(line: Sequence[float], width: Optional[float] = None) -> LineGeom:
    x1, y1, x2, y2 = line
    return LineGeom.from_endpoints(x1, y1, x2, y2, width=width)


def derive_geometry(segment: Segment, image_size: tuple[int, int]):
    """Derive a Point or Plane geometry from a segment polygon."""
    pts = segment.polygon
    if len(pts) < 3:
        raise GeometryError(f"segment {segment.segment_id}: polygon needs >= 3 points")
    if not geometry.is_simple_polygon(pts):
        raise GeometryError(f"segment {segment.segment_id}: polygon self-intersects")
    xmin, ymin, xmax, ymax = geometry.polygon_bbox(pts)
    bbox = BoundingBox(xmin, ymin, xmax, ymax)
    cx, cy = geometry.polygon_centroid(pts)
    circ = geometry.circularity(pts)
    image_area = image_size[0] * image_size[1]
    bbox_area = bbox.width * bbox.height
    if image_area > 0 and bbox_area < POINT_AREA_FRACTION * image_area and circ >= POINT_CIRCULARITY:
        size = max(bbox.width, bbox.height)
        return PointGeom(cx, cy, size=size, label=segment.semantic_label, bounding_box=bbox)
    height = bbox.height if bbox.height > 0 else 1.0
    return PlaneGeom(
        boundary_points=pts,
        center=(cx, cy),
        shape_type=classify_shape_points(pts),
        aspect_ratio=bbox.width / height if bbox.width > 0 else 1.0 / height,
        bounding_box=bbox,
        label=segment.semantic_label,
    )


def _best_triangle_area(pts: Sequence[tuple[float, float]]) -> float:
    candidates = list(pts)
    if len(candidates) > 40:  # keep the cubic scan bounded
        step = len(candidates) / 40.0
        candidates = [candidates[int(i * step)] for i in range(40)]
    best = 0.0
    for a, b, c in itertools.combinations(candidates, 3):
        area = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])) / 2.0
        best = max(best, area)
    return best


def classify_shape_points(pts: Sequence[tuple[float, float]]) -> str:
    area = geometry.polygon_area(pts)
    circ = geometry.circularity(pts)
    xmin, ymin, xmax, ymax = geometry.polygon_bbox(pts)
    w = xmax - xmin
    h = ymax - ymin
    aspect = (w / h) if h > 0 else float("inf")
    if circ >= CIRCLE_CIRCULARITY:
        return "circle"
    bbox_area = w * h
    if bbox_area > 0 and area / bbox_area >= RECT_FILL_RATIO:
        return "rectangle"
    if area > 0 and _best_triangle_area(pts) / area >= TRIANGLE_COVER:
        return "triangle"
    if aspect >= FLAT_ASPECT or aspect <= 1.0 / FLAT_ASPECT:
        return "flattening"
    return "polygon"


def classify_shape(plane: PlaneGeom) -> str:
    return classify_shape_points(plane.boundary_points)


# ---------------------------------------------------------------------------
# filtering and grouping

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokens(text: str) -> set[str]:
    return set(_TOKEN_RE.findall(text.lower()))


def _narration_vocabulary(features: NarrativeFeatures) -> set[str]:
    vocab: set[str] = set()
    for e in features.entity_objects:
        vocab |= tokens(e)
    for f in features.data_facts:
        # nouns are approximated by capitalized or long tokens
        for word in f.split():
            bare = word.strip(".,!?;:()\"'")
            if bare and (bare[0].isupper() or len(bare) >= 4):
                vocab |= tokens(bare)
    return vocab


def filter_and_group(manifest: SceneManifest, features: NarrativeFeatures) -> list[SceneElement]:
    """Drop narrative-irrelevant small segments, then merge same-label,
    similar-contour segments into grouped elements."""
    vocab = _narration_vocabulary(features)
    image_area = manifest.image_size[0] * manifest.image_size[1]

    kept: list[Segment] = []
    for seg in manifest.segments:
        overlap = tokens(seg.semantic_label) & vocab
        area = geometry.polygon_area(seg.polygon)
        if not overlap and image_area > 0 and area < RELEVANT_AREA_FRACTION * image_area:
            continue
        kept.append(seg)

    # group by shared semantic token + pairwise contour similarity
    grouped: list[list[Segment]] = []
    used: set[str] = set()
    for i, seg in enumerate(kept):
        if seg.segment_id in used:
            continue
        cluster = [seg]
        used.add(seg.segment_id)
        for other in kept[i + 1:]:
            if other.segment_id in used:
                continue
            if not (tokens(seg.semantic_label) & tokens(other.semantic_label)):
                continue
            if all(geometry.shape_distance(member.polygon, other.polygon) <= GROUP_DISTANCE
                   for member in cluster):
                cluster.append(other)
                used.add(other.segment_id)
        grouped.append(cluster)

    elements: list[SceneElement] = []
    for idx, cluster in enumerate(grouped):
        members = []
        for seg in cluster:
            geom = derive_geometry(seg, manifest.image_size)
            primitive = "point" if isinstance(geom, PointGeom) else "plane"
            members.append(SceneMember(primitive, geom))
        label = cluster[0].semantic_label
        if len(cluster) > 1:
            elements.append(SceneElement(
                element_id=f"group-{idx}",
                granularity="groupedElements",
                members=tuple(members),
                semantic_label=label,
                layout_description=_position_phrase_members(members, manifest.image_size),
                mask_ref=cluster[0].mask_ref,
            ))
        else:
            elements.append(SceneElement(
                element_id=cluster[0].segment_id,
                granularity="singleElement",
                members=tuple(members),
                semantic_label=label,
                layout_description=_position_phrase_members(members, manifest.image_size),
                mask_ref=cluster[0].mask_ref,
            ))
    for li, line in enumerate(manifest.detected_lines):
        geom = derive_line_geometry(line)
        elements.append(SceneElement(
            element_id=f"line-{li}",
            granularity="singleElement",
            members=(SceneMember("line", geom),),
            semantic_label="line",
            layout_description=_position_phrase((geom.center[0], geom.center[1]), manifest.image_size),
        ))
    return elements


def _position_phrase(point: tuple[float, float], image_size: tuple[int, int]) -> str:
    w, h = image_size
    col = min(2, int(point[0] / w * 3)) if w > 0 else 1
    row = min(2, int(point[1] / h * 3)) if h > 0 else 1
    rows = ("upper", "center", "lower")
    cols = ("left", "center", "right")
    if rows[row] == "center" and cols[col] == "center":
        return "center"
    return f"{rows[row]}-{cols[col]}"


def _position_phrase_members(members: Sequence[SceneMember], image_size) -> str:
    xs = [m.centroid[0] for m in members]
    ys = [m.centroid[1] for m in members]
    return _position_phrase((sum(xs) / len(xs), sum(ys) / len(ys)), image_size)


# ---------------------------------------------------------------------------
# distribution layout

def _linear_r2(points: Sequence[tuple[float, float]]) -> float:
    """Collinearity score via total least squares: 1 - minor/major variance."""
    n = len(points)
    mx = sum(p[0] for p in points) / n
    my = sum(p[1] for p in points) / n
    sxx = sum((p[0] - mx) ** 2 for p in points) / n
    syy = sum((p[1] - my) ** 2 for p in points) / n
    sxy = sum((p[0] - mx) * (p[1] - my) for p in points) / n
    tr = sxx + syy
    if tr <= 0:
        return 0.0
    det = sxx * syy - sxy * sxy
    disc = math.sqrt(max(0.0, tr * tr / 4 - det))
    minor = tr / 2 - disc
    return 1.0 - minor / (tr / 2) if tr > 0 else 0.0


def _is_grid(points: Sequence[tuple[float, float]], tol: float) -> bool:
    xs = sorted(p[0] for p in points)
    ys = sorted(p[1] for p in points)

    def levels(vals: list[float]) -> list[float]:
        out: list[float] = []
        for v in vals:
            if not out or abs(v - out[-1]) > tol:
                out.append(v)
        return out

    lx = levels(xs)
    ly = levels(ys)
    if len(lx) < 2 or len(ly) < 2:
        return False
    if len(lx) * len(ly) != len(points):
        return False
    # every lattice site must be occupied by exactly one point
    for gx in lx:
        for gy in ly:
            hits = sum(1 for p in points if abs(p[0] - gx) <= tol and abs(p[1] - gy) <= tol)
            if hits != 1:
                return False
    return True


def _is_radial(points: Sequence[tuple[float, float]]) -> bool:
    n = len(points)
    if n < 3:
        return False
    cx = sum(p[0] for p in points) / n
    cy = sum(p[1] for p in points) / n
    dists = [math.hypot(p[0] - cx, p[1] - cy) for p in points]
    mean_d = sum(dists) / n
    if mean_d <= 0:
        return False
    if max(abs(d - mean_d) for d in dists) / mean_d > 0.15:
        return False
    angles = sorted(math.atan2(p[1] - cy, p[0] - cx) for p in points)
    gaps = [angles[(i + 1) % n] - angles[i] for i in range(n - 1)]
    gaps.append(2 * math.pi - (angles[-1] - angles[0]))
    ideal = 2 * math.pi / n
    return max(abs(g - ideal) for g in gaps) <= 0.35 * ideal


def distribution_layout(members: Sequence[SceneMember]) -> str:
    points = [m.centroid for m in members]
    if len(points) < 2:
        return "scattered"
    span = max(max(p[0] for p in points) - min(p[0] for p in points),
               max(p[1] for p in points) - min(p[1] for p in points))
    tol = max(1.0, 0.1 * span)
    if len(points) >= 4 and _is_grid(points, tol):
        return "grid"
    if _linear_r2(points) >= 0.9:
        return "linear"
    if _is_radial(points):
        return "radial"
    return "scattered"


def describe_element(element: SceneElement, features: NarrativeFeatures,
                     image_size: tuple[int, int] = (0, 0)) -> ImageDescription:
    """Build the perception spec for a scene element."""
    prims = []
    for m in element.members:
        if m.primitive not in prims:
            prims.append(m.primitive)
    by_prim: dict[str, list[ElementEntry]] = {}
    for m in element.members:
        if m.primitive == "plane":
            shape = m.geometry.shape_type
        elif m.primitive == "line":
            shape = "flattening"
        else:
            shape = "circle"
        layout = _position_phrase(m.centroid, image_size) if image_size != (0, 0) \
            else element.layout_description
        semantic = _member_semantic(m, element, features)
        by_prim.setdefault(m.primitive, []).append(ElementEntry(layout, shape, semantic))
    dist = distribution_layout(element.members) if element.granularity == "groupedElements" else None
    return ImageDescription(
        grain_type=element.granularity,
        primitives=tuple(prims),
        element_level=tuple((p, tuple(v)) for p, v in by_prim.items()),
        distribution_layout=dist,
    )


def _member_semantic(member: SceneMember, element: SceneElement,
                     features: NarrativeFeatures) -> str:
    label = getattr(member.geometry, "label", None) or element.semantic_label
    # prefer a narrative entity that shares vocabulary with the raw label
    for entity in features.entity_objects:
        if tokens(entity) & tokens(label):
            return entity
    return label
