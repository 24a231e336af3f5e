"""Core document model: every type exchanged between pipeline stages.

All types are immutable value objects with a strict JSON wire format.
Parsing is strict (unknown fields raise :class:`ParseError`); semantic
invariants are checked separately by :func:`validate`, which reports each
violation with a path instead of raising.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

__all__ = [
    "ParseError",
    "Violation",
    "ValidationReport",
    "ColumnKind",
    "Column",
    "DataTable",
    "NarrativeAction",
    "NarrativeFeatures",
    "ChartProposal",
    "Mark",
    "VisDescription",
    "BoundingBox",
    "PointGeom",
    "LineGeom",
    "PlaneGeom",
    "SceneMember",
    "SceneElement",
    "ElementEntry",
    "ImageDescription",
    "SemanticAlignment",
    "ShapeAlignment",
    "LayoutAlignment",
    "VisualAlignment",
    "MappingPlanEntry",
    "DesignPlan",
    "ToolCall",
    "InpaintOperation",
    "EvaluationResult",
    "AnimationConfig",
    "TelemetryRecord",
    "dumps",
    "loads",
    "round_trip",
    "validate",
    "normalize_angle",
    "CHART_FAMILIES",
    "SHAPE_TYPES",
    "ALIGNMENT_TYPES",
    "TOOL_SIGNATURES",
]

CHART_FAMILIES = ("bar", "line", "scatter", "area", "pie", "donut", "radar")
SHAPE_TYPES = ("circle", "ellipse", "rectangle", "triangle", "polygon", "flattening")
ALIGNMENT_TYPES = ("center", "bottom-left", "bottom-right", "top-left", "top-right")
COLUMN_KINDS = ("categorical", "numeric", "temporal")
ColumnKind = str


class ParseError(ValueError):
    """Malformed serialization: wrong type, missing key, or unknown field."""

    def __init__(self, path: str, message: str) -> None:
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class Violation:
    path: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def paths(self) -> list[str]:
        return [v.path for v in self.violations]


# ---------------------------------------------------------------------------
# parse helpers

def _expect_map(obj: Any, path: str) -> Mapping[str, Any]:
    if not isinstance(obj, Mapping):
        raise ParseError(path, f"expected object, got {type(obj).__name__}")
    return obj


def _expect_list(obj: Any, path: str) -> Sequence[Any]:
    if not isinstance(obj, (list, tuple)):
        raise ParseError(path, f"expected array, got {type(obj).__name__}")
    return obj


def _expect_str(obj: Any, path: str) -> str:
    if not isinstance(obj, str):
        raise ParseError(path, f"expected string, got {type(obj).__name__}")
    return obj


def _expect_num(obj: Any, path: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ParseError(path, f"expected number, got {type(obj).__name__}")
    return float(obj)


def _expect_bool(obj: Any, path: str) -> bool:
    if not isinstance(obj, bool):
        raise ParseError(path, f"expected boolean, got {type(obj).__name__}")
    return obj


def _check_keys(obj: Mapping[str, Any], allowed: Sequence[str], path: str) -> None:
    extra = set(obj) - set(allowed)
    if extra:
        raise ParseError(path, f"unknown field(s): {', '.join(sorted(extra))}")


def _num_out(v: float) -> Any:
    """Emit integral floats as ints so round trips stay byte-stable."""
    if isinstance(v, float) and v.is_integer() and abs(v) < 1e15:
        return int(v)
    return v


def normalize_angle(deg: float) -> float:
    """Fold an angle in degrees into [-90, 90] by reflecting line direction."""
    a = math.fmod(deg, 180.0)
    if a > 90.0:
        a -= 180.0
    elif a < -90.0:
        a += 180.0
    return a


# ---------------------------------------------------------------------------
# DataTable

@dataclass(frozen=True)
class Column:
    name: str
    kind: ColumnKind


@dataclass(frozen=True)
class DataTable:
    columns: tuple[Column, ...]
    rows: tuple[tuple[Any, ...], ...]

    @classmethod
    def from_obj(cls, obj: Any, path: str = "table") -> "DataTable":
        m = _expect_map(obj, path)
        _check_keys(m, ("columns", "rows"), path)
        cols = []
        for i, c in enumerate(_expect_list(m.get("columns"), f"{path}.columns")):
            cm = _expect_map(c, f"{path}.columns[{i}]")
            _check_keys(cm, ("name", "kind"), f"{path}.columns[{i}]")
            kind = _expect_str(cm.get("kind"), f"{path}.columns[{i}].kind")
            if kind not in COLUMN_KINDS:
                raise ParseError(f"{path}.columns[{i}].kind", f"unknown kind {kind!r}")
            cols.append(Column(_expect_str(cm.get("name"), f"{path}.columns[{i}].name"), kind))
        rows = tuple(
            tuple(_expect_list(r, f"{path}.rows[{i}]"))
            for i, r in enumerate(_expect_list(m.get("rows"), f"{path}.rows"))
        )
        return cls(tuple(cols), rows)

    def to_obj(self) -> dict:
        return {
            "columns": [{"name": c.name, "kind": c.kind} for c in self.columns],
            "rows": [list(r) for r in self.rows],
        }

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def column_index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise KeyError(name)

    def values(self, name: str) -> list[Any]:
        i = self.column_index(name)
        return [r[i] for r in self.rows]

    def numeric_values(self, name: str) -> list[float]:
        return [float(v) for v in self.values(name)]

    def _violations(self, path: str = "table") -> list[Violation]:
        out: list[Violation] = []
        names = self.column_names()
        if len(set(names)) != len(names):
            out.append(Violation(f"{path}.columns", "column names must be unique"))
        ncol = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != ncol:
                out.append(Violation(f"{path}.rows[{i}]", f"expected {ncol} values, got {len(row)}"))
                continue
            for j, col in enumerate(self.columns):
                if col.kind == "numeric":
                    try:
                        v = float(row[j])
                    except (TypeError, ValueError):
                        out.append(Violation(f"{path}.rows[{i}][{j}]", "numeric cell does not parse"))
                        continue
                    if not math.isfinite(v):
                        out.append(Violation(f"{path}.rows[{i}][{j}]", "numeric cell is not finite"))
        return out


# ---------------------------------------------------------------------------
# NarrativeFeatures

@dataclass(frozen=True)
class NarrativeAction:
    kind: str  # enter | emphasize
    description: str


@dataclass(frozen=True)
class NarrativeFeatures:
    data_facts: tuple[str, ...]
    data_columns: tuple[str, ...]
    data_transformations: tuple[str, ...]
    entity_objects: tuple[str, ...]
    actions: tuple[NarrativeAction, ...]

    @classmethod
    def from_obj(cls, obj: Any, path: str = "features") -> "NarrativeFeatures":
        m = _expect_map(obj, path)
        _check_keys(m, ("dataRelatedInformation", "entityObjects", "actions"), path)
        info = _expect_map(m.get("dataRelatedInformation"), f"{path}.dataRelatedInformation")
        _check_keys(info, ("dataFact", "metadata"), f"{path}.dataRelatedInformation")
        facts = tuple(
            _expect_str(f, f"{path}.dataRelatedInformation.dataFact[{i}]")
            for i, f in enumerate(_expect_list(info.get("dataFact"), f"{path}.dataRelatedInformation.dataFact"))
        )
        meta = _expect_map(info.get("metadata"), f"{path}.dataRelatedInformation.metadata")
        _check_keys(meta, ("dataColumns", "dataTransformation"), f"{path}.dataRelatedInformation.metadata")
        columns = tuple(
            _expect_str(c, f"{path}...dataColumns[{i}]")
            for i, c in enumerate(_expect_list(meta.get("dataColumns"), f"{path}...dataColumns"))
        )
        transforms = tuple(
            _expect_str(t, f"{path}...dataTransformation[{i}]")
            for i, t in enumerate(_expect_list(meta.get("dataTransformation"), f"{path}...dataTransformation"))
        )
        entities = tuple(
            _expect_str(e, f"{path}.entityObjects[{i}]")
            for i, e in enumerate(_expect_list(m.get("entityObjects"), f"{path}.entityObjects"))
        )
        actions: list[NarrativeAction] = []
        for i, a in enumerate(_expect_list(m.get("actions"), f"{path}.actions")):
            am = _expect_map(a, f"{path}.actions[{i}]")
            if len(am) != 1:
                raise ParseError(f"{path}.actions[{i}]", "action must have exactly one key")
            (kind, desc), = am.items()
            if kind not in ("enter", "emphasize"):
                raise ParseError(f"{path}.actions[{i}]", f"unknown action kind {kind!r}")
            actions.append(NarrativeAction(kind, _expect_str(desc, f"{path}.actions[{i}].{kind}")))
        return cls(facts, columns, transforms, entities, tuple(actions))

    def to_obj(self) -> dict:
        return {
            "dataRelatedInformation": {
                "dataFact": list(self.data_facts),
                "metadata": {
                    "dataColumns": list(self.data_columns),
                    "dataTransformation": list(self.data_transformations),
                },
            },
            "entityObjects": list(self.entity_objects),
            "actions": [{a.kind: a.description} for a in self.actions],
        }

    def _violations(self, path: str = "features", table: Optional[DataTable] = None) -> list[Violation]:
        out: list[Violation] = []
        if table is not None:
            known = set(table.column_names())
            for i, c in enumerate(self.data_columns):
                if c not in known:
                    out.append(Violation(f"{path}.dataRelatedInformation.metadata.dataColumns[{i}]",
                                         f"column {c!r} not present in the data table"))
        for i, a in enumerate(self.actions):
            if a.kind not in ("enter", "emphasize"):
                out.append(Violation(f"{path}.actions[{i}]", f"invalid action kind {a.kind!r}"))
        return out


# ---------------------------------------------------------------------------
# ChartProposal

@dataclass(frozen=True)
class ChartProposal:
    chart_id: str
    type: str
    category_key: tuple[str, ...]
    value_keys: tuple[str, ...]
    title: str

    @property
    def family(self) -> str:
        return self.chart_id.rsplit("-", 1)[0]

    @classmethod
    def from_obj(cls, obj: Any, path: str = "proposal") -> "ChartProposal":
        m = _expect_map(obj, path)
        _check_keys(m, ("chartId", "type", "categoryKey", "valueKeys", "title"), path)
        return cls(
            _expect_str(m.get("chartId"), f"{path}.chartId"),
            _expect_str(m.get("type"), f"{path}.type"),
            tuple(_expect_str(c, f"{path}.categoryKey[{i}]")
                  for i, c in enumerate(_expect_list(m.get("categoryKey"), f"{path}.categoryKey"))),
            tuple(_expect_str(c, f"{path}.valueKeys[{i}]")
                  for i, c in enumerate(_expect_list(m.get("valueKeys"), f"{path}.valueKeys"))),
            _expect_str(m.get("title"), f"{path}.title"),
        )

    def to_obj(self) -> dict:
        return {
            "chartId": self.chart_id,
            "type": self.type,
            "categoryKey": list(self.category_key),
            "valueKeys": list(self.value_keys),
            "title": self.title,
        }

    def _violations(self, path: str = "proposal", table: Optional[DataTable] = None) -> list[Violation]:
        out: list[Violation] = []
        family, sep, index = self.chart_id.rpartition("-")
        if not sep or family not in CHART_FAMILIES or not index.isdigit():
            out.append(Violation(f"{path}.chartId",
                                 f"chartId {self.chart_id!r} must be <family>-<index> with a known family"))
        if table is not None:
            known = set(table.column_names())
            for i, c in enumerate(self.category_key):
                if c not in known:
                    out.append(Violation(f"{path}.categoryKey[{i}]", f"unknown column {c!r}"))
            for i, c in enumerate(self.value_keys):
                if c not in known:
                    out.append(Violation(f"{path}.valueKeys[{i}]", f"unknown column {c!r}"))
                elif table.column(c).kind != "numeric":
                    out.append(Violation(f"{path}.valueKeys[{i}]", f"column {c!r} is not numeric"))
        return out


# ---------------------------------------------------------------------------
# VisDescription

@dataclass(frozen=True)
class Mark:
    type: str
    role: str  # dataMarker | annotation
    graphical_properties: tuple[tuple[str, str], ...]

    def properties(self) -> dict[str, str]:
        return dict(self.graphical_properties)


@dataclass(frozen=True)
class VisDescription:
    chart_type: str
    axis_x: str
    axis_y: str
    chart_variants: str
    marks: tuple[Mark, ...]
    visual_insight: str

    @classmethod
    def from_obj(cls, obj: Any, path: str = "visDescription") -> "VisDescription":
        m = _expect_map(obj, path)
        if set(m) == {"visDescription"}:
            m = _expect_map(m["visDescription"], path)
        _check_keys(m, ("chartType", "spatialSubstrate", "graphicalElements", "visualInsight"), path)
        sub = _expect_map(m.get("spatialSubstrate"), f"{path}.spatialSubstrate")
        _check_keys(sub, ("axis", "chartVariants"), f"{path}.spatialSubstrate")
        axis = _expect_map(sub.get("axis"), f"{path}.spatialSubstrate.axis")
        _check_keys(axis, ("x", "y"), f"{path}.spatialSubstrate.axis")
        ge = _expect_map(m.get("graphicalElements"), f"{path}.graphicalElements")
        _check_keys(ge, ("mark",), f"{path}.graphicalElements")
        marks: list[Mark] = []
        for i, mk in enumerate(_expect_list(ge.get("mark"), f"{path}.graphicalElements.mark")):
            mm = _expect_map(mk, f"{path}.graphicalElements.mark[{i}]")
            _check_keys(mm, ("type", "role", "graphicalProperties"), f"{path}.graphicalElements.mark[{i}]")
            role = _expect_str(mm.get("role"), f"{path}.graphicalElements.mark[{i}].role")
            props = _expect_map(mm.get("graphicalProperties"),
                                f"{path}.graphicalElements.mark[{i}].graphicalProperties")
            marks.append(Mark(
                _expect_str(mm.get("type"), f"{path}.graphicalElements.mark[{i}].type"),
                role,
                tuple((k, _expect_str(v, f"{path}...graphicalProperties.{k}")) for k, v in props.items()),
            ))
        return cls(
            _expect_str(m.get("chartType"), f"{path}.chartType"),
            _expect_str(axis.get("x"), f"{path}.spatialSubstrate.axis.x"),
            _expect_str(axis.get("y"), f"{path}.spatialSubstrate.axis.y"),
            _expect_str(sub.get("chartVariants"), f"{path}.spatialSubstrate.chartVariants"),
            tuple(marks),
            _expect_str(m.get("visualInsight"), f"{path}.visualInsight"),
        )

    def to_obj(self) -> dict:
        return {
            "visDescription": {
                "chartType": self.chart_type,
                "spatialSubstrate": {
                    "axis": {"x": self.axis_x, "y": self.axis_y},
                    "chartVariants": self.chart_variants,
                },
                "graphicalElements": {
                    "mark": [
                        {
                            "type": mk.type,
                            "role": mk.role,
                            "graphicalProperties": dict(mk.graphical_properties),
                        }
                        for mk in self.marks
                    ]
                },
                "visualInsight": self.visual_insight,
            }
        }

    def _violations(self, path: str = "visDescription", table: Optional[DataTable] = None) -> list[Violation]:
        out: list[Violation] = []
        if not any(mk.role == "dataMarker" for mk in self.marks):
            out.append(Violation(f"{path}.graphicalElements.mark", "at least one mark must have role dataMarker"))
        for i, mk in enumerate(self.marks):
            if mk.role not in ("dataMarker", "annotation"):
                out.append(Violation(f"{path}.graphicalElements.mark[{i}].role", f"invalid role {mk.role!r}"))
        if table is not None:
            known = set(table.column_names())
            for axis_name, value in (("x", self.axis_x), ("y", self.axis_y)):
                if value not in known:
                    out.append(Violation(f"{path}.spatialSubstrate.axis.{axis_name}",
                                         f"axis field {value!r} not in the source table"))
        return out


# ---------------------------------------------------------------------------
# Geometry value objects

@dataclass(frozen=True)
class BoundingBox:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def center(self) -> tuple[float, float]:
        return ((self.xmin + self.xmax) / 2.0, (self.ymin + self.ymax) / 2.0)

    def anchor(self, alignment: str) -> tuple[float, float]:
        if alignment == "center":
            return self.center
        if alignment == "top-left":
            return (self.xmin, self.ymin)
        if alignment == "top-right":
            return (self.xmax, self.ymin)
        if alignment == "bottom-left":
            return (self.xmin, self.ymax)
        if alignment == "bottom-right":
            return (self.xmax, self.ymax)
        raise ValueError(f"unknown alignment type {alignment!r}")

    @classmethod
    def from_obj(cls, obj: Any, path: str) -> "BoundingBox":
        m = _expect_map(obj, path)
        _check_keys(m, ("xmin", "ymin", "xmax", "ymax"), path)
        return cls(*(_expect_num(m.get(k), f"{path}.{k}") for k in ("xmin", "ymin", "xmax", "ymax")))

    def to_obj(self) -> dict:
        return {"xmin": _num_out(self.xmin), "ymin": _num_out(self.ymin),
                "xmax": _num_out(self.xmax), "ymax": _num_out(self.ymax)}


def _xy_from_obj(obj: Any, path: str) -> tuple[float, float]:
    m = _expect_map(obj, path)
    _check_keys(m, ("x", "y"), path)
    return (_expect_num(m.get("x"), f"{path}.x"), _expect_num(m.get("y"), f"{path}.y"))


def _xy_to_obj(p: tuple[float, float]) -> dict:
    return {"x": _num_out(p[0]), "y": _num_out(p[1])}


@dataclass(frozen=True)
class PointGeom:
    x: float
    y: float
    size: Optional[float] = None
    color: Optional[str] = None
    label: Optional[str] = None
    bounding_box: Optional[BoundingBox] = None

    @classmethod
    def from_obj(cls, obj: Any, path: str = "point") -> "PointGeom":
        m = _expect_map(obj, path)
        _check_keys(m, ("x", "y", "size", "color", "label", "boundingBox"), path)
        return cls(
            _expect_num(m.get("x"), f"{path}.x"),
            _expect_num(m.get("y"), f"{path}.y"),
            _expect_num(m["size"], f"{path}.size") if "size" in m else None,
            _expect_str(m["color"], f"{path}.color") if "color" in m else None,
            _expect_str(m["label"], f"{path}.label") if "label" in m else None,
            BoundingBox.from_obj(m["boundingBox"], f"{path}.boundingBox") if "boundingBox" in m else None,
        )

    def to_obj(self) -> dict:
        out: dict[str, Any] = {"x": _num_out(self.x), "y": _num_out(self.y)}
        if self.size is not None:
            out["size"] = _num_out(self.size)
        if self.color is not None:
            out["color"] = self.color
        if self.label is not None:
            out["label"] = self.label
        if self.bounding_box is not None:
            out["boundingBox"] = self.bounding_box.to_obj()
        return out

    def _violations(self, path: str = "point") -> list[Violation]:
        out: list[Violation] = []
        bb = self.bounding_box
        if bb is not None and not (bb.xmin <= self.x <= bb.xmax and bb.ymin <= self.y <= bb.ymax):
            out.append(Violation(f"{path}.boundingBox", "point lies outside its bounding box"))
        return out


@dataclass(frozen=True)
class LineGeom:
    x1: float
    y1: float
    x2: float
    y2: float
    center: tuple[float, float]
    length: float
    angle: float
    bounding_box: BoundingBox
    width: Optional[float] = None
    color: Optional[str] = None
    label: Optional[str] = None

    @classmethod
    def from_endpoints(cls, x1: float, y1: float, x2: float, y2: float,
                       width: Optional[float] = None, label: Optional[str] = None) -> "LineGeom":
        center = ((x1 + x2) / 2.0, (y1 + y2) / 2.0)
        length = math.hypot(x2 - x1, y2 - y1)
        # y grows downward in image coordinates; report the visual angle.
        angle = normalize_angle(math.degrees(math.atan2(-(y2 - y1), x2 - x1)))
        bb = BoundingBox(min(x1, x2), min(y1, y2), max(x1, x2), max(y1, y2))
        return cls(x1, y1, x2, y2, center, length, angle, bb, width=width, label=label)

    @classmethod
    def from_obj(cls, obj: Any, path: str = "line") -> "LineGeom":
        m = _expect_map(obj, path)
        _check_keys(m, ("x1", "y1", "x2", "y2", "width", "color", "label",
                        "center", "length", "angle", "boundingBox"), path)
        return cls(
            _expect_num(m.get("x1"), f"{path}.x1"),
            _expect_num(m.get("y1"), f"{path}.y1"),
            _expect_num(m.get("x2"), f"{path}.x2"),
            _expect_num(m.get("y2"), f"{path}.y2"),
            _xy_from_obj(m.get("center"), f"{path}.center"),
            _expect_num(m.get("length"), f"{path}.length"),
            _expect_num(m.get("angle"), f"{path}.angle"),
            BoundingBox.from_obj(m.get("boundingBox"), f"{path}.boundingBox"),
            width=_expect_num(m["width"], f"{path}.width") if "width" in m else None,
            color=_expect_str(m["color"], f"{path}.color") if "color" in m else None,
            label=_expect_str(m["label"], f"{path}.label") if "label" in m else None,
        )

    def to_obj(self) -> dict:
        out: dict[str, Any] = {
            "x1": _num_out(self.x1), "y1": _num_out(self.y1),
            "x2": _num_out(self.x2), "y2": _num_out(self.y2),
        }
        if self.width is not None:
            out["width"] = _num_out(self.width)
        if self.color is not None:
            out["color"] = self.color
        if self.label is not None:
            out["label"] = self.label
        out["center"] = _xy_to_obj(self.center)
        out["length"] = _num_out(self.length)
        out["angle"] = _num_out(self.angle)
        out["boundingBox"] = self.bounding_box.to_obj()
        return out

    def _violations(self, path: str = "line") -> list[Violation]:
        out: list[Violation] = []
        mid = ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
        if math.hypot(self.center[0] - mid[0], self.center[1] - mid[1]) > 1e-6:
            out.append(Violation(f"{path}.center", "center must be the midpoint of the endpoints"))
        if abs(self.length - math.hypot(self.x2 - self.x1, self.y2 - self.y1)) > 1e-6:
            out.append(Violation(f"{path}.length", "length must equal the endpoint distance"))
        if not -90.0 <= self.angle <= 90.0:
            out.append(Violation(f"{path}.angle", "angle must lie in [-90, 90]"))
        return out


@dataclass(frozen=True)
class PlaneGeom:
    boundary_points: tuple[tuple[float, float], ...]
    center: tuple[float, float]
    shape_type: str
    aspect_ratio: float
    bounding_box: BoundingBox
    label: Optional[str] = None

    @classmethod
    def from_obj(cls, obj: Any, path: str = "plane") -> "PlaneGeom":
        m = _expect_map(obj, path)
        _check_keys(m, ("boundaryPoints", "label", "center", "shapeType", "aspectRatio", "boundingBox"), path)
        points = tuple(
            _xy_from_obj(p, f"{path}.boundaryPoints[{i}]")
            for i, p in enumerate(_expect_list(m.get("boundaryPoints"), f"{path}.boundaryPoints"))
        )
        return cls(
            points,
            _xy_from_obj(m.get("center"), f"{path}.center"),
            _expect_str(m.get("shapeType"), f"{path}.shapeType"),
            _expect_num(m.get("aspectRatio"), f"{path}.aspectRatio"),
            BoundingBox.from_obj(m.get("boundingBox"), f"{path}.boundingBox"),
            label=_expect_str(m["label"], f"{path}.label") if "label" in m else None,
        )

    def to_obj(self) -> dict:
        out: dict[str, Any] = {"boundaryPoints": [_xy_to_obj(p) for p in self.boundary_points]}
        if self.label is not None:
            out["label"] = self.label
        out["center"] = _xy_to_obj(self.center)
        out["shapeType"] = self.shape_type
        out["aspectRatio"] = _num_out(self.aspect_ratio)
        out["boundingBox"] = self.bounding_box.to_obj()
        return out

    def _violations(self, path: str = "plane") -> list[Violation]:
        from . import geometry  # local import to avoid a cycle at module load

        out: list[Violation] = []
        pts = self.boundary_points
        if len(pts) < 3:
            out.append(Violation(f"{path}.boundaryPoints", "polygon needs at least 3 points"))
            return out
        if not geometry.is_simple_polygon(pts):
            out.append(Violation(f"{path}.boundaryPoints", "polygon must be simple (non-self-intersecting)"))
        else:
            cx, cy = geometry.polygon_centroid(pts)
            if math.hypot(self.center[0] - cx, self.center[1] - cy) > 1e-6:
                out.append(Violation(f"{path}.center", "center must be the polygon centroid"))
        if self.aspect_ratio <= 0:
            out.append(Violation(f"{path}.aspectRatio", "aspect ratio must be positive"))
        elif self.bounding_box.height > 0:
            expected = self.bounding_box.width / self.bounding_box.height
            if abs(self.aspect_ratio - expected) > 1e-6 * max(1.0, expected):
                out.append(Violation(f"{path}.aspectRatio", "aspect ratio must equal bbox width / height"))
        if self.shape_type not in SHAPE_TYPES:
            out.append(Violation(f"{path}.shapeType", f"unknown shape type {self.shape_type!r}"))
        return out


# ---------------------------------------------------------------------------
# SceneElement

_GEOM_CLASSES = {"point": PointGeom, "line": LineGeom, "plane": PlaneGeom}


@dataclass(frozen=True)
class SceneMember:
    primitive: str  # point | line | plane
    geometry: Any

    @classmethod
    def from_obj(cls, obj: Any, path: str) -> "SceneMember":
        m = _expect_map(obj, path)
        _check_keys(m, ("primitive", "geometry"), path)
        primitive = _expect_str(m.get("primitive"), f"{path}.primitive")
        if primitive not in _GEOM_CLASSES:
            raise ParseError(f"{path}.primitive", f"unknown primitive {primitive!r}")
        geom = _GEOM_CLASSES[primitive].from_obj(m.get("geometry"), f"{path}.geometry")
        return cls(primitive, geom)

    def to_obj(self) -> dict:
        return {"primitive": self.primitive, "geometry": self.geometry.to_obj()}

    @property
    def bounding_box(self) -> Optional[BoundingBox]:
        return self.geometry.bounding_box

    @property
    def centroid(self) -> tuple[float, float]:
        if self.primitive == "point":
            return (self.geometry.x, self.geometry.y)
        return tuple(self.geometry.center)


@dataclass(frozen=True)
class SceneElement:
    element_id: str
    granularity: str  # singleElement | groupedElements
    members: tuple[SceneMember, ...]
    semantic_label: str
    layout_description: str
    mask_ref: Optional[str] = None

    @classmethod
    def from_obj(cls, obj: Any, path: str = "element") -> "SceneElement":
        m = _expect_map(obj, path)
        _check_keys(m, ("elementId", "granularity", "members", "semanticLabel",
                        "layoutDescription", "maskRef"), path)
        members = tuple(
            SceneMember.from_obj(mm, f"{path}.members[{i}]")
            for i, mm in enumerate(_expect_list(m.get("members"), f"{path}.members"))
        )
        return cls(
            _expect_str(m.get("elementId"), f"{path}.elementId"),
            _expect_str(m.get("granularity"), f"{path}.granularity"),
            members,
            _expect_str(m.get("semanticLabel"), f"{path}.semanticLabel"),
            _expect_str(m.get("layoutDescription"), f"{path}.layoutDescription"),
            _expect_str(m["maskRef"], f"{path}.maskRef") if "maskRef" in m else None,
        )

    def to_obj(self) -> dict:
        out: dict[str, Any] = {
            "elementId": self.element_id,
            "granularity": self.granularity,
            "members": [mm.to_obj() for mm in self.members],
            "semanticLabel": self.semantic_label,
            "layoutDescription": self.layout_description,
        }
        if self.mask_ref is not None:
            out["maskRef"] = self.mask_ref
        return out

    def bounding_box(self) -> BoundingBox:
        boxes = [mm.bounding_box for mm in self.members if mm.bounding_box is not None]
        if not boxes:
            cx, cy = self.members[0].centroid
            return BoundingBox(cx, cy, cx, cy)
        return BoundingBox(min(b.xmin for b in boxes), min(b.ymin for b in boxes),
                           max(b.xmax for b in boxes), max(b.ymax for b in boxes))

    def _violations(self, path: str = "element") -> list[Violation]:
        out: list[Violation] = []
        if self.granularity == "singleElement":
            if len(self.members) != 1:
                out.append(Violation(f"{path}.members", "singleElement must have exactly one member"))
        elif self.granularity == "groupedElements":
            if len(self.members) < 2:
                out.append(Violation(f"{path}.members", "groupedElements must have at least two members"))
        else:
            out.append(Violation(f"{path}.granularity", f"invalid granularity {self.granularity!r}"))
        for i, mm in enumerate(self.members):
            out.extend(mm.geometry._violations(f"{path}.members[{i}].geometry"))
        return out


# ---------------------------------------------------------------------------
# ImageDescription

@dataclass(frozen=True)
class ElementEntry:
    layout: str
    shape: str
    semantic: str

    @classmethod
    def from_obj(cls, obj: Any, path: str) -> "ElementEntry":
        m = _expect_map(obj, path)
        keys = set(m)
        if "layoutDescription" in keys and "layout" in keys:
            raise ParseError(path, "both layout and layoutDescription present")
        layout_key = "layoutDescription" if "layoutDescription" in keys else "layout"
        _check_keys(m, (layout_key, "shape", "semantic"), path)
        return cls(
            _expect_str(m.get(layout_key), f"{path}.{layout_key}"),
            _expect_str(m.get("shape"), f"{path}.shape"),
            _expect_str(m.get("semantic"), f"{path}.semantic"),
        )

    def to_obj(self) -> dict:
        return {"layout": self.layout, "shape": self.shape, "semantic": self.semantic}


@dataclass(frozen=True)
class ImageDescription:
    grain_type: str  # singleElement | groupedElements
    primitives: tuple[str, ...]
    element_level: tuple[tuple[str, tuple[ElementEntry, ...]], ...]
    distribution_layout: Optional[str] = None

    @classmethod
    def from_obj(cls, obj: Any, path: str = "imageDescription") -> "ImageDescription":
        m = _expect_map(obj, path)
        if set(m) == {"imageDescription"}:
            m = _expect_map(m["imageDescription"], path)
        _check_keys(m, ("grainLevel", "elementLevel"), path)
        grain = _expect_map(m.get("grainLevel"), f"{path}.grainLevel")
        prim_keys = [k for k in ("geometricPrimitive", "shapeType", "shapeTypes") if k in grain]
        if len(prim_keys) != 1:
            raise ParseError(f"{path}.grainLevel", "exactly one of geometricPrimitive/shapeType/shapeTypes required")
        _check_keys(grain, ("type", prim_keys[0], "distributionLayout"), f"{path}.grainLevel")
        raw_prims = grain[prim_keys[0]]
        if isinstance(raw_prims, str):
            prims: tuple[str, ...] = (raw_prims,)
        else:
            prims = tuple(_expect_str(p, f"{path}.grainLevel.{prim_keys[0]}[{i}]")
                          for i, p in enumerate(_expect_list(raw_prims, f"{path}.grainLevel.{prim_keys[0]}")))
        level: list[tuple[str, tuple[ElementEntry, ...]]] = []
        for prim, entries in _expect_map(m.get("elementLevel"), f"{path}.elementLevel").items():
            if prim not in _GEOM_CLASSES:
                raise ParseError(f"{path}.elementLevel.{prim}", f"unknown primitive {prim!r}")
            if isinstance(entries, Mapping):
                entries = [entries]
            parsed = tuple(ElementEntry.from_obj(e, f"{path}.elementLevel.{prim}[{i}]")
                           for i, e in enumerate(_expect_list(entries, f"{path}.elementLevel.{prim}")))
            level.append((prim, parsed))
        dist = None
        if "distributionLayout" in grain:
            dist = _expect_str(grain["distributionLayout"], f"{path}.grainLevel.distributionLayout")
        return cls(
            _expect_str(grain.get("type"), f"{path}.grainLevel.type"),
            prims,
            tuple(level),
            distribution_layout=dist,
        )

    def to_obj(self) -> dict:
        grain: dict[str, Any] = {"type": self.grain_type}
        grain["geometricPrimitive"] = self.primitives[0] if len(self.primitives) == 1 else list(self.primitives)
        if self.distribution_layout is not None:
            grain["distributionLayout"] = self.distribution_layout
        return {
            "imageDescription": {
                "grainLevel": grain,
                "elementLevel": {
                    prim: [e.to_obj() for e in entries] for prim, entries in self.element_level
                },
            }
        }

    def entries(self) -> list[ElementEntry]:
        return [e for _, group in self.element_level for e in group]

    def _violations(self, path: str = "imageDescription",
                    element: Optional[SceneElement] = None) -> list[Violation]:
        out: list[Violation] = []
        if self.grain_type not in ("singleElement", "groupedElements"):
            out.append(Violation(f"{path}.grainLevel.type", f"invalid grain type {self.grain_type!r}"))
        if self.grain_type == "groupedElements" and self.distribution_layout is None:
            out.append(Violation(f"{path}.grainLevel.distributionLayout",
                                 "distributionLayout is required for groupedElements"))
        if self.grain_type == "singleElement" and self.distribution_layout is not None:
            out.append(Violation(f"{path}.grainLevel.distributionLayout",
                                 "distributionLayout only applies to groupedElements"))
        if element is not None and len(self.entries()) != len(element.members):
            out.append(Violation(f"{path}.elementLevel",
                                 f"entry count {len(self.entries())} does not match member count {len(element.members)}"))
        return out


# ---------------------------------------------------------------------------
# DesignPlan

@dataclass(frozen=True)
class SemanticAlignment:
    vis_semantic: str
    real_world_semantic: str
    description: str

    @classmethod
    def from_obj(cls, obj: Any, path: str) -> "SemanticAlignment":
        m = _expect_map(obj, path)
        # the reasoning prompt contract names this visSemantic; dataSemantic
        # appears in the wild and is accepted as an alias
        vis_key = "dataSemantic" if "dataSemantic" in m else "visSemantic"
        _check_keys(m, (vis_key, "realWorldSemantic", "description"), path)
        return cls(
            _expect_str(m.get(vis_key), f"{path}.{vis_key}"),
            _expect_str(m.get("realWorldSemantic"), f"{path}.realWorldSemantic"),
            _expect_str(m.get("description"), f"{path}.description"),
        )

    def to_obj(self) -> dict:
        return {"visSemantic": self.vis_semantic,
                "realWorldSemantic": self.real_world_semantic,
                "description": self.description}


@dataclass(frozen=True)
class ShapeAlignment:
    real_world_shape: str
    vis_shape: str
    description: str

    @classmethod
    def from_obj(cls, obj: Any, path: str) -> "ShapeAlignment":
        m = _expect_map(obj, path)
        _check_keys(m, ("realWorldShape", "visShape", "description"), path)
        return cls(_expect_str(m.get("realWorldShape"), f"{path}.realWorldShape"),
                   _expect_str(m.get("visShape"), f"{path}.visShape"),
                   _expect_str(m.get("description"), f"{path}.description"))

    def to_obj(self) -> dict:
        return {"realWorldShape": self.real_world_shape, "visShape": self.vis_shape,
                "description": self.description}


@dataclass(frozen=True)
class LayoutAlignment:
    real_world_layout: str
    vis_layout: str
    alignment_type: str
    description: str

    @classmethod
    def from_obj(cls, obj: Any, path: str) -> "LayoutAlignment":
        m = _expect_map(obj, path)
        _check_keys(m, ("realWorldLayout", "visLayout", "alignmentType", "description"), path)
        return cls(_expect_str(m.get("realWorldLayout"), f"{path}.realWorldLayout"),
                   _expect_str(m.get("visLayout"), f"{path}.visLayout"),
                   _expect_str(m.get("alignmentType"), f"{path}.alignmentType"),
                   _expect_str(m.get("description"), f"{path}.description"))

    def to_obj(self) -> dict:
        return {"realWorldLayout": self.real_world_layout, "visLayout": self.vis_layout,
                "alignmentType": self.alignment_type, "description": self.description}


@dataclass(frozen=True)
class VisualAlignment:
    shape_alignment: Optional[ShapeAlignment] = None
    layout_alignment: Optional[LayoutAlignment] = None

    @classmethod
    def from_obj(cls, obj: Any, path: str) -> "VisualAlignment":
        m = _expect_map(obj, path)
        _check_keys(m, ("shapeAlignment", "layoutAlignment"), path)
        return cls(
            ShapeAlignment.from_obj(m["shapeAlignment"], f"{path}.shapeAlignment")
            if "shapeAlignment" in m else None,
            LayoutAlignment.from_obj(m["layoutAlignment"], f"{path}.layoutAlignment")
            if "layoutAlignment" in m else None,
        )

    def to_obj(self) -> dict:
        out: dict[str, Any] = {}
        if self.shape_alignment is not None:
            out["shapeAlignment"] = self.shape_alignment.to_obj()
        if self.layout_alignment is not None:
            out["layoutAlignment"] = self.layout_alignment.to_obj()
        return out


@dataclass(frozen=True)
class MappingPlanEntry:
    mapping_type: str  # one-to-one | one-to-many | many-to-many
    real_world_elements: tuple[str, ...]
    vis_elements: tuple[str, ...]
    semantic_alignment: Optional[SemanticAlignment] = None
    visual_alignment: Optional[VisualAlignment] = None

    @classmethod
    def from_obj(cls, obj: Any, path: str) -> "MappingPlanEntry":
        m = _expect_map(obj, path)
        _check_keys(m, ("mappingType", "realWorldElements", "visElements",
                        "semanticAlignment", "visualAlignment"), path)
        return cls(
            _expect_str(m.get("mappingType"), f"{path}.mappingType"),
            tuple(_expect_str(e, f"{path}.realWorldElements[{i}]")
                  for i, e in enumerate(_expect_list(m.get("realWorldElements"), f"{path}.realWorldElements"))),
            tuple(_expect_str(e, f"{path}.visElements[{i}]")
                  for i, e in enumerate(_expect_list(m.get("visElements"), f"{path}.visElements"))),
            SemanticAlignment.from_obj(m["semanticAlignment"], f"{path}.semanticAlignment")
            if "semanticAlignment" in m else None,
            VisualAlignment.from_obj(m["visualAlignment"], f"{path}.visualAlignment")
            if "visualAlignment" in m else None,
        )

    def to_obj(self) -> dict:
        out: dict[str, Any] = {
            "mappingType": self.mapping_type,
            "realWorldElements": list(self.real_world_elements),
            "visElements": list(self.vis_elements),
        }
        if self.semantic_alignment is not None:
            out["semanticAlignment"] = self.semantic_alignment.to_obj()
        if self.visual_alignment is not None:
            out["visualAlignment"] = self.visual_alignment.to_obj()
        return out

    def _violations(self, path: str) -> list[Violation]:
        out: list[Violation] = []
        if self.mapping_type not in ("one-to-one", "one-to-many", "many-to-many"):
            out.append(Violation(f"{path}.mappingType", f"invalid mapping type {self.mapping_type!r}"))
        if self.semantic_alignment is None and self.visual_alignment is None:
            out.append(Violation(path, "at least one of semanticAlignment / visualAlignment required"))
        if self.mapping_type == "one-to-one" and (
                len(self.real_world_elements) != 1 or len(self.vis_elements) != 1):
            out.append(Violation(path, "one-to-one mapping requires exactly one element on each side"))
        la = self.visual_alignment.layout_alignment if self.visual_alignment else None
        if la is not None and la.alignment_type not in ALIGNMENT_TYPES:
            out.append(Violation(f"{path}.visualAlignment.layoutAlignment.alignmentType",
                                 f"invalid alignment type {la.alignment_type!r}"))
        return out


@dataclass(frozen=True)
class DesignPlan:
    overview: str
    mapping_plan: tuple[MappingPlanEntry, ...]

    @classmethod
    def from_obj(cls, obj: Any, path: str = "designPlan") -> "DesignPlan":
        m = _expect_map(obj, path)
        if set(m) == {"designPlan"}:
            m = _expect_map(m["designPlan"], path)
        _check_keys(m, ("overview", "mappingPlan"), path)
        return cls(
            _expect_str(m.get("overview"), f"{path}.overview"),
            tuple(MappingPlanEntry.from_obj(e, f"{path}.mappingPlan[{i}]")
                  for i, e in enumerate(_expect_list(m.get("mappingPlan"), f"{path}.mappingPlan"))),
        )

    def to_obj(self) -> dict:
        return {
            "designPlan": {
                "overview": self.overview,
                "mappingPlan": [e.to_obj() for e in self.mapping_plan],
            }
        }

    def _violations(self, path: str = "designPlan",
                    element_ids: Optional[set[str]] = None,
                    vis_classes: Optional[set[str]] = None) -> list[Violation]:
        out: list[Violation] = []
        if not self.mapping_plan:
            out.append(Violation(f"{path}.mappingPlan", "mappingPlan non-empty"))
        for i, entry in enumerate(self.mapping_plan):
            entry_path = f"{path}.mappingPlan[{i}]"
            out.extend(entry._violations(entry_path))
            if element_ids is not None:
                for j, eid in enumerate(entry.real_world_elements):
                    if eid.lstrip("#.") not in element_ids:
                        out.append(Violation(f"{entry_path}.realWorldElements[{j}]",
                                             f"unknown element {eid!r}"))
            if vis_classes is not None:
                for j, sel in enumerate(entry.vis_elements):
                    if sel.lstrip("#.") not in vis_classes:
                        out.append(Violation(f"{entry_path}.visElements[{j}]",
                                             f"unresolvable vis selector {sel!r}"))
        return out


# ---------------------------------------------------------------------------
# ToolCall

# tool name -> argument type spec ("str" | "num" | "cond" | "order" | "any")
TOOL_SIGNATURES: dict[str, tuple[str, ...]] = {
    "getSvgElement": ("str",),
    "editSvgSize": ("str", "num", "num"),
    "editSvgPosition": ("str", "num", "num"),
    "editSvgRotation": ("str", "num"),
    "alignToElement": ("str", "str", "str"),
    "filterData": ("cond",),
    "sortData": ("str", "order"),
    "categorizeData": ("str",),
}

_FILTER_OPS = ("=", "!=", "<", "<=", ">", ">=", "in", "not-in")


def _check_tool_arg(name: str, spec: str, value: Any, path: str) -> None:
    if spec == "str":
        _expect_str(value, path)
    elif spec == "num":
        _expect_num(value, path)
    elif spec == "cond":
        m = _expect_map(value, path)
        _check_keys(m, ("column", "op", "value"), path)
        _expect_str(m.get("column"), f"{path}.column")
        op = _expect_str(m.get("op"), f"{path}.op")
        if op not in _FILTER_OPS:
            raise ParseError(f"{path}.op", f"unknown operator {op!r}")
        if op in ("in", "not-in") and not isinstance(m.get("value"), (list, tuple)):
            raise ParseError(f"{path}.value", f"operator {op!r} requires a list value")
    elif spec == "order":
        if isinstance(value, str):
            if value not in ("ascending", "descending"):
                raise ParseError(path, f"unknown sort order {value!r}")
        elif not isinstance(value, (list, tuple)):
            raise ParseError(path, "sort order must be ascending/descending or a custom value list")


@dataclass(frozen=True)
class ToolCall:
    name: str
    args: tuple[Any, ...]
    anchor: str = "top-left"  # position interpretation: top-left | center

    @classmethod
    def from_obj(cls, obj: Any, path: str = "toolCall") -> "ToolCall":
        m = _expect_map(obj, path)
        _check_keys(m, ("name", "args", "anchor"), path)
        name = _expect_str(m.get("name"), f"{path}.name")
        if name not in TOOL_SIGNATURES:
            raise ParseError(f"{path}.name", f"unknown tool {name!r}")
        args = tuple(_expect_list(m.get("args"), f"{path}.args"))
        sig = TOOL_SIGNATURES[name]
        if len(args) != len(sig):
            raise ParseError(f"{path}.args", f"{name} expects {len(sig)} argument(s), got {len(args)}")
        for i, (spec, value) in enumerate(zip(sig, args)):
            _check_tool_arg(name, spec, value, f"{path}.args[{i}]")
        anchor = m.get("anchor", "top-left")
        if anchor not in ("top-left", "center"):
            raise ParseError(f"{path}.anchor", f"unknown anchor {anchor!r}")
        # lists arrive as plain lists; freeze them for hashability
        frozen = tuple(tuple(a) if isinstance(a, list) else a for a in args)
        return cls(name, frozen, anchor)

    def to_obj(self) -> dict:
        args = [dict(a) if isinstance(a, Mapping) else (list(a) if isinstance(a, tuple) else a)
                for a in self.args]
        out: dict[str, Any] = {"name": self.name, "args": args}
        if self.anchor != "top-left":
            out["anchor"] = self.anchor
        return out

    def as_call_string(self) -> str:
        """Render as an appendix-style function-call string for logs."""
        parts = []
        for a in self.args:
            if isinstance(a, str):
                parts.append(f"'{a}'")
            elif isinstance(a, Mapping):
                value = a["value"]
                rendered = json.dumps(list(value)) if isinstance(value, (list, tuple)) else json.dumps(value)
                parts.append(f"{a['column']} {a['op']} {rendered}")
            elif isinstance(a, (list, tuple)):
                parts.append(json.dumps(list(a)))
            else:
                parts.append(f"{_num_out(a)}")
        return f"{self.name}({', '.join(parts)})"

    def _violations(self, path: str = "toolCall") -> list[Violation]:
        # arity/type problems are parse errors; nothing further to check here
        return []


# ---------------------------------------------------------------------------
# EvaluationResult

_METHOD_WIRE = {"remove": "remove_anything.py", "fill": "fill_anything.py"}
_METHOD_FROM_WIRE = {v: k for k, v in _METHOD_WIRE.items()}
_METHOD_FROM_WIRE.update({"remove": "remove", "fill": "fill"})


@dataclass(frozen=True)
class InpaintOperation:
    need_inpaint: bool
    point_coords: tuple[tuple[float, float], ...]
    reusable_element: bool
    method: str  # remove | fill
    text_prompt: Optional[str] = None

    @classmethod
    def from_obj(cls, obj: Any, path: str) -> "InpaintOperation":
        m = _expect_map(obj, path)
        _check_keys(m, ("need_inpaint", "point_coords", "reusable_element", "method", "text_prompt"), path)
        method_wire = _expect_str(m.get("method"), f"{path}.method")
        if method_wire not in _METHOD_FROM_WIRE:
            raise ParseError(f"{path}.method", f"unknown method {method_wire!r}")
        return cls(
            _expect_bool(m.get("need_inpaint"), f"{path}.need_inpaint"),
            tuple(_xy_from_obj(p, f"{path}.point_coords[{i}]")
                  for i, p in enumerate(_expect_list(m.get("point_coords"), f"{path}.point_coords"))),
            _expect_bool(m.get("reusable_element"), f"{path}.reusable_element"),
            _METHOD_FROM_WIRE[method_wire],
            _expect_str(m["text_prompt"], f"{path}.text_prompt") if "text_prompt" in m else None,
        )

    def to_obj(self) -> dict:
        out: dict[str, Any] = {
            "need_inpaint": self.need_inpaint,
            "point_coords": [_xy_to_obj(p) for p in self.point_coords],
            "reusable_element": self.reusable_element,
            "method": _METHOD_WIRE[self.method],
        }
        if self.text_prompt is not None:
            out["text_prompt"] = self.text_prompt
        return out


@dataclass(frozen=True)
class EvaluationResult:
    accuracy_score: int
    accuracy_explanation: str
    conflict_detected: bool
    readability_score: int
    readability_explanation: str
    inpaint_operation: Optional[InpaintOperation] = None

    @classmethod
    def from_obj(cls, obj: Any, path: str = "evaluation") -> "EvaluationResult":
        m = _expect_map(obj, path)
        _check_keys(m, ("data_accuracy", "readability"), path)
        acc = _expect_map(m.get("data_accuracy"), f"{path}.data_accuracy")
        _check_keys(acc, ("score", "explanation", "conflict_detected", "inpaint_operation"),
                    f"{path}.data_accuracy")
        read = _expect_map(m.get("readability"), f"{path}.readability")
        _check_keys(read, ("score", "explanation"), f"{path}.readability")
        return cls(
            int(_expect_num(acc.get("score"), f"{path}.data_accuracy.score")),
            _expect_str(acc.get("explanation"), f"{path}.data_accuracy.explanation"),
            _expect_bool(acc.get("conflict_detected"), f"{path}.data_accuracy.conflict_detected"),
            int(_expect_num(read.get("score"), f"{path}.readability.score")),
            _expect_str(read.get("explanation"), f"{path}.readability.explanation"),
            InpaintOperation.from_obj(acc["inpaint_operation"], f"{path}.data_accuracy.inpaint_operation")
            if "inpaint_operation" in acc else None,
        )

    def to_obj(self) -> dict:
        acc: dict[str, Any] = {
            "score": self.accuracy_score,
            "explanation": self.accuracy_explanation,
            "conflict_detected": self.conflict_detected,
        }
        if self.inpaint_operation is not None:
            acc["inpaint_operation"] = self.inpaint_operation.to_obj()
        return {
            "data_accuracy": acc,
            "readability": {"score": self.readability_score,
                            "explanation": self.readability_explanation},
        }

    def _violations(self, path: str = "evaluation") -> list[Violation]:
        out: list[Violation] = []
        for name, score in (("data_accuracy", self.accuracy_score), ("readability", self.readability_score)):
            if not 1 <= score <= 5:
                out.append(Violation(f"{path}.{name}.score", "score must be an integer in [1, 5]"))
        if self.inpaint_operation is not None and not self.conflict_detected:
            out.append(Violation(f"{path}.data_accuracy.inpaint_operation",
                                 "inpaint operation present without a detected conflict"))
        op = self.inpaint_operation
        if op is not None and op.method == "fill" and not op.text_prompt:
            out.append(Violation(f"{path}.data_accuracy.inpaint_operation.text_prompt",
                                 "method fill requires a text prompt"))
        return out


# ---------------------------------------------------------------------------
# AnimationConfig

@dataclass(frozen=True)
class AnimationConfig:
    targets: str
    animation_type: str  # entrance | emphasis
    properties: tuple[tuple[str, tuple[Any, Any]], ...]
    duration: float
    delay: float
    direction: Optional[str] = None

    @classmethod
    def from_obj(cls, obj: Any, path: str = "animation") -> "AnimationConfig":
        m = _expect_map(obj, path)
        _check_keys(m, ("targets", "animation_type", "properties", "timing"), path)
        props: list[tuple[str, tuple[Any, Any]]] = []
        direction = None
        for k, v in _expect_map(m.get("properties"), f"{path}.properties").items():
            if k == "direction":
                direction = _expect_str(v, f"{path}.properties.direction")
                continue
            pair = _expect_list(v, f"{path}.properties.{k}")
            if len(pair) != 2:
                raise ParseError(f"{path}.properties.{k}", "property must have exactly two endpoints")
            props.append((k, (pair[0], pair[1])))
        timing = _expect_map(m.get("timing"), f"{path}.timing")
        _check_keys(timing, ("duration", "delay"), f"{path}.timing")
        return cls(
            _expect_str(m.get("targets"), f"{path}.targets"),
            _expect_str(m.get("animation_type"), f"{path}.animation_type"),
            tuple(props),
            _expect_num(timing.get("duration"), f"{path}.timing.duration"),
            _expect_num(timing.get("delay"), f"{path}.timing.delay"),
            direction=direction,
        )

    def to_obj(self) -> dict:
        props: dict[str, Any] = {k: list(v) for k, v in self.properties}
        if self.direction is not None:
            props["direction"] = self.direction
        return {
            "targets": self.targets,
            "animation_type": self.animation_type,
            "properties": props,
            "timing": {"duration": _num_out(self.duration), "delay": _num_out(self.delay)},
        }

    def _violations(self, path: str = "animation",
                    selectors: Optional[set[str]] = None) -> list[Violation]:
        out: list[Violation] = []
        if self.animation_type not in ("entrance", "emphasis"):
            out.append(Violation(f"{path}.animation_type",
                                 f"invalid animation type {self.animation_type!r}"))
        if self.direction is not None and self.direction not in ("top", "bottom", "left", "right"):
            out.append(Violation(f"{path}.properties.direction",
                                 f"invalid direction {self.direction!r}"))
        if self.duration < 0 or self.delay < 0:
            out.append(Violation(f"{path}.timing", "duration and delay must be >= 0"))
        if selectors is not None:
            base = self.targets.split("[")[0].lstrip(".#")
            if base not in selectors:
                out.append(Violation(f"{path}.targets",
                                     f"selector {self.targets!r} does not resolve"))
        return out


# ---------------------------------------------------------------------------
# TelemetryRecord

@dataclass(frozen=True)
class TelemetryRecord:
    stage: str
    elapsed_seconds: float
    input_tokens: int
    output_tokens: int

    @classmethod
    def from_obj(cls, obj: Any, path: str = "telemetry") -> "TelemetryRecord":
        m = _expect_map(obj, path)
        _check_keys(m, ("stage", "elapsed_seconds", "input_tokens", "output_tokens"), path)
        return cls(
            _expect_str(m.get("stage"), f"{path}.stage"),
            _expect_num(m.get("elapsed_seconds"), f"{path}.elapsed_seconds"),
            int(_expect_num(m.get("input_tokens"), f"{path}.input_tokens")),
            int(_expect_num(m.get("output_tokens"), f"{path}.output_tokens")),
        )

    def to_obj(self) -> dict:
        return {"stage": self.stage, "elapsed_seconds": _num_out(self.elapsed_seconds),
                "input_tokens": self.input_tokens, "output_tokens": self.output_tokens}

    def _violations(self, path: str = "telemetry") -> list[Violation]:
        out: list[Violation] = []
        if self.elapsed_seconds < 0:
            out.append(Violation(f"{path}.elapsed_seconds", "elapsed time must be >= 0"))
        if self.input_tokens < 0 or self.output_tokens < 0:
            out.append(Violation(f"{path}", "token counts must be >= 0"))
        return out


# ---------------------------------------------------------------------------
# module-level API

def dumps(document: Any) -> str:
    """Canonical serialization: 2-space indented JSON with a trailing newline."""
    obj = document.to_obj() if hasattr(document, "to_obj") else document
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def loads(cls: type, text: str, path: str = "") -> Any:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(path or cls.__name__, f"invalid JSON: {exc}") from exc
    return cls.from_obj(obj, path or cls.__name__[0].lower() + cls.__name__[1:])


def round_trip(document: Any) -> Any:
    """Serialize then deserialize; valid documents come back structurally equal."""
    return loads(type(document), dumps(document))


def validate(document: Any, **context: Any) -> ValidationReport:
    """Check every invariant of *document*; context keys enable cross checks.

    Supported context: ``table`` (DataTable), ``element`` (SceneElement),
    ``element_ids``, ``vis_classes``, ``selectors`` (sets of names).
    """
    checker = getattr(document, "_violations", None)
    if checker is None:
        return ValidationReport()
    kwargs: dict[str, Any] = {}
    import inspect

    accepted = inspect.signature(checker).parameters
    for key, value in context.items():
        if key in accepted:
            kwargs[key] = value
    return ValidationReport(tuple(checker(**kwargs)))
