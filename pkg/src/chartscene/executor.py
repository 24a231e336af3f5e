"""Tool-call execution: data-level table transforms and view-level
affine edits over rendered chart documents.

Per-element transforms compose as scale, then rotation about the element
center, then translation. Size targets apply to the post-rotation
axis-aligned bounding box.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Optional, Sequence

from .charts import ChartDocument
from .model import (
    ALIGNMENT_TYPES,
    BoundingBox,
    DataTable,
    SceneElement,
    ToolCall,
)


class ToolError(ValueError):
    pass


class SelectorError(ToolError):
    pass


# ---------------------------------------------------------------------------
# transforms

@dataclass(frozen=True)
class TransformState:
    sx: float = 1.0
    sy: float = 1.0
    theta: float = 0.0  # degrees, about the element's base-bbox center
    tx: float = 0.0
    ty: float = 0.0

    @property
    def is_identity(self) -> bool:
        return self == TransformState()

    def apply(self, center: tuple[float, float], point: tuple[float, float]) -> tuple[float, float]:
        cx, cy = center
        x = (point[0] - cx) * self.sx
        y = (point[1] - cy) * self.sy
        rad = math.radians(self.theta)
        c, s = math.cos(rad), math.sin(rad)
        xr = x * c - y * s
        yr = x * s + y * c
        return (xr + cx + self.tx, yr + cy + self.ty)


def transformed_bbox(base: BoundingBox, tf: TransformState) -> BoundingBox:
    center = base.center
    corners = [
        tf.apply(center, (base.xmin, base.ymin)),
        tf.apply(center, (base.xmax, base.ymin)),
        tf.apply(center, (base.xmax, base.ymax)),
        tf.apply(center, (base.xmin, base.ymax)),
    ]
    xs = [p[0] for p in corners]
    ys = [p[1] for p in corners]
    return BoundingBox(min(xs), min(ys), max(xs), max(ys))


# ---------------------------------------------------------------------------
# document state

_GROUP_RE = re.compile(r'<g ([^>]*?)>')


@dataclass
class DocumentState:
    """A chart document plus accumulated per-element transforms."""

    chart: ChartDocument
    transforms: dict[str, TransformState] = field(default_factory=dict)

    def clone(self) -> "DocumentState":
        return DocumentState(self.chart, dict(self.transforms))

    def transform_of(self, cls: str) -> TransformState:
        return self.transforms.get(cls, TransformState())

    def bbox_of(self, cls: str) -> BoundingBox:
        base = self.chart.element_bounds.get(cls)
        if base is None:
            raise SelectorError(f"no element with class {cls!r}")
        return transformed_bbox(base, self.transform_of(cls))

    def serialize(self) -> str:
        """Inject transform attributes into the SVG; stable and re-parseable."""
        svg = self.chart.svg

        def rewrite(match: re.Match) -> str:
            attrs = match.group(1)
            cls_match = re.search(r'class="([^"]*)"', attrs)
            id_match = re.search(r'id="([^"]*)"', attrs)
            names = set(cls_match.group(1).split()) if cls_match else set()
            if id_match:
                names.add(id_match.group(1))
            target = next((n for n in names if n in self.transforms
                           and not self.transforms[n].is_identity), None)
            attrs = re.sub(r'\s*transform="[^"]*"', "", attrs)
            attrs = re.sub(r'\s*data-tf="[^"]*"', "", attrs)
            if target is None:
                return f"<g {attrs}>"
            tf = self.transforms[target]
            base = self.chart.element_bounds[target]
            cx, cy = base.center
            transform = (f"translate({tf.tx + cx:.4f},{tf.ty + cy:.4f}) "
                         f"rotate({tf.theta:.4f}) scale({tf.sx:.6f},{tf.sy:.6f}) "
                         f"translate({-cx:.4f},{-cy:.4f})")
            data_tf = f"{tf.sx!r} {tf.sy!r} {tf.theta!r} {tf.tx!r} {tf.ty!r}"
            return f'<g {attrs} transform="{transform}" data-tf="{data_tf}">'

        return _GROUP_RE.sub(rewrite, svg)

    @classmethod
    def reparse(cls, svg_text: str, chart: ChartDocument) -> "DocumentState":
        """Rebuild state from a serialized document of the same chart."""
        transforms: dict[str, TransformState] = {}
        for match in _GROUP_RE.finditer(svg_text):
            attrs = match.group(0)
            tf_match = re.search(r'data-tf="([^"]*)"', attrs)
            if not tf_match:
                continue
            names: set[str] = set()
            cls_match = re.search(r'class="([^"]*)"', attrs)
            if cls_match:
                names |= set(cls_match.group(1).split())
            id_match = re.search(r'id="([^"]*)"', attrs)
            if id_match:
                names.add(id_match.group(1))
            target = next((n for n in names if n in chart.element_bounds), None)
            if target is None:
                continue
            sx, sy, theta, tx, ty = (float(v) for v in tf_match.group(1).split())
            transforms[target] = TransformState(sx, sy, theta, tx, ty)
        return cls(chart, transforms)


def get_svg_element(doc: DocumentState, class_name: str) -> str:
    """Resolve *class_name* to a unique element handle (its class name)."""
    count = 0
    for match in _GROUP_RE.finditer(doc.chart.svg):
        attrs = match.group(1)
        names: set[str] = set()
        cls_match = re.search(r'class="([^"]*)"', attrs)
        if cls_match:
            names |= set(cls_match.group(1).split())
        id_match = re.search(r'id="([^"]*)"', attrs)
        if id_match:
            names.add(id_match.group(1))
        if class_name in names:
            count += 1
    if count == 0:
        raise SelectorError(f"no element matches {class_name!r}")
    if count > 1:
        raise SelectorError(f"{count} elements match {class_name!r}; selector must be unique")
    if class_name not in doc.chart.element_bounds:
        raise SelectorError(f"element {class_name!r} has no recorded geometry")
    return class_name


# ---------------------------------------------------------------------------
# view-level tools

def edit_svg_size(doc: DocumentState, cls: str, target_height: float, target_width: float) -> None:
    if target_height <= 0 or target_width <= 0:
        raise ToolError(f"size targets must be positive, got {target_width}x{target_height}")
    base = doc.chart.element_bounds.get(cls)
    if base is None:
        raise SelectorError(f"no element with class {cls!r}")
    tf = doc.transform_of(cls)
    w0, h0 = base.width, base.height
    if w0 <= 0 or h0 <= 0:
        raise ToolError(f"element {cls!r} has a degenerate base bbox")
    rad = math.radians(tf.theta)
    c, s = abs(math.cos(rad)), abs(math.sin(rad))
    det = (w0 * c) * (h0 * c) - (h0 * s) * (w0 * s)
    if abs(det) < 1e-9 * w0 * h0:
        # near 45 degrees the system degenerates; fall back to uniform scale
        denom = w0 * c + h0 * s
        sx = sy = target_width / denom
    else:
        sx = (target_width * h0 * c - target_height * h0 * s) / det
        sy = (target_height * w0 * c - target_width * w0 * s) / det
    if sx <= 0 or sy <= 0:
        raise ToolError("requested size is unreachable at the current rotation")
    # keep the bbox center fixed while resizing
    old = transformed_bbox(base, tf)
    doc.transforms[cls] = replace(tf, sx=sx, sy=sy)
    new = transformed_bbox(base, doc.transforms[cls])
    doc.transforms[cls] = replace(
        doc.transforms[cls],
        tx=doc.transforms[cls].tx + old.center[0] - new.center[0],
        ty=doc.transforms[cls].ty + old.center[1] - new.center[1],
    )


def edit_svg_position(doc: DocumentState, cls: str, x: float, y: float,
                      anchor: str = "top-left") -> None:
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ToolError("position targets must be finite")
    bbox = doc.bbox_of(cls)
    if anchor == "center":
        ax, ay = bbox.center
    else:
        ax, ay = bbox.xmin, bbox.ymin
    tf = doc.transform_of(cls)
    doc.transforms[cls] = replace(tf, tx=tf.tx + x - ax, ty=tf.ty + y - ay)


def edit_svg_rotation(doc: DocumentState, cls: str, angle: float) -> None:
    if not math.isfinite(angle):
        raise ToolError("rotation angle must be finite")
    base = doc.chart.element_bounds.get(cls)
    if base is None:
        raise SelectorError(f"no element with class {cls!r}")
    tf = doc.transform_of(cls)
    doc.transforms[cls] = replace(tf, theta=angle)


def align_to_element(doc: DocumentState, source: str, target: Any,
                     alignment_type: str) -> list[ToolCall]:
    """Compute the position/size calls that align *source* onto *target*.

    ``target`` is a SceneElement or BoundingBox. Center alignment also
    resizes the source to the target bbox; corner alignment only moves it.
    """
    if alignment_type not in ALIGNMENT_TYPES:
        raise ToolError(f"unknown alignment type {alignment_type!r}")
    if isinstance(target, SceneElement):
        tb = target.bounding_box()
    elif isinstance(target, BoundingBox):
        tb = target
    else:
        raise ToolError(f"cannot align to {type(target).__name__}")
    get_svg_element(doc, source)
    calls: list[ToolCall] = []
    if alignment_type == "center":
        cx, cy = tb.center
        calls.append(ToolCall("editSvgPosition", (source, cx, cy), anchor="center"))
        calls.append(ToolCall("editSvgSize", (source, tb.height, tb.width)))
    else:
        bbox = doc.bbox_of(source)
        ax, ay = tb.anchor(alignment_type)
        # translate so the same-named source anchor lands on the target anchor
        if alignment_type == "top-left":
            tl = (ax, ay)
        elif alignment_type == "top-right":
            tl = (ax - bbox.width, ay)
        elif alignment_type == "bottom-left":
            tl = (ax, ay - bbox.height)
        else:  # bottom-right
            tl = (ax - bbox.width, ay - bbox.height)
        calls.append(ToolCall("editSvgPosition", (source, tl[0], tl[1])))
    return calls


# ---------------------------------------------------------------------------
# data-level tools

_OPS = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _coerce(column_kind: str, value: Any) -> Any:
    if column_kind == "numeric" and not isinstance(value, bool):
        try:
            return float(value)
        except (TypeError, ValueError):
            return value
    return value


def filter_data(table: DataTable, condition: Mapping[str, Any]) -> DataTable:
    column = condition["column"]
    op = condition["op"]
    value = condition["value"]
    try:
        idx = table.column_index(column)
    except KeyError:
        raise ToolError(f"unknown column {column!r}")
    kind = table.columns[idx].kind
    rows = []
    for row in table.rows:
        cell = _coerce(kind, row[idx])
        if op == "in":
            keep = cell in [_coerce(kind, v) for v in value]
        elif op == "not-in":
            keep = cell not in [_coerce(kind, v) for v in value]
        elif op in _OPS:
            keep = _OPS[op](cell, _coerce(kind, value))
        else:
            raise ToolError(f"unknown operator {op!r}")
        if keep:
            rows.append(row)
    return DataTable(table.columns, tuple(rows))


def sort_data(table: DataTable, sort_key: str, order: Any = "ascending") -> DataTable:
    try:
        idx = table.column_index(sort_key)
    except KeyError:
        raise ToolError(f"unknown column {sort_key!r}")
    kind = table.columns[idx].kind
    if isinstance(order, (list, tuple)):
        listed = {v: i for i, v in enumerate(order)}
        n = len(listed)
        keyed = [(listed.get(row[idx], n + i), row) for i, row in enumerate(table.rows)]
        keyed.sort(key=lambda kv: kv[0])
        return DataTable(table.columns, tuple(row for _, row in keyed))
    if order not in ("ascending", "descending"):
        raise ToolError(f"unknown sort order {order!r}")
    rows = sorted(table.rows, key=lambda r: _coerce(kind, r[idx]),
                  reverse=(order == "descending"))
    return DataTable(table.columns, tuple(rows))


@dataclass(frozen=True)
class GroupedTable:
    columns: tuple
    groups: tuple[tuple[Any, tuple[tuple, ...]], ...]

    def to_obj(self) -> dict:
        return {
            "columns": [{"name": c.name, "kind": c.kind} for c in self.columns],
            "groups": [{"label": label, "rows": [list(r) for r in rows]}
                       for label, rows in self.groups],
        }


def categorize_data(table: DataTable, category_key: str) -> GroupedTable:
    try:
        idx = table.column_index(category_key)
    except KeyError:
        raise ToolError(f"unknown column {category_key!r}")
    order: list[Any] = []
    buckets: dict[Any, list[tuple]] = {}
    for row in table.rows:
        label = row[idx]
        if label not in buckets:
            buckets[label] = []
            order.append(label)
        buckets[label].append(row)
    return GroupedTable(table.columns, tuple((label, tuple(buckets[label])) for label in order))


# ---------------------------------------------------------------------------
# sequences

@dataclass
class ExecutionResult:
    doc: DocumentState
    table: DataTable
    log: list[dict]
    failed_index: Optional[int] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.failed_index is None

    def log_lines(self) -> list[str]:
        return [json.dumps(entry) for entry in self.log]


def execute_sequence(doc: DocumentState, calls: Sequence[ToolCall],
                     table: DataTable) -> ExecutionResult:
    """Apply *calls* in order; on failure, earlier effects stay applied."""
    state = doc.clone()
    current = table
    log: list[dict] = []
    for i, call in enumerate(calls):
        entry: dict[str, Any] = {"index": i, "call": call.as_call_string()}
        try:
            if call.name == "filterData":
                entry["pre"] = {"rows": len(current.rows)}
                current = filter_data(current, call.args[0])
                entry["post"] = {"rows": len(current.rows)}
            elif call.name == "sortData":
                entry["pre"] = {"rows": len(current.rows)}
                current = sort_data(current, call.args[0], call.args[1])
                entry["post"] = {"rows": len(current.rows)}
            elif call.name == "categorizeData":
                entry["pre"] = {"rows": len(current.rows)}
                grouped = categorize_data(current, call.args[0])
                entry["post"] = {"groups": len(grouped.groups)}
            elif call.name == "getSvgElement":
                get_svg_element(state, call.args[0])
                entry["post"] = {"resolved": call.args[0]}
            elif call.name == "editSvgSize":
                entry["pre"] = _bbox_obj(state.bbox_of(call.args[0]))
                edit_svg_size(state, call.args[0], call.args[1], call.args[2])
                entry["post"] = _bbox_obj(state.bbox_of(call.args[0]))
            elif call.name == "editSvgPosition":
                entry["pre"] = _bbox_obj(state.bbox_of(call.args[0]))
                edit_svg_position(state, call.args[0], call.args[1], call.args[2],
                                  anchor=call.anchor)
                entry["post"] = _bbox_obj(state.bbox_of(call.args[0]))
            elif call.name == "editSvgRotation":
                entry["pre"] = _bbox_obj(state.bbox_of(call.args[0]))
                edit_svg_rotation(state, call.args[0], call.args[1])
                entry["post"] = _bbox_obj(state.bbox_of(call.args[0]))
            elif call.name == "alignToElement":
                raise ToolError("alignToElement must be expanded before execution")
            else:
                raise ToolError(f"unknown tool {call.name!r}")
        except ToolError as exc:
            entry["error"] = str(exc)
            log.append(entry)
            return ExecutionResult(state, current, log, failed_index=i, error=str(exc))
        log.append(entry)
    return ExecutionResult(state, current, log)


def _bbox_obj(b: BoundingBox) -> dict:
    return {"xmin": round(b.xmin, 3), "ymin": round(b.ymin, 3),
            "xmax": round(b.xmax, 3), "ymax": round(b.ymax, 3)}
