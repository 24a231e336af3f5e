"""Chart proposal, deterministic SVG rendering, and chart self-description.

Rendered documents carry stable class names (``mark-<i>``, ``axis-x``,
``axis-y``, ``label-<i>``) plus ``data-category`` / ``data-value``
attributes on every mark, so downstream tooling can address and verify
them without re-measuring the SVG.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .model import (
    BoundingBox,
    ChartProposal,
    DataTable,
    Mark,
    NarrativeFeatures,
    VisDescription,
)

DEFAULT_CANVAS = (800, 600)
PALETTE = ("#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a245",
           "#edc948", "#b07aa1", "#ff9da7")
HIGHLIGHT_COLOR = PALETTE[2]

MARGINS = (80, 50, 30, 60)  # left, top, right, bottom

_PROPORTION_WORDS = ("share", "proportion", "distribution", "breakdown",
                     "composition", "percentage", "makeup")


class ProposalError(ValueError):
    pass


class RenderError(ValueError):
    pass


def _fmt(x: float) -> str:
    s = f"{x:.2f}"
    return s.rstrip("0").rstrip(".") if "." in s else s


@dataclass
class ChartDocument:
    """A rendered chart plus the geometry ledger used by later stages."""

    proposal: ChartProposal
    svg: str
    class_index: dict[str, str]            # class name -> role
    plot_area: tuple[float, float, float, float]
    element_bounds: dict[str, BoundingBox]  # class name -> untransformed bbox
    mark_data: list[dict]                   # per mark: class, category, value, ...
    canvas: tuple[int, int] = DEFAULT_CANVAS

    def classes(self) -> set[str]:
        out = set(self.class_index) | {self.proposal.chart_id, "chart", "mark"}
        if any(role == "axis" for role in self.class_index.values()):
            out.add("axis")
        return out


def _narrative_text(features: Optional[NarrativeFeatures]) -> str:
    if features is None:
        return ""
    # transformation strings quote column headers verbatim, which would leak
    # header vocabulary into the framing scan; keep them out
    pieces = list(features.data_facts) + list(features.entity_objects) \
        + [a.description for a in features.actions]
    return " ".join(pieces).lower()


def propose_charts(table: DataTable, features: Optional[NarrativeFeatures] = None) -> list[ChartProposal]:
    """Enumerate every applicable chart template for *table*.

    Deterministic order: bar, line, scatter, area, pie, donut, radar, with
    variants in template order inside each family.
    """
    numeric = [c.name for c in table.columns if c.kind == "numeric"]
    category = [c.name for c in table.columns if c.kind in ("categorical", "temporal")]
    if not numeric:
        raise ProposalError("no numeric column to plot")
    if not category:
        raise ProposalError("no categorical or temporal column to plot")

    cat = category[0]
    value = numeric[0]
    n_categories = len({r[table.column_index(cat)] for r in table.rows})
    narrative = _narrative_text(features)
    values_positive = all(
        float(v) > 0 for name in numeric for v in table.values(name)
        if isinstance(v, (int, float)) and not isinstance(v, bool)
    )

    proposals: list[ChartProposal] = []

    def add(family: str, index: int, variant: str, value_keys: list[str], title: str) -> None:
        proposals.append(ChartProposal(f"{family}-{index}", variant, (cat,), tuple(value_keys), title))

    add("bar", 0, "vertical", [value], f"{value} by {cat}")
    add("bar", 1, "horizontal", [value], f"{value} by {cat}")
    if len(numeric) >= 2:
        add("bar", 2, "stacked", numeric, f"Composition of {', '.join(numeric)} by {cat}")
    add("line", 0, "basic", [value], f"{value} across {cat}")
    add("line", 1, "with-dot", [value], f"{value} across {cat}")
    add("line", 2, "with-area", [value], f"{value} across {cat}")
    add("scatter", 0, "basic", [value], f"{value} by {cat}")
    add("scatter", 1, "with-size", [value], f"{value} by {cat}")
    add("area", 0, "basic", [value], f"{value} over {cat}")
    # part-to-whole templates only when the narrative frames the data that way
    part_to_whole = values_positive and n_categories >= 2 and any(
        w in narrative for w in _PROPORTION_WORDS)
    if part_to_whole:
        add("pie", 0, "basic", [value], f"{value} split by {cat}")
        add("donut", 0, "basic", [value], f"{value} split by {cat}")
    # radar needs enough axes to be readable: several series, or several
    # categories combined with at least two series
    if len(numeric) >= 3 or (n_categories >= 3 and len(numeric) >= 2):
        add("radar", 0, "basic", numeric, f"{', '.join(numeric)} profile by {cat}")
    return proposals


# ---------------------------------------------------------------------------
# rendering

def _check_values(table: DataTable, proposal: ChartProposal) -> None:
    for key in proposal.value_keys:
        idx = table.column_index(key)
        for i, row in enumerate(table.rows):
            try:
                v = float(row[idx])
            except (TypeError, ValueError):
                raise RenderError(f"cell ({i}, {key}) is not numeric: {row[idx]!r}")
            if not math.isfinite(v):
                raise RenderError(f"cell ({i}, {key}) is not finite: {row[idx]!r}")


class _Svg:
    def __init__(self, width: int, height: int) -> None:
        self.width = width
        self.height = height
        self.parts: list[str] = []
        self.bounds: dict[str, BoundingBox] = {}
        self.index: dict[str, str] = {}

    def open_group(self, cls: str, role: str, bbox: Optional[BoundingBox] = None,
                   data: Optional[dict] = None, extra_class: str = "") -> None:
        classes = f"{extra_class} {cls}".strip()
        attrs = [f'class="{classes}"']
        if data:
            for k, v in data.items():
                # integral floats print as ints so selectors like
                # [data-value=46] match regardless of numeric type
                if isinstance(v, float) and v.is_integer():
                    v = int(v)
                attrs.append(f'data-{k}="{v}"')
        if bbox is not None:
            attrs.append(f'data-bbox="{_fmt(bbox.xmin)} {_fmt(bbox.ymin)} '
                         f'{_fmt(bbox.width)} {_fmt(bbox.height)}"')
            self.bounds[cls] = bbox
        self.index[cls] = role
        self.parts.append(f"<g {' '.join(attrs)}>")

    def close_group(self) -> None:
        self.parts.append("</g>")

    def rect(self, x: float, y: float, w: float, h: float, fill: str) -> None:
        self.parts.append(f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" '
                          f'height="{_fmt(h)}" fill="{fill}"/>')

    def circle(self, cx: float, cy: float, r: float, fill: str) -> None:
        self.parts.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" fill="{fill}"/>')

    def line(self, x1: float, y1: float, x2: float, y2: float, stroke: str, width: float = 1.5) -> None:
        self.parts.append(f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" '
                          f'y2="{_fmt(y2)}" stroke="{stroke}" stroke-width="{_fmt(width)}"/>')

    def path(self, d: str, fill: str = "none", stroke: str = "none", width: float = 2.0) -> None:
        self.parts.append(f'<path d="{d}" fill="{fill}" stroke="{stroke}" '
                          f'stroke-width="{_fmt(width)}"/>')

    def text(self, x: float, y: float, content: str, size: int = 12, anchor: str = "middle") -> None:
        self.parts.append(f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}" '
                          f'text-anchor="{anchor}" font-family="sans-serif">{_escape(content)}</text>')


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def render_chart(proposal: ChartProposal, table: DataTable,
                 canvas: tuple[int, int] = DEFAULT_CANVAS) -> ChartDocument:
    """Render *proposal* over *table* into a deterministic SVG document."""
    _check_values(table, proposal)
    width, height = canvas
    left, top, right, bottom = MARGINS
    plot = (left, top, width - left - right, height - top - bottom)
    svg = _Svg(width, height)
    family = proposal.family

    cat_key = proposal.category_key[0]
    categories = [str(v) for v in table.values(cat_key)]
    series = list(proposal.value_keys)
    values = {s: table.numeric_values(s) for s in series}
    mark_data: list[dict] = []

    renderer = {
        "bar": _render_bar,
        "line": _render_line,
        "scatter": _render_scatter,
        "area": _render_area,
        "pie": _render_pie,
        "donut": _render_pie,
        "radar": _render_radar,
    }[family]
    body, marks = renderer(svg, proposal, plot, categories, series, values)
    mark_data.extend(marks)

    # axis and labels are shared plumbing for cartesian charts
    if family in ("bar", "line", "scatter", "area"):
        _render_axes(svg, plot, categories, proposal)

    label_cls = "label-title"
    svg.index[label_cls] = "label"
    title_y = top / 2
    svg.text(width / 2, title_y, proposal.title, size=16)

    content = "".join(svg.parts)
    doc_svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
        f'<g id="{proposal.chart_id}" class="chart">{content}</g></svg>'
    )
    chart_bbox = _content_bbox(svg.bounds, plot)
    svg.bounds[proposal.chart_id] = chart_bbox
    svg.index[proposal.chart_id] = "chart"
    return ChartDocument(
        proposal=proposal,
        svg=doc_svg,
        class_index=dict(svg.index),
        plot_area=plot,
        element_bounds=dict(svg.bounds),
        mark_data=mark_data,
        canvas=canvas,
    )


def _content_bbox(bounds: dict[str, BoundingBox],
                  plot: tuple[float, float, float, float]) -> BoundingBox:
    if not bounds:
        return BoundingBox(plot[0], plot[1], plot[0] + plot[2], plot[1] + plot[3])
    return BoundingBox(
        min(b.xmin for b in bounds.values()),
        min(b.ymin for b in bounds.values()),
        max(b.xmax for b in bounds.values()),
        max(b.ymax for b in bounds.values()),
    )


def _render_axes(svg: _Svg, plot, categories, proposal) -> None:
    x, y, w, h = plot
    svg.open_group("axis-x", "axis", BoundingBox(x, y + h, x + w, y + h), extra_class="axis")
    svg.line(x, y + h, x + w, y + h, "#333", 1.5)
    svg.close_group()
    svg.open_group("axis-y", "axis", BoundingBox(x, y, x, y + h), extra_class="axis")
    svg.line(x, y, x, y + h, "#333", 1.5)
    svg.close_group()
    if proposal.type == "horizontal":
        band = h / max(1, len(categories))
        for i, c in enumerate(categories):
            cls = f"label-{i}"
            svg.index[cls] = "label"
            svg.text(x - 8, y + band * (i + 0.5) + 4, c, anchor="end")
    else:
        band = w / max(1, len(categories))
        for i, c in enumerate(categories):
            cls = f"label-{i}"
            svg.index[cls] = "label"
            svg.text(x + band * (i + 0.5), y + h + 18, c)


def _value_scale(values_by_series: dict[str, list[float]], stacked: bool) -> float:
    if stacked:
        n = len(next(iter(values_by_series.values()), []))
        totals = [sum(values_by_series[s][i] for s in values_by_series) for i in range(n)]
        vmax = max(totals, default=0.0)
    else:
        vmax = max((v for vs in values_by_series.values() for v in vs), default=0.0)
    return vmax if vmax > 0 else 1.0


def _render_bar(svg, proposal, plot, categories, series, values):
    x, y, w, h = plot
    marks = []
    stacked = proposal.type == "stacked"
    vmax = _value_scale(values, stacked)
    mark_i = 0
    if proposal.type == "horizontal":
        band = h / len(categories)
        bar_h = band * 0.7
        for i, c in enumerate(categories):
            v = values[series[0]][i]
            bw = v / vmax * w
            by = y + band * i + (band - bar_h) / 2
            cls = f"mark-{mark_i}"
            bbox = BoundingBox(x, by, x + bw, by + bar_h)
            svg.open_group(cls, "mark", bbox, {"category": _escape(c), "value": values[series[0]][i]},
                           extra_class="mark bar")
            svg.rect(x, by, bw, bar_h, PALETTE[0])
            svg.close_group()
            marks.append({"class": cls, "category": c, "value": v, "extent": bw, "axis": "x"})
            mark_i += 1
        return None, marks
    band = w / len(categories)
    bar_w = band * 0.7
    for i, c in enumerate(categories):
        bx = x + band * i + (band - bar_w) / 2
        base = y + h
        if stacked:
            for si, s in enumerate(series):
                v = values[s][i]
                bh = v / vmax * h
                cls = f"mark-{mark_i}"
                bbox = BoundingBox(bx, base - bh, bx + bar_w, base)
                svg.open_group(cls, "mark", bbox,
                               {"category": _escape(c), "series": _escape(s), "value": v},
                               extra_class="mark bar")
                svg.rect(bx, base - bh, bar_w, bh, PALETTE[si % len(PALETTE)])
                svg.close_group()
                marks.append({"class": cls, "category": c, "series": s, "value": v,
                              "extent": bh, "axis": "y"})
                base -= bh
                mark_i += 1
        else:
            v = values[series[0]][i]
            bh = v / vmax * h
            cls = f"mark-{mark_i}"
            bbox = BoundingBox(bx, y + h - bh, bx + bar_w, y + h)
            svg.open_group(cls, "mark", bbox, {"category": _escape(c), "value": v},
                           extra_class="mark bar")
            svg.rect(bx, y + h - bh, bar_w, bh, PALETTE[0])
            svg.close_group()
            marks.append({"class": cls, "category": c, "value": v, "extent": bh, "axis": "y"})
            mark_i += 1
    return None, marks


def _points_for_line(plot, categories, vals, vmax):
    x, y, w, h = plot
    band = w / max(1, len(categories))
    return [(x + band * (i + 0.5), y + h - v / vmax * h) for i, v in enumerate(vals)]


def _render_line(svg, proposal, plot, categories, series, values):
    vals = values[series[0]]
    vmax = _value_scale(values, False)
    pts = _points_for_line(plot, categories, vals, vmax)
    marks = []
    if proposal.type == "with-area":
        x, y, w, h = plot
        d = "M" + " L".join(f"{_fmt(px)},{_fmt(py)}" for px, py in pts)
        area_d = d + f" L{_fmt(pts[-1][0])},{_fmt(y + h)} L{_fmt(pts[0][0])},{_fmt(y + h)} Z"
        svg.open_group("area-fill", "annotation",
                       BoundingBox(pts[0][0], min(p[1] for p in pts), pts[-1][0], y + h))
        svg.path(area_d, fill=PALETTE[0], stroke="none")
        svg.close_group()
    d = "M" + " L".join(f"{_fmt(px)},{_fmt(py)}" for px, py in pts)
    svg.open_group("line-path", "annotation",
                   BoundingBox(min(p[0] for p in pts), min(p[1] for p in pts),
                               max(p[0] for p in pts), max(p[1] for p in pts)))
    svg.path(d, stroke=PALETTE[0])
    svg.close_group()
    r = 4.0 if proposal.type == "with-dot" else 2.5
    for i, ((px, py), c, v) in enumerate(zip(pts, categories, vals)):
        cls = f"mark-{i}"
        svg.open_group(cls, "mark", BoundingBox(px - r, py - r, px + r, py + r),
                       {"category": _escape(c), "value": v}, extra_class="mark dot")
        svg.circle(px, py, r, PALETTE[0])
        svg.close_group()
        marks.append({"class": cls, "category": c, "value": v, "position": (px, py)})
    return None, marks


def _render_area(svg, proposal, plot, categories, series, values):
    return _render_line(svg, ChartProposal(proposal.chart_id, "with-area",
                                           proposal.category_key, proposal.value_keys,
                                           proposal.title), plot, categories, series, values)


def _render_scatter(svg, proposal, plot, categories, series, values):
    vals = values[series[0]]
    vmax = _value_scale(values, False)
    pts = _points_for_line(plot, categories, vals, vmax)
    marks = []
    for i, ((px, py), c, v) in enumerate(zip(pts, categories, vals)):
        if proposal.type == "with-size":
            r = 3.0 + 9.0 * (v / vmax)
        else:
            r = 4.0
        cls = f"mark-{i}"
        svg.open_group(cls, "mark", BoundingBox(px - r, py - r, px + r, py + r),
                       {"category": _escape(c), "value": v}, extra_class="mark point")
        svg.circle(px, py, r, PALETTE[i % len(PALETTE)])
        svg.close_group()
        marks.append({"class": cls, "category": c, "value": v, "position": (px, py), "radius": r})
    return None, marks


def _render_pie(svg, proposal, plot, categories, series, values):
    x, y, w, h = plot
    cx, cy = x + w / 2, y + h / 2
    radius = min(w, h) / 2 * 0.9
    inner = radius * 0.55 if proposal.family == "donut" else 0.0
    vals = values[series[0]]
    total = sum(vals)
    if total <= 0:
        raise RenderError("pie chart requires a positive value total")
    marks = []
    start = -90.0
    for i, (c, v) in enumerate(zip(categories, vals)):
        angle = v / total * 360.0
        end = start + angle
        cls = f"mark-{i}"
        bbox = _sector_bbox(cx, cy, radius, start, end)
        svg.open_group(cls, "mark", bbox,
                       {"category": _escape(c), "value": v, "angle": repr(angle)},
                       extra_class="mark sector")
        svg.path(_sector_path(cx, cy, radius, inner, start, end),
                 fill=PALETTE[i % len(PALETTE)])
        svg.close_group()
        marks.append({"class": cls, "category": c, "value": v, "angle": angle})
        start = end
    return None, marks


def _sector_point(cx, cy, r, deg):
    rad = math.radians(deg)
    return (cx + r * math.cos(rad), cy + r * math.sin(rad))


def _sector_bbox(cx, cy, r, start, end):
    pts = [_sector_point(cx, cy, r, start), _sector_point(cx, cy, r, end), (cx, cy)]
    for axis_deg in (-90, 0, 90, 180, 270):
        if start <= axis_deg <= end:
            pts.append(_sector_point(cx, cy, r, axis_deg))
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    return BoundingBox(min(xs), min(ys), max(xs), max(ys))


def _sector_path(cx, cy, r, inner, start, end):
    large = 1 if end - start > 180 else 0
    x1, y1 = _sector_point(cx, cy, r, start)
    x2, y2 = _sector_point(cx, cy, r, end)
    if inner <= 0:
        return (f"M{_fmt(cx)},{_fmt(cy)} L{_fmt(x1)},{_fmt(y1)} "
                f"A{_fmt(r)},{_fmt(r)} 0 {large} 1 {_fmt(x2)},{_fmt(y2)} Z")
    x3, y3 = _sector_point(cx, cy, inner, end)
    x4, y4 = _sector_point(cx, cy, inner, start)
    return (f"M{_fmt(x1)},{_fmt(y1)} A{_fmt(r)},{_fmt(r)} 0 {large} 1 {_fmt(x2)},{_fmt(y2)} "
            f"L{_fmt(x3)},{_fmt(y3)} A{_fmt(inner)},{_fmt(inner)} 0 {large} 0 "
            f"{_fmt(x4)},{_fmt(y4)} Z")


def _render_radar(svg, proposal, plot, categories, series, values):
    x, y, w, h = plot
    cx, cy = x + w / 2, y + h / 2
    radius = min(w, h) / 2 * 0.85
    vmax = _value_scale(values, False)
    n_axes = len(series)
    marks = []
    for i, s in enumerate(series):
        deg = -90.0 + 360.0 * i / n_axes
        ex, ey = _sector_point(cx, cy, radius, deg)
        svg.open_group(f"spoke-{i}", "annotation", BoundingBox(min(cx, ex), min(cy, ey),
                                                               max(cx, ex), max(cy, ey)))
        svg.line(cx, cy, ex, ey, "#999", 1.0)
        svg.close_group()
    mark_i = 0
    for row_i, c in enumerate(categories):
        pts = []
        for i, s in enumerate(series):
            deg = -90.0 + 360.0 * i / n_axes
            v = values[s][row_i]
            pts.append(_sector_point(cx, cy, radius * v / vmax, deg))
        d = "M" + " L".join(f"{_fmt(px)},{_fmt(py)}" for px, py in pts) + " Z"
        cls = f"mark-{mark_i}"
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        svg.open_group(cls, "mark", BoundingBox(min(xs), min(ys), max(xs), max(ys)),
                       {"category": _escape(c), "value": sum(values[s][row_i] for s in series)},
                       extra_class="mark polygon")
        svg.path(d, fill="none", stroke=PALETTE[row_i % len(PALETTE)])
        svg.close_group()
        marks.append({"class": cls, "category": c,
                      "value": sum(values[s][row_i] for s in series)})
        mark_i += 1
    return None, marks


# ---------------------------------------------------------------------------
# chart description

_FAMILY_MARKS: dict[str, list[tuple[str, str]]] = {
    "bar": [("bar", "dataMarker")],
    "scatter": [("point", "dataMarker")],
    "pie": [("arc", "dataMarker")],
    "donut": [("arc", "dataMarker")],
    "radar": [("polygon", "dataMarker")],
}


def _line_marks(variant: str) -> list[tuple[str, str]]:
    if variant == "with-area":
        return [("line", "dataMarker"), ("area", "annotation")]
    if variant == "with-dot":
        return [("line", "dataMarker"), ("point", "annotation")]
    return [("line", "dataMarker")]


def describe_chart(doc: ChartDocument,
                   features: Optional[NarrativeFeatures] = None) -> VisDescription:
    """Derive the declarative perception spec for a rendered chart."""
    proposal = doc.proposal
    family = proposal.family
    value_key = proposal.value_keys[0]
    cat_key = proposal.category_key[0]
    if family == "line":
        mark_specs = _line_marks(proposal.type)
    elif family == "area":
        mark_specs = [("area", "dataMarker")]
    else:
        mark_specs = _FAMILY_MARKS[family]

    prop_templates = {
        "bar": {"height": f"The height of each bar encodes {value_key} for its {cat_key} category; "
                          "taller bars mean larger values.",
                "color": "Bars share a categorical palette distinguishing categories or series."},
        "line": {"slope": f"The slope between consecutive points encodes the change of {value_key} "
                          f"across {cat_key}.",
                 "position": f"Vertical position of the line encodes the magnitude of {value_key}."},
        "point": {"position": f"Each point's vertical position encodes {value_key} for its "
                              f"{cat_key} category.",
                  "size": "Point size optionally re-encodes the value for emphasis."},
        "arc": {"angle": f"Each sector's angle encodes the share of {value_key} contributed by its "
                         f"{cat_key} category.",
                "color": "Sector colors distinguish categories."},
        "area": {"area": f"The filled region's height encodes {value_key}; the area under the "
                         "curve emphasizes cumulative magnitude."},
        "polygon": {"radius": f"Distance from the center along each spoke encodes one numeric "
                              "field; the closed polygon profiles a category."},
    }
    marks = []
    for mtype, role in mark_specs:
        props = prop_templates.get(mtype, {"position": f"Position encodes {value_key}."})
        marks.append(Mark(mtype, role, tuple(props.items())))

    if features is not None and features.data_facts:
        insight = " ".join(features.data_facts)
    else:
        insight = (f"The chart shows how {value_key} varies across {cat_key} categories.")
    return VisDescription(
        chart_type=family,
        axis_x=cat_key,
        axis_y=value_key,
        chart_variants=proposal.type,
        marks=tuple(marks),
        visual_insight=insight,
    )
