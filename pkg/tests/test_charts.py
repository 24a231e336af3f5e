"""Chart proposal policy and deterministic SVG rendering."""

import math
import random
import re

import pytest

from chartscene.charts import (
    DEFAULT_CANVAS,
    HIGHLIGHT_COLOR,
    MARGINS,
    PALETTE,
    describe_chart,
    propose_charts,
    render_chart,
)
from chartscene.model import Column, DataTable, validate
from chartscene.narrative import extract_features_rules


def simple_table(values):
    rows = tuple((f"c{i}", v) for i, v in enumerate(values))
    return DataTable((Column("cat", "categorical"), Column("val", "numeric")), rows)


def test_christmas_proposals_pinned(christmas):
    table, narration, _ = christmas
    features = extract_features_rules(narration, table)
    ids = [p.chart_id for p in propose_charts(table, features)]
    assert ids == ["bar-0", "bar-1", "line-0", "line-1", "line-2",
                   "scatter-0", "scatter-1", "area-0"]


def test_proportion_words_unlock_pie(ferris):
    table, narration, _ = ferris
    features = extract_features_rules(narration, table)
    families = {p.family for p in propose_charts(table, features)}
    assert "pie" in families and "donut" in families


def test_no_proportion_no_pie(christmas):
    table, narration, _ = christmas
    features = extract_features_rules(narration, table)
    families = {p.family for p in propose_charts(table, features)}
    assert "pie" not in families and "donut" not in families


def test_radar_needs_enough_series(christmas):
    table, _, _ = christmas
    families = {p.family for p in propose_charts(table, None)}
    assert "radar" not in families


def test_render_byte_deterministic(christmas):
    table, _, _ = christmas
    for proposal in propose_charts(table, None):
        a = render_chart(proposal, table)
        b = render_chart(proposal, table)
        assert a.svg == b.svg


def test_bar_height_ratio_matches_values():
    rng = random.Random(11)
    for _ in range(30):
        values = [rng.uniform(1, 100) for _ in range(rng.randint(2, 8))]
        table = simple_table(values)
        proposal = next(p for p in propose_charts(table, None) if p.chart_id == "bar-0")
        doc = render_chart(proposal, table)
        heights = [m["extent"] for m in doc.mark_data]
        for (v1, h1), (v2, h2) in zip(zip(values, heights), zip(values[1:], heights[1:])):
            assert h1 / h2 == pytest.approx(v1 / v2, rel=0.01)


def test_pie_angles_sum():
    table = simple_table([10, 20, 30, 40])
    features = extract_features_rules("Show the share distribution of val.", table)
    pie = next(p for p in propose_charts(table, features) if p.family == "pie")
    doc = render_chart(pie, table)
    total = sum(m["angle"] for m in doc.mark_data)
    assert total == pytest.approx(360.0, abs=1e-6)


def test_mark_bboxes_inside_canvas(christmas):
    table, _, _ = christmas
    w, h = DEFAULT_CANVAS
    for proposal in propose_charts(table, None):
        doc = render_chart(proposal, table)
        for m in doc.mark_data:
            bb = doc.element_bounds[m["class"]]
            assert -1e-6 <= bb.xmin and bb.xmax <= w + 1e-6
            assert -1e-6 <= bb.ymin and bb.ymax <= h + 1e-6


def test_svg_carries_data_attributes(christmas):
    table, _, _ = christmas
    doc = render_chart(propose_charts(table, None)[0], table)
    assert 'data-value="46"' in doc.svg
    assert 'data-bbox="' in doc.svg
    assert doc.svg.count("<svg") == 1


def test_classes_include_axes(christmas):
    table, _, _ = christmas
    doc = render_chart(propose_charts(table, None)[0], table)
    classes = doc.classes()
    assert {"axis-x", "axis-y", "axis", "mark", "chart"} <= classes


def test_describe_chart_wire(christmas):
    table, narration, _ = christmas
    features = extract_features_rules(narration, table)
    doc = render_chart(propose_charts(table, features)[0], table)
    vis = describe_chart(doc, features)
    assert validate(vis).ok
    wire = vis.to_obj()["visDescription"]
    assert wire["chartType"] == "bar"
    assert wire["spatialSubstrate"]["axis"]["x"] == "Response"
    assert wire["graphicalElements"]["mark"]


def test_palette_pinned():
    assert len(PALETTE) == 8
    assert HIGHLIGHT_COLOR == PALETTE[2] == "#e15759"
    assert MARGINS == (80, 50, 30, 60)
