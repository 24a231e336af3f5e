"""Animation templates, planning order, CSS compilation, and composition."""

import re

import pytest

from chartscene.animator import (
    GROUP_DELAY_MS,
    NEUTRAL_COLOR,
    CompositionError,
    animation_prompt,
    axes_fade_in,
    bar_grow_in,
    build_gallery,
    change_color,
    compile_css,
    compose,
    float_in,
    line_wipe_in,
    pie_wheel_in,
    plan_animations,
)
from chartscene.charts import HIGHLIGHT_COLOR, propose_charts, render_chart
from chartscene.executor import DocumentState
from chartscene.model import AnimationConfig, NarrativeAction, validate
from chartscene.narrative import extract_features_rules


def doc_for(table, chart_id):
    proposal = next(p for p in propose_charts(table, None) if p.chart_id == chart_id)
    return DocumentState(render_chart(proposal, table))


def test_template_timings_pinned():
    assert axes_fade_in().duration == 800
    assert bar_grow_in().duration == 800
    assert line_wipe_in(123.4).duration == 1500
    assert pie_wheel_in().duration == 800
    assert float_in(".note").duration == 800
    assert float_in(".note").delay == 200
    assert change_color(".mark").duration == 500


def test_template_properties_pinned():
    props = dict(axes_fade_in().properties)
    assert props["opacity"] == (0, 1)
    assert props["strokeWidth"] == (0, 2)
    grow = bar_grow_in()
    assert dict(grow.properties)["height"] == ("0%", "100%")
    assert grow.direction == "bottom"
    wipe = dict(line_wipe_in(250.0).properties)
    assert wipe["strokeDashoffset"] == (250.0, 0)
    wheel = dict(pie_wheel_in().properties)
    assert wheel["rotate"] == ("-90deg", "0deg")
    color = dict(change_color(".mark").properties)
    assert color["fill"] == (NEUTRAL_COLOR, HIGHLIGHT_COLOR)


def test_plan_orders_axes_marks_annotations(christmas):
    table, narration, _ = christmas
    features = extract_features_rules(narration, table)
    doc = doc_for(table, "bar-0")
    configs, warnings = plan_animations(features.actions, doc)
    assert not warnings
    assert [c.animation_type for c in configs[:2]] == ["entrance", "entrance"]
    assert configs[0].targets == ".axis"
    assert configs[1].targets == ".mark"
    # groups enter one stagger step apart
    assert configs[1].delay - configs[0].delay == pytest.approx(GROUP_DELAY_MS + 100)
    emphasis = [c for c in configs if c.animation_type == "emphasis"]
    assert len(emphasis) == 1
    assert emphasis[0].targets == ".mark[data-value=46]"
    # emphasis begins only after every entrance finished
    assert emphasis[0].delay >= max(c.delay + c.duration
                                    for c in configs if c.animation_type == "entrance")
    for c in configs:
        assert validate(c, selectors=doc.chart.classes()).ok


def test_plan_pie_has_no_axes(ferris):
    table, narration, _ = ferris
    features = extract_features_rules(narration, table)
    proposal = next(p for p in propose_charts(table, features)
                    if p.chart_id == "donut-0")
    doc = DocumentState(render_chart(proposal, table))
    actions = (NarrativeAction("enter", "show the chart"),)
    configs, _ = plan_animations(actions, doc)
    assert all(c.targets != ".axis" for c in configs)
    assert dict(configs[0].properties)["scale"] == (0, 1)


def test_unmatched_emphasis_warns(christmas):
    table, _, _ = christmas
    doc = doc_for(table, "bar-0")
    actions = (NarrativeAction("emphasize", "highlight the 99% slice"),)
    configs, warnings = plan_animations(actions, doc)
    assert configs == []
    assert len(warnings) == 1
    assert "99" in warnings[0]


def test_compile_css_exact_durations():
    cfg = AnimationConfig(
        targets=".mark", animation_type="entrance",
        properties=(("opacity", (0, 1)),), duration=800, delay=250)
    css = compile_css([cfg])
    assert "800ms" in css
    assert "250ms" in css
    assert ".mark { animation:" in css
    assert "from { opacity: 0; }" in css
    # non-integral timings keep their fraction
    frac = compile_css([AnimationConfig(".mark", "entrance",
                                        (("opacity", (0, 1)),), 333.5, 0)])
    assert "333.5ms" in frac


def test_compile_css_transforms_and_dash():
    css = compile_css([bar_grow_in(), line_wipe_in(412.0)])
    assert "scaleY(0.0)" in css or "scaleY(0)" in css
    assert "translateY(50px)" in css
    assert "stroke-dasharray: 412.0;" in css
    assert "stroke-dashoffset: 0" in css


def test_compose_builds_overlay(christmas):
    table, narration, manifest = christmas
    features = extract_features_rules(narration, table)
    doc = doc_for(table, "bar-0")
    configs, _ = plan_animations(features.actions, doc)
    comp = compose(manifest.image_ref, manifest.image_size, doc, configs)
    assert comp.svg.startswith("<svg")
    assert f'href="{manifest.image_ref}"' in comp.svg
    assert 'width="1200"' in comp.svg
    assert "mark-0" in comp.svg
    assert comp.preview_html.count("<style>") == 1
    # every planned duration appears verbatim in the compiled css
    for cfg in configs:
        assert re.search(rf"\b{int(cfg.duration)}(?:\.0)?ms", comp.preview_html)
    obj = comp.to_obj()
    assert obj["chartId"] == "bar-0"
    assert len(obj["animations"]) == len(configs)


def test_compose_rejects_unknown_selector(christmas):
    table, _, manifest = christmas
    doc = doc_for(table, "bar-0")
    bogus = AnimationConfig(".nonexistent", "entrance",
                            (("opacity", (0, 1)),), 800, 0)
    with pytest.raises(CompositionError):
        compose(manifest.image_ref, manifest.image_size, doc, [bogus])


def test_build_gallery_cards():
    html = build_gallery([
        {"title": "bar-0 x group-0", "href": "a.html", "score": 0.412, "conflict": False},
        {"title": "line-0 x group-0", "href": "b.html", "score": 0.401, "conflict": True},
    ])
    assert html.count('class="card"') == 2
    assert "score 0.412" in html
    assert html.count("badge") >= 2  # style rule plus the one conflict badge
    assert html.index("a.html") < html.index("b.html")


def test_animation_prompt_embeds_actions():
    actions = (NarrativeAction("enter", "bars rise"),)
    prompt = animation_prompt(actions, "<svg></svg>")
    assert "enter: bars rise" in prompt
    assert "Line-wipe-in" in prompt
    assert "<svg></svg>" in prompt
