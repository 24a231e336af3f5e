"""Design mapping scores, gating, and adjustment suggestions."""

import pytest

from chartscene.charts import describe_chart, propose_charts, render_chart
from chartscene.mapping import (
    W_LAYOUT,
    W_SEMANTIC,
    W_SHAPE,
    W_SPATIAL,
    AdjustmentError,
    MappingError,
    generate_plans,
    mapping_prompt,
    score_pair,
    suggest_adjustments,
)
from chartscene.model import dumps, validate
from chartscene.narrative import extract_features_rules
from chartscene.scene import filter_and_group


def pipeline_parts(inputs):
    table, narration, manifest = inputs
    features = extract_features_rules(narration, table)
    elements = filter_and_group(manifest, features)
    docs = [render_chart(p, table) for p in propose_charts(table, features)]
    descs = [describe_chart(d, features) for d in docs]
    return table, features, elements, docs, descs


def test_weights_pinned():
    assert (W_SHAPE, W_SEMANTIC, W_LAYOUT, W_SPATIAL) == (0.35, 0.30, 0.25, 0.10)
    assert W_SHAPE + W_SEMANTIC + W_LAYOUT + W_SPATIAL == pytest.approx(1.0)


def test_christmas_top_plan_binds_group(christmas):
    table, features, elements, docs, descs = pipeline_parts(christmas)
    plans = generate_plans(elements, docs, descs, features=features, top_k=5)
    assert plans
    top = plans[0]
    assert top.element_id == "group-0"
    assert top.chart_id == "bar-0"
    entry = top.plan.mapping_plan[0]
    assert entry.mapping_type == "many-to-many"
    assert entry.vis_elements == (".mark-0", ".mark-1")
    assert validate(top.plan).ok


def test_ranking_deterministic_ties(christmas):
    table, features, elements, docs, descs = pipeline_parts(christmas)
    a = generate_plans(elements, docs, descs, features=features, top_k=5)
    b = generate_plans(elements, docs, descs, features=features, top_k=5)
    assert [(p.chart_id, p.element_id) for p in a] == [(p.chart_id, p.element_id) for p in b]


def test_ranking_scale_invariant(christmas):
    # uniformly scaling and shifting every scene polygon keeps the order
    from chartscene.scene import SceneManifest, Segment

    table, narration, manifest = christmas
    features = extract_features_rules(narration, table)
    moved = SceneManifest(
        manifest.image_ref, (manifest.image_size[0] * 3, manifest.image_size[1] * 3),
        tuple(Segment(s.segment_id,
                      tuple((x * 2 + 100, y * 2 + 50) for x, y in s.polygon),
                      s.semantic_label)
              for s in manifest.segments))
    docs = [render_chart(p, table) for p in propose_charts(table, features)]
    descs = [describe_chart(d, features) for d in docs]
    base = generate_plans(filter_and_group(manifest, features), docs, descs,
                          features=features, top_k=5)
    scaled = generate_plans(filter_and_group(moved, features), docs, descs,
                            features=features, top_k=5)
    assert [(p.chart_id, round(p.total, 9)) for p in base] == \
        [(p.chart_id, round(p.total, 9)) for p in scaled]


def test_gate_excludes_small_charts(christmas):
    # a grouped element with more members than marks cannot be bound
    table, features, elements, docs, _ = pipeline_parts(christmas)
    element = elements[0]
    tiny = table.__class__(table.columns, table.rows[:1])
    doc = render_chart(propose_charts(tiny, None)[0], tiny)
    assert score_pair(element, doc, None, features,
                      scene_frame=element.bounding_box()) is None


def test_ferris_donut_beats_bar(ferris):
    table, features, elements, docs, descs = pipeline_parts(ferris)
    plans = generate_plans(elements, docs, descs, features=features, top_k=len(docs))
    totals = {p.chart_id: p.total for p in plans}
    assert totals["donut-0"] > totals["bar-0"]


def test_suggest_adjustments_filters_unreferenced(christmas):
    table, features, elements, docs, descs = pipeline_parts(christmas)
    plans = generate_plans(elements, docs, descs, features=features, top_k=5)
    calls = suggest_adjustments(plans[0], table, features,
                                element=elements[0], chart_doc=docs[0])
    assert [c.name for c in calls] == ["filterData"]
    cond = calls[0].args[0]
    assert cond["op"] == "not-in"
    assert sorted(cond["value"]) == ["Don't know", "No tree"]


def test_adjustment_refuses_to_drop_referenced(christmas):
    table, narration, manifest = christmas
    # narrative that references every row leaves nothing safe to drop
    narration = ("Artificial tree at 46%, Real tree at 26%, No tree at 22% "
                 "and Don't know at 6% all matter.")
    features = extract_features_rules(narration, table)
    elements = filter_and_group(manifest, features)
    docs = [render_chart(p, table) for p in propose_charts(table, features)]
    descs = [describe_chart(d, features) for d in docs]
    plans = generate_plans(elements, docs, descs, features=features, top_k=5)
    with pytest.raises(AdjustmentError):
        suggest_adjustments(plans[0], table, features,
                            element=elements[0], chart_doc=docs[0])


def test_mapping_prompt_embeds_specs(christmas):
    table, features, elements, docs, descs = pipeline_parts(christmas)
    from chartscene.scene import describe_element

    image_desc = describe_element(elements[0], features, (1200, 800))
    prompt = mapping_prompt(image_desc, descs[0], docs[0].svg)
    assert "semantic binding" in prompt.lower()
    assert "imageDescription" in prompt
    assert "visDescription" in prompt


class StubLLM:
    def __init__(self, reply):
        self.reply = reply

    def complete(self, stage, prompt):
        return self.reply


def test_llm_mode_accepts_none(christmas):
    table, features, elements, docs, descs = pipeline_parts(christmas)
    plans = generate_plans(elements, docs[:1], descs[:1], features=features,
                           mode="llm", top_k=5, llm=StubLLM("None"))
    assert plans == []


def test_llm_mode_rejects_garbage(christmas):
    table, features, elements, docs, descs = pipeline_parts(christmas)
    with pytest.raises(MappingError):
        generate_plans(elements, docs[:1], descs[:1], features=features,
                       mode="llm", top_k=5, llm=StubLLM("{\"nope\": 1}"))


def test_llm_mode_uses_model_plan(christmas, examples_dir):
    import json

    table, features, elements, docs, descs = pipeline_parts(christmas)
    plan_text = (examples_dir / "design_plan.json").read_text()
    plans = generate_plans(elements, docs[:1], descs[:1], features=features,
                           mode="llm", top_k=5, llm=StubLLM(plan_text))
    assert len(plans) == 1
    assert plans[0].plan.mapping_plan[0].mapping_type == "one-to-one"
