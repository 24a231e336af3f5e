"""Deterministic design checks, conflict detection, and inpaint planning."""

import numpy as np
import pytest

from chartscene.charts import propose_charts, render_chart
from chartscene.evaluator import (
    Conflict,
    attention_map,
    check_data_accuracy,
    check_readability,
    contrast_ratio,
    evaluate,
    inpaint_command,
    merge_llm_evaluation,
    plan_inpaint,
)
from chartscene.executor import DocumentState, align_to_element, execute_sequence
from chartscene.model import BoundingBox, EvaluationResult, dumps, validate
from chartscene.scene import SceneManifest, Segment, derive_geometry


def rect_poly(x0, y0, x1, y1):
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


def synthetic_scene():
    # two adjacent masks; the right one is the overflow trap
    manifest = SceneManifest("scene.png", (400, 400), (
        Segment("mask-a", rect_poly(40, 60, 160, 360), "oak tree"),
        Segment("mask-b", rect_poly(160, 60, 360, 360), "oak tree"),
    ))
    geom_a = derive_geometry(manifest.segments[0], manifest.image_size)
    geom_b = derive_geometry(manifest.segments[1], manifest.image_size)
    return manifest, geom_a, geom_b


def aligned_doc(christmas, bbox):
    table, _, _ = christmas
    doc = DocumentState(render_chart(propose_charts(table, None)[0], table))
    calls = align_to_element(doc, "mark-0", bbox, "center")
    result = execute_sequence(doc, calls, table)
    assert result.ok
    return result.doc, table


def test_overflow_produces_conflict_inside_region(christmas):
    manifest, geom_a, _ = synthetic_scene()
    # mark sticks 20 px past the right edge of its planned mask
    doc, table = aligned_doc(christmas, BoundingBox(40, 60, 180, 360))
    score, explanation, conflict, conflicts = check_data_accuracy(
        doc, table, bound_members=[("mark-0", geom_a)], manifest=manifest,
        planned_regions={"mark-0": BoundingBox(40, 60, 160, 360)})
    assert conflict
    overlap = [c for c in conflicts if c.kind == "overlap"]
    assert overlap
    px, py = overlap[0].point
    assert 160 <= px <= 180
    assert 60 <= py <= 360
    assert score < 5


def test_clean_alignment_scores_five(christmas):
    manifest, geom_a, _ = synthetic_scene()
    table, _, _ = christmas
    doc = DocumentState(render_chart(propose_charts(table, None)[0], table))
    # translate only: resizing the bar would break its value-extent ratio
    orig = doc.bbox_of("mark-0")
    target = BoundingBox(40, 60, 40 + orig.width, 60 + orig.height)
    result_exec = execute_sequence(doc, align_to_element(doc, "mark-0", target, "center"), table)
    assert result_exec.ok
    doc = result_exec.doc
    result, _ = evaluate(doc, table, bound_members=[("mark-0", geom_a)],
                         manifest=manifest,
                         planned_regions={"mark-0": target})
    assert result.accuracy_score == 5
    assert not result.conflict_detected
    assert result.inpaint_operation is None
    assert validate(result).ok


def test_ordering_conflict_detected(christmas):
    # bind the small-value mark to the taller scene member
    table, _, _ = christmas
    manifest, geom_a, geom_b = synthetic_scene()
    doc = DocumentState(render_chart(propose_charts(table, None)[0], table))
    tall = BoundingBox(40, 60, 160, 360)
    short = BoundingBox(200, 260, 320, 360)
    for cls, target in (("mark-0", short), ("mark-1", tall)):
        result = execute_sequence(doc, align_to_element(doc, cls, target, "center"), table)
        doc = result.doc
    class FakeMember:
        def __init__(self, bb):
            self.bounding_box = bb
    score, _, conflict, conflicts = check_data_accuracy(
        doc, table, bound_members=[("mark-0", FakeMember(short)),
                                   ("mark-1", FakeMember(tall))])
    assert conflict
    assert any(c.kind == "ordering" for c in conflicts)


def test_plan_inpaint_reuses_duplicate_segments():
    manifest, _, _ = synthetic_scene()
    conflicts = [Conflict("overlap", (170, 200), "mark overlaps oak tree")]
    op = plan_inpaint(conflicts, manifest, conflicting_label="oak tree")
    assert op is not None
    assert op.reusable_element
    assert op.method == "remove"
    assert op.point_coords == ((170, 200),)


def test_plan_inpaint_fills_unique_segment():
    manifest = SceneManifest("scene.png", (400, 400), (
        Segment("mask-a", rect_poly(40, 60, 160, 360), "oak tree"),
        Segment("sky", rect_poly(0, 0, 400, 50), "blue sky"),
    ))
    op = plan_inpaint([Conflict("overlap", (200, 25), "x")], manifest,
                      conflicting_label="blue sky")
    assert op is not None
    assert not op.reusable_element
    assert op.method == "fill"
    assert op.text_prompt and op.text_prompt.endswith(".")


def test_inpaint_command_rendering():
    from chartscene.model import InpaintOperation

    remove = InpaintOperation(True, ((320, 210), (450, 310)), True, "remove")
    cmd = inpaint_command(remove, input_img_path="scene.png")
    assert cmd.startswith("python remove_anything.py")
    assert "--point_coords 320 210 450 310" in cmd
    assert "--point_labels 1 1" in cmd
    assert "--coords_type key_in" in cmd
    assert "{sam_ckpt_path}" in cmd  # operator paths stay templated

    fill = InpaintOperation(True, ((1, 2),), False, "fill", text_prompt="the blue sky.")
    cmd = inpaint_command(fill)
    assert cmd.startswith("python fill_anything.py")
    assert '--text_prompt "the blue sky."' in cmd


def test_contrast_ratio_bounds():
    assert contrast_ratio((255, 255, 255), (0, 0, 0)) == pytest.approx(21.0)
    assert contrast_ratio((128, 128, 128), (128, 128, 128)) == pytest.approx(1.0)


def test_readability_flags_low_contrast(christmas):
    table, _, _ = christmas
    doc = DocumentState(render_chart(propose_charts(table, None)[0], table))
    good, _ = check_readability(doc, backdrop_color=(255, 255, 255))
    # backdrop close to the default palette color kills the contrast
    bad, explanation = check_readability(doc, backdrop_color=(78, 121, 167))
    assert bad < good
    assert "contrast" in explanation.lower()


def test_attention_map_returns_regions():
    rng = np.random.default_rng(0)
    image = rng.integers(0, 255, size=(120, 160), dtype=np.uint8).astype(float)
    image[40:80, 60:100] = 255.0  # bright salient block
    saliency, boxes = attention_map(image, top_k=3)
    assert saliency.shape == image.shape
    assert 1 <= len(boxes) <= 3
    for b in boxes:
        assert 0 <= b.xmin <= b.xmax <= 160
        assert 0 <= b.ymin <= b.ymax <= 120


def test_merge_llm_only_lowers_readability():
    base = EvaluationResult(5, "All good.", False, 5, "Clear.")
    lower = dumps(EvaluationResult(1, "Wrong.", True, 2, "Cluttered."))
    merged = merge_llm_evaluation(base, lower)
    assert merged.accuracy_score == 5          # deterministic accuracy wins
    assert not merged.conflict_detected
    assert merged.readability_score == 2
    assert "Model note:" in merged.readability_explanation
    # malformed commentary is ignored outright
    assert merge_llm_evaluation(base, "not json") == base
