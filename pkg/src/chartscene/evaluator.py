"""Design evaluation: data accuracy, conflicts, inpaint planning,
readability heuristics, and a saliency map.

All checks are deterministic analyses over an immutable composition state;
an optional LLM pass can add commentary but never overrides the
deterministic accuracy findings.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from .executor import DocumentState
from .model import (
    BoundingBox,
    DataTable,
    EvaluationResult,
    InpaintOperation,
    SceneElement,
)
from .scene import SceneManifest, tokens

EXTENT_RATIO_TOL = 0.01   # bars / areas: extent ratio vs value ratio
POSITION_TOL_PX = 2.0     # points / lines
OVERLAP_FRACTION = 0.05   # mark-scene overlap outside the planned region
LABEL_OVERLAP_FRACTION = 0.20
MIN_CONTRAST_RATIO = 3.0
OUTSIDE_MARK_FRACTION = 0.30


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class Conflict:
    kind: str                      # ordering | overlap
    point: tuple[float, float]
    detail: str
    region: Optional[BoundingBox] = None


# ---------------------------------------------------------------------------
# data accuracy

def _mark_values(doc: DocumentState) -> list[dict]:
    marks = doc.chart.mark_data
    if not marks:
        raise EvaluationError("composition carries no mark data attributes")
    return marks


def check_data_accuracy(doc: DocumentState, table: DataTable,
                        bound_members: Optional[Sequence[tuple[str, Any]]] = None,
                        manifest: Optional[SceneManifest] = None,
                        planned_regions: Optional[dict[str, BoundingBox]] = None,
                        ) -> tuple[int, str, bool, list[Conflict]]:
    """Verify encodings against the table and detect data-scene conflicts.

    ``bound_members`` pairs mark class names with the scene geometry bound to
    them (data order). ``planned_regions`` maps mark class to the region the
    plan reserves for it. Returns (score, explanation, conflict flag, conflicts).
    """
    marks = _mark_values(doc)
    violation_classes: list[str] = []
    conflicts: list[Conflict] = []

    extents = [(m, doc.bbox_of(m["class"])) for m in marks if "extent" in m]
    if len(extents) >= 2:
        base_m, base_b = extents[0]
        base_extent = base_b.height if base_m.get("axis") == "y" else base_b.width
        for m, b in extents[1:]:
            extent = b.height if m.get("axis") == "y" else b.width
            if base_m["value"] == 0 or m["value"] == 0:
                continue
            value_ratio = m["value"] / base_m["value"]
            extent_ratio = extent / base_extent if base_extent else 0.0
            if abs(extent_ratio - value_ratio) > EXTENT_RATIO_TOL * max(1.0, abs(value_ratio)):
                violation_classes.append(
                    f"extent ratio of {m['class']} ({extent_ratio:.4f}) deviates from "
                    f"its value ratio ({value_ratio:.4f})")
                break

    positioned = [m for m in marks if "position" in m]
    for m in positioned:
        tf = doc.transform_of(m["class"])
        base = doc.chart.element_bounds[m["class"]]
        expected = tf.apply(base.center, m["position"])
        got = doc.bbox_of(m["class"]).center
        if math.hypot(expected[0] - got[0], expected[1] - got[1]) > POSITION_TOL_PX:
            violation_classes.append(f"position of {m['class']} drifted beyond 2 px")
            break

    if bound_members:
        orderings = _ordering_conflicts(doc, marks, bound_members)
        if orderings:
            violation_classes.append("bound element height ordering contradicts datum ordering")
            conflicts.extend(orderings)
        overlaps = _overlap_conflicts(doc, bound_members, manifest, planned_regions)
        if overlaps:
            violation_classes.append("mark overlaps scene content outside its planned region")
            conflicts.extend(overlaps)

    score = max(1, 5 - len(violation_classes))
    if violation_classes:
        explanation = "Violations: " + "; ".join(violation_classes) + "."
    else:
        explanation = "All encodings match the data table within tolerance."
    return score, explanation, bool(conflicts), conflicts


def _member_bbox(member: Any) -> BoundingBox:
    bb = getattr(member, "bounding_box", None)
    if isinstance(bb, BoundingBox):
        return bb
    if hasattr(member, "bounding_box") and member.bounding_box is not None:
        return member.bounding_box
    raise EvaluationError("bound member has no bounding box")


def _ordering_conflicts(doc: DocumentState, marks: list[dict],
                        bound_members: Sequence[tuple[str, Any]]) -> list[Conflict]:
    by_class = {m["class"]: m for m in marks}
    pairs = []
    for cls, member in bound_members:
        m = by_class.get(cls)
        if m is None or "value" not in m:
            continue
        pairs.append((m["value"], _member_bbox(member)))
    out: list[Conflict] = []
    for i in range(len(pairs)):
        for j in range(i + 1, len(pairs)):
            (vi, bi), (vj, bj) = pairs[i], pairs[j]
            if vi == vj:
                continue
            if (vi > vj) != (bi.height > bj.height) and bi.height != bj.height:
                out.append(Conflict(
                    "ordering",
                    bi.center if vi > vj else bj.center,
                    f"value ordering ({vi} vs {vj}) contradicts bound heights "
                    f"({bi.height:.1f} vs {bj.height:.1f})",
                ))
    return out


def _rasterize_polygon(poly: Sequence[tuple[float, float]],
                       shape: tuple[int, int]) -> np.ndarray:
    """Boolean mask of a polygon interior via even-odd scanline fill."""
    h, w = shape
    mask = np.zeros((h, w), dtype=bool)
    ys = np.arange(h) + 0.5
    n = len(poly)
    for row, y in enumerate(ys):
        xs = []
        for i in range(n):
            x1, y1 = poly[i]
            x2, y2 = poly[(i + 1) % n]
            if (y1 <= y < y2) or (y2 <= y < y1):
                xs.append(x1 + (y - y1) / (y2 - y1) * (x2 - x1))
        xs.sort()
        for k in range(0, len(xs) - 1, 2):
            a = max(0, int(math.ceil(xs[k] - 0.5)))
            b = min(w, int(math.floor(xs[k + 1] - 0.5)) + 1)
            if b > a:
                mask[row, a:b] = True
    return mask


def _overlap_conflicts(doc: DocumentState, bound_members: Sequence[tuple[str, Any]],
                       manifest: Optional[SceneManifest],
                       planned_regions: Optional[dict[str, BoundingBox]]) -> list[Conflict]:
    if manifest is None:
        return []
    w, h = manifest.image_size
    if w <= 0 or h <= 0:
        return []
    scene = np.zeros((h, w), dtype=bool)
    for seg in manifest.segments:
        scene |= _rasterize_polygon(seg.polygon, (h, w))
    out: list[Conflict] = []
    for cls, member in bound_members:
        mark_bbox = doc.bbox_of(cls)
        region = (planned_regions or {}).get(cls) or _member_bbox(member)
        mark = np.zeros((h, w), dtype=bool)
        x0 = max(0, int(mark_bbox.xmin))
        x1 = min(w, int(math.ceil(mark_bbox.xmax)))
        y0 = max(0, int(mark_bbox.ymin))
        y1 = min(h, int(math.ceil(mark_bbox.ymax)))
        if x1 <= x0 or y1 <= y0:
            continue
        mark[y0:y1, x0:x1] = True
        inside = np.zeros((h, w), dtype=bool)
        rx0 = max(0, int(region.xmin))
        rx1 = min(w, int(math.ceil(region.xmax)))
        ry0 = max(0, int(region.ymin))
        ry1 = min(h, int(math.ceil(region.ymax)))
        if rx1 > rx0 and ry1 > ry0:
            inside[ry0:ry1, rx0:rx1] = True
        overflow = mark & scene & ~inside
        mark_area = mark.sum()
        if mark_area and overflow.sum() > OVERLAP_FRACTION * mark_area:
            yy, xx = np.nonzero(overflow)
            point = (float(xx.mean()), float(yy.mean()))
            out.append(Conflict(
                "overlap", point,
                f"{cls} overlaps scene content outside its planned region "
                f"({overflow.sum()} px, {overflow.sum() / mark_area:.1%} of the mark)",
                region=BoundingBox(float(xx.min()), float(yy.min()),
                                   float(xx.max()) + 1, float(yy.max()) + 1),
            ))
    return out


# ---------------------------------------------------------------------------
# inpaint planning

REMOVE_COMMAND_TEMPLATE = """python remove_anything.py \\
    --input_img {input_img_path} \\
    --coords_type {coords_type} \\
    --point_coords {point_coords} \\
    --point_labels {point_labels} \\
    --dilate_kernel_size {dilate_kernel_size} \\
    --output_dir {output_dir} \\
    --sam_model_type {sam_model_type} \\
    --sam_ckpt {sam_ckpt_path} \\
    --lama_config {lama_config_path} \\
    --lama_ckpt {lama_ckpt_path}"""

FILL_COMMAND_TEMPLATE = """python fill_anything.py \\
    --input_img {input_img_path} \\
    --coords_type {coords_type} \\
    --point_coords {point_coords} \\
    --point_labels {point_labels} \\
    --text_prompt "{text_prompt}" \\
    --dilate_kernel_size {dilate_kernel_size} \\
    --output_dir {output_dir} \\
    --sam_model_type {sam_model_type} \\
    --sam_ckpt {sam_ckpt_path}"""


def plan_inpaint(conflicts: Sequence[Conflict],
                 manifest: Optional[SceneManifest] = None,
                 conflicting_label: Optional[str] = None) -> Optional[InpaintOperation]:
    """Decide between reuse-and-remove and semantic fill for the conflicts."""
    if not conflicts:
        return None
    points = tuple((round(c.point[0], 1), round(c.point[1], 1)) for c in conflicts)
    reusable = False
    text_prompt = None
    if manifest is not None:
        if conflicting_label:
            same = [s for s in manifest.segments
                    if tokens(s.semantic_label) & tokens(conflicting_label)]
            reusable = len(same) >= 2
        if not reusable:
            label = _nearest_segment_label(conflicts[0].point, manifest)
            text_prompt = f"the {label}." if label else "the surrounding background."
    else:
        text_prompt = "the surrounding background."
    if reusable:
        return InpaintOperation(True, points, True, "remove")
    return InpaintOperation(True, points, False, "fill", text_prompt=text_prompt)


def _nearest_segment_label(point: tuple[float, float],
                           manifest: SceneManifest) -> Optional[str]:
    best = None
    best_d = float("inf")
    for seg in manifest.segments:
        n = len(seg.polygon)
        cx = sum(p[0] for p in seg.polygon) / n
        cy = sum(p[1] for p in seg.polygon) / n
        d = math.hypot(point[0] - cx, point[1] - cy)
        if d < best_d:
            best_d = d
            best = seg.semantic_label
    return best


def inpaint_command(op: InpaintOperation, input_img_path: str = "{input_img_path}",
                    output_dir: str = "{output_dir}") -> str:
    """Render the shell command for *op*, leaving operator paths templated."""
    coords = " ".join(f"{x} {y}" for x, y in
                      ((_trim(p[0]), _trim(p[1])) for p in op.point_coords))
    fields = {
        "input_img_path": input_img_path,
        "coords_type": "key_in",
        "point_coords": coords,
        "point_labels": " ".join("1" for _ in op.point_coords),
        "dilate_kernel_size": "{dilate_kernel_size}",
        "output_dir": output_dir,
        "sam_model_type": "{sam_model_type}",
        "sam_ckpt_path": "{sam_ckpt_path}",
        "lama_config_path": "{lama_config_path}",
        "lama_ckpt_path": "{lama_ckpt_path}",
    }
    if op.method == "remove":
        return REMOVE_COMMAND_TEMPLATE.format(**fields)
    fields["text_prompt"] = op.text_prompt or ""
    return FILL_COMMAND_TEMPLATE.format(**fields)


def _trim(v: float) -> Any:
    return int(v) if float(v).is_integer() else v


# ---------------------------------------------------------------------------
# readability

def _relative_luminance(rgb: tuple[float, float, float]) -> float:
    out = []
    for c in rgb:
        c = c / 255.0
        out.append(c / 12.92 if c <= 0.03928 else ((c + 0.055) / 1.055) ** 2.4)
    r, g, b = out
    return 0.2126 * r + 0.7152 * g + 0.0722 * b


def contrast_ratio(a: tuple[float, float, float], b: tuple[float, float, float]) -> float:
    la = _relative_luminance(a)
    lb = _relative_luminance(b)
    lighter, darker = max(la, lb), min(la, lb)
    return (lighter + 0.05) / (darker + 0.05)


def _hex_to_rgb(value: str) -> tuple[float, float, float]:
    value = value.lstrip("#")
    return tuple(int(value[i:i + 2], 16) for i in (0, 2, 4))  # type: ignore[return-value]


_FILL_RE = re.compile(r'fill="(#[0-9a-fA-F]{6})"')


def _mark_colors(doc: DocumentState) -> list[tuple[float, float, float]]:
    colors = []
    svg = doc.chart.svg
    for m in doc.chart.mark_data:
        block_start = svg.find(m["class"])
        if block_start < 0:
            continue
        match = _FILL_RE.search(svg, block_start)
        if match:
            colors.append(_hex_to_rgb(match.group(1)))
    return colors


def estimated_label_boxes(doc: DocumentState) -> list[BoundingBox]:
    """Approximate bboxes for category labels along the axis."""
    x, y, w, h = doc.chart.plot_area
    marks = doc.chart.mark_data
    categories = []
    for m in marks:
        if m["category"] not in categories:
            categories.append(m["category"])
    boxes = []
    horizontal = doc.chart.proposal.type == "horizontal"
    n = max(1, len(categories))
    for i, c in enumerate(categories):
        tw = 7.0 * len(str(c))
        if horizontal:
            cy = y + h / n * (i + 0.5)
            boxes.append(BoundingBox(x - 8 - tw, cy - 6, x - 8, cy + 6))
        else:
            cx = x + w / n * (i + 0.5)
            boxes.append(BoundingBox(cx - tw / 2, y + h + 8, cx + tw / 2, y + h + 22))
    return boxes


def _overlap_area(a: BoundingBox, b: BoundingBox) -> float:
    w = min(a.xmax, b.xmax) - max(a.xmin, b.xmin)
    h = min(a.ymax, b.ymax) - max(a.ymin, b.ymin)
    return max(0.0, w) * max(0.0, h)


def check_readability(doc: DocumentState,
                      image_size: Optional[tuple[int, int]] = None,
                      backdrop_color: Optional[tuple[float, float, float]] = None,
                      label_boxes: Optional[Sequence[BoundingBox]] = None,
                      ) -> tuple[int, str]:
    """Heuristic readability score; explanation names each deducted rule."""
    rules: list[str] = []
    boxes = list(label_boxes) if label_boxes is not None else estimated_label_boxes(doc)
    overlapped = False
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            inter = _overlap_area(boxes[i], boxes[j])
            smaller = min(boxes[i].width * boxes[i].height,
                          boxes[j].width * boxes[j].height)
            if smaller > 0 and inter / smaller > LABEL_OVERLAP_FRACTION:
                overlapped = True
    if overlapped:
        rules.append("label overlap exceeds 20%")

    if backdrop_color is not None:
        colors = _mark_colors(doc)
        if colors and any(contrast_ratio(c, backdrop_color) < MIN_CONTRAST_RATIO
                          for c in colors):
            rules.append("mark-backdrop contrast ratio below 3.0")

    if image_size is not None:
        w, h = image_size
        outside = 0
        for m in doc.chart.mark_data:
            cx, cy = doc.bbox_of(m["class"]).center
            if not (0 <= cx <= w and 0 <= cy <= h):
                outside += 1
        if doc.chart.mark_data and outside / len(doc.chart.mark_data) > OUTSIDE_MARK_FRACTION:
            rules.append("more than 30% of marks lie outside the image")

    score = max(1, 5 - len(rules))
    if rules:
        return score, "Deductions: " + "; ".join(rules) + "."
    return score, "Labels, colors, and placement are clear."


# ---------------------------------------------------------------------------
# saliency

def attention_map(image: np.ndarray, top_k: int = 3,
                  ) -> tuple[np.ndarray, list[BoundingBox]]:
    """Contrast + center-bias saliency heuristic.

    Returns a float map in [0, 1] and the top regions on an 8x8 grid. An
    external saliency model can replace this by matching the signature.
    """
    from scipy.ndimage import uniform_filter

    if image.ndim == 3:
        gray = image.astype(float).mean(axis=2)
    else:
        gray = image.astype(float)
    local_mean = uniform_filter(gray, size=15, mode="nearest")
    contrast = np.abs(gray - local_mean)
    if contrast.max() > 0:
        contrast = contrast / contrast.max()
    h, w = gray.shape
    yy, xx = np.mgrid[0:h, 0:w]
    sigma = 0.4 * max(h, w)
    bias = np.exp(-(((xx - w / 2) ** 2 + (yy - h / 2) ** 2) / (2 * sigma ** 2)))
    saliency = 0.5 * contrast + 0.5 * bias
    saliency = saliency / saliency.max() if saliency.max() > 0 else saliency

    cells = 8
    ch, cw = max(1, h // cells), max(1, w // cells)
    scores = []
    for r in range(0, h, ch):
        for c in range(0, w, cw):
            block = saliency[r:r + ch, c:c + cw]
            scores.append((float(block.mean()), BoundingBox(c, r, min(c + cw, w), min(r + ch, h))))
    scores.sort(key=lambda s: (-s[0], s[1].ymin, s[1].xmin))
    return saliency, [bbox for _, bbox in scores[:top_k]]


# ---------------------------------------------------------------------------
# assembled result and the LLM contract

def evaluate(doc: DocumentState, table: DataTable,
             bound_members: Optional[Sequence[tuple[str, Any]]] = None,
             manifest: Optional[SceneManifest] = None,
             planned_regions: Optional[dict[str, BoundingBox]] = None,
             image_size: Optional[tuple[int, int]] = None,
             backdrop_color: Optional[tuple[float, float, float]] = None,
             ) -> tuple[EvaluationResult, list[str]]:
    """Run every deterministic check; returns the result plus run-log lines."""
    score, explanation, conflict, conflicts = check_data_accuracy(
        doc, table, bound_members, manifest, planned_regions)
    op = plan_inpaint(conflicts, manifest) if conflicts else None
    r_score, r_explanation = check_readability(
        doc, image_size or (manifest.image_size if manifest else None),
        backdrop_color)
    log: list[str] = []
    if op is not None:
        log.append(inpaint_command(op, input_img_path=(manifest.image_ref if manifest
                                                       else "{input_img_path}")))
    result = EvaluationResult(
        accuracy_score=score,
        accuracy_explanation=explanation,
        conflict_detected=conflict,
        readability_score=r_score,
        readability_explanation=r_explanation,
        inpaint_operation=op,
    )
    return result, log


def evaluation_prompt(table: DataTable) -> str:
    """Render the design-evaluation prompt for the LLM pass."""
    return (
        "We are evaluating the effectiveness of a visualization that combines data "
        "graphics with real-world imagery. A structured data table will be provided "
        "as the ground truth. You are asked to assess the visualization based on "
        "both the visual content and the provided data table.\n\n"
        "For data accuracy, you should evaluate whether the integration of visual "
        "elements (charts, marks, overlays) with the image accurately conveys the "
        "underlying data, and whether data values, trends, or relationships are "
        "clearly and correctly represented. Additionally, you must check for any "
        "conflicts between the visualization and the data table. If a conflict is "
        "detected, determine whether inpainting is necessary. If inpainting is "
        "needed, you should provide the coordinates of the point where correction "
        "should occur (point_coords), and assess whether there are existing elements "
        "that can be reused (reusable_element). If a reusable element is available, "
        "the method remove_anything.py should be applied. If no reusable element is "
        "available, the method fill_anything.py should be used instead, and a "
        "semantic text prompt (text_prompt) must be provided to guide the inpainting "
        "process.\n\n"
        "For readability and clarity, you should assess whether the visualization is "
        "easy to understand at a glance, whether the incorporation of the image "
        "enhances or hinders the viewer's interpretation of the data, and whether "
        "visual elements such as labels, highlights, colors, and scales are clear "
        "and distinguishable.\n\n"
        "Your evaluation should include a score for each category on a scale of 1 "
        "(very poor) to 5 (excellent), accompanied by a brief explanation supporting "
        "your assessment. The data table should be used to substantiate your "
        "evaluation of accuracy.\n\n"
        "Please format your evaluation results as a JSON object with keys "
        '"data_accuracy" {"score", "explanation", "conflict_detected", '
        '"inpaint_operation"?} and "readability" {"score", "explanation"}.\n\n'
        f"data table:\n{json.dumps(table.to_obj(), ensure_ascii=False)}\n"
    )


def merge_llm_evaluation(deterministic: EvaluationResult, raw: str) -> EvaluationResult:
    """Fold LLM commentary into the deterministic result.

    Deterministic accuracy findings always win; the LLM may only lower the
    readability score or extend explanations.
    """
    from .model import ParseError

    try:
        llm = EvaluationResult.from_obj(json.loads(raw))
    except (json.JSONDecodeError, ParseError):
        return deterministic
    readability = min(deterministic.readability_score, llm.readability_score)
    r_expl = deterministic.readability_explanation
    if llm.readability_explanation and llm.readability_explanation not in r_expl:
        r_expl = f"{r_expl} Model note: {llm.readability_explanation}"
    a_expl = deterministic.accuracy_explanation
    if llm.accuracy_explanation and llm.accuracy_explanation not in a_expl:
        a_expl = f"{a_expl} Model note: {llm.accuracy_explanation}"
    return EvaluationResult(
        accuracy_score=deterministic.accuracy_score,
        accuracy_explanation=a_expl,
        conflict_detected=deterministic.conflict_detected,
        readability_score=readability,
        readability_explanation=r_expl,
        inpaint_operation=deterministic.inpaint_operation,
    )
