"""Design mapping: rank (scene element, chart) pairs and build design plans.

Rules mode scores each pair over four considerations with fixed weights:
shape 0.35, semantic 0.30, layout 0.25, spatial 0.10. The weight vector is
an engine policy surfaced here as module constants; LLM mode delegates the
same reasoning to a model through the structured prompt below.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Optional, Sequence

from .charts import ChartDocument
from .model import (
    ALIGNMENT_TYPES,
    BoundingBox,
    DataTable,
    DesignPlan,
    LayoutAlignment,
    MappingPlanEntry,
    NarrativeFeatures,
    ParseError,
    SceneElement,
    SemanticAlignment,
    ShapeAlignment,
    ToolCall,
    VisDescription,
    VisualAlignment,
    validate,
)
from .scene import tokens

W_SHAPE = 0.35
W_SEMANTIC = 0.30
W_LAYOUT = 0.25
W_SPATIAL = 0.10

# family -> shape category of its data markers
_MARK_SHAPE = {
    "bar": "bar",
    "line": "line",
    "area": "line",
    "scatter": "point-mark",
    "pie": "pie",
    "donut": "donut",
    "radar": "polygon-mark",
}


class MappingError(RuntimeError):
    pass


class AdjustmentError(ValueError):
    pass


@dataclass(frozen=True)
class ScoredPlan:
    plan: DesignPlan
    chart_id: str
    element_id: str
    spatial: float
    shape: float
    layout: float
    semantic: float

    @property
    def total(self) -> float:
        return (W_SHAPE * self.shape + W_SEMANTIC * self.semantic
                + W_LAYOUT * self.layout + W_SPATIAL * self.spatial)

    def scores_obj(self) -> dict:
        return {"spatial": self.spatial, "shape": self.shape,
                "layout": self.layout, "semantic": self.semantic,
                "total": self.total}


def _shape_compat(element_shape: str, target: str) -> float:
    s = element_shape.lower()
    if s in ("circle", "ellipse") and target in ("pie", "donut", "point-mark"):
        return 1.0
    if s in ("flattening", "line") and target in ("line", "axis"):
        return 1.0
    if s == "rectangle" and target in ("bar", "canvas"):
        return 0.9
    if s in ("polygon", "triangle") and target == "polygon-mark":
        return 0.9
    return 0.2


def _element_shape(element: SceneElement) -> str:
    member = element.members[0]
    if member.primitive == "plane":
        return member.geometry.shape_type
    if member.primitive == "line":
        return "flattening"
    return "circle"


def _chart_tokens(doc: ChartDocument, vis: Optional[VisDescription]) -> set[str]:
    out = tokens(doc.proposal.title)
    for key in doc.proposal.category_key + doc.proposal.value_keys:
        out |= tokens(key)
    for m in doc.mark_data:
        out |= tokens(str(m.get("category", "")))
    if vis is not None:
        out |= tokens(vis.visual_insight)
    return out


def _element_tokens(element: SceneElement, features: Optional[NarrativeFeatures]) -> set[str]:
    out = tokens(element.semantic_label)
    for m in element.members:
        label = getattr(m.geometry, "label", None)
        if label:
            out |= tokens(label)
    if features is not None:
        for entity in features.entity_objects:
            if tokens(entity) & tokens(element.semantic_label):
                out |= tokens(entity)
    return out


def _jaccard(a: set[str], b: set[str]) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


def _normalized_anchor(bbox: BoundingBox, frame: BoundingBox, alignment: str) -> tuple[float, float]:
    ax, ay = bbox.anchor(alignment)
    w = frame.width or 1.0
    h = frame.height or 1.0
    return ((ax - frame.xmin) / w, (ay - frame.ymin) / h)


def _layout_score(element: SceneElement, scene_frame: BoundingBox,
                  doc: ChartDocument) -> tuple[float, str]:
    """Best-of-5 alignment feasibility; returns (score, alignmentType)."""
    ebox = element.bounding_box()
    cbox = doc.element_bounds.get(doc.proposal.chart_id)
    if cbox is None:
        x, y, w, h = doc.plot_area
        cbox = BoundingBox(x, y, x + w, y + h)
    canvas_frame = BoundingBox(0, 0, doc.canvas[0], doc.canvas[1])
    best = ("center", 0.0)
    for alignment in ALIGNMENT_TYPES:
        ea = _normalized_anchor(ebox, scene_frame, alignment)
        ca = _normalized_anchor(cbox, canvas_frame, alignment)
        dist = math.hypot(ea[0] - ca[0], ea[1] - ca[1])
        score = max(0.0, 1.0 - dist / math.sqrt(2.0))
        if score > best[1]:
            best = (alignment, score)
    return best[1], best[0]


def _mark_classes(doc: ChartDocument) -> list[str]:
    return [m["class"] for m in doc.mark_data]


def _build_plan(element: SceneElement, doc: ChartDocument,
                vis: Optional[VisDescription], alignment_type: str,
                shape_score: float) -> DesignPlan:
    family = doc.proposal.family
    value_key = doc.proposal.value_keys[0]
    cat_key = doc.proposal.category_key[0]
    element_shape = _element_shape(element)
    grouped = element.granularity == "groupedElements"

    if grouped:
        mapping_type = "many-to-many"
        # members bind to marks in data order, members sorted left to right
        n = len(element.members)
        vis_elements = tuple(f".{cls}" for cls in _mark_classes(doc)[:n])
    else:
        mapping_type = "one-to-one"
        vis_elements = (f"#{doc.proposal.chart_id}",)

    semantic = SemanticAlignment(
        vis_semantic=f"{value_key} across {cat_key} categories",
        real_world_semantic=element.semantic_label,
        description=(f"The {element.semantic_label} carries the meaning that the "
                     f"{family} chart encodes for {value_key}."),
    )
    shape = None
    if shape_score >= 0.5:
        shape = ShapeAlignment(
            real_world_shape=element_shape.capitalize(),
            vis_shape=_MARK_SHAPE[family].replace("-", " ").capitalize(),
            description=(f"The {element_shape} outline of the scene element matches "
                         f"the {family} chart's mark shape."),
        )
    layout = LayoutAlignment(
        real_world_layout=element.layout_description,
        vis_layout="plot area of the visualization canvas",
        alignment_type=alignment_type,
        description=(f"Anchor the visualization to the element at its "
                     f"{alignment_type} point."),
    )
    entry = MappingPlanEntry(
        mapping_type=mapping_type,
        real_world_elements=(f"#{element.element_id}",),
        vis_elements=vis_elements,
        semantic_alignment=semantic,
        visual_alignment=VisualAlignment(shape_alignment=shape, layout_alignment=layout),
    )
    overview = (f"Bind the {element.semantic_label} to the {family} chart "
                f"'{doc.proposal.title}' using {alignment_type} alignment.")
    return DesignPlan(overview=overview, mapping_plan=(entry,))


def score_pair(element: SceneElement, doc: ChartDocument,
               vis: Optional[VisDescription], features: Optional[NarrativeFeatures],
               scene_frame: BoundingBox) -> Optional[ScoredPlan]:
    """Score one (element, chart) pair; None when the feasibility gate fails."""
    grouped = element.granularity == "groupedElements"
    mark_count = len(doc.mark_data)
    if grouped:
        if len(element.members) > mark_count:
            return None
        spatial = len(element.members) / mark_count if mark_count else 0.0
    else:
        spatial = 1.0

    family = doc.proposal.family
    element_shape = _element_shape(element)
    targets = [_MARK_SHAPE[family]]
    if family in ("bar", "line", "scatter", "area"):
        targets.append("axis")
    targets.append("canvas")
    shape_score = max(_shape_compat(element_shape, t) for t in targets)

    semantic_score = _jaccard(_element_tokens(element, features), _chart_tokens(doc, vis))
    layout_score, alignment_type = _layout_score(element, scene_frame, doc)

    plan = _build_plan(element, doc, vis, alignment_type, shape_score)
    return ScoredPlan(
        plan=plan,
        chart_id=doc.proposal.chart_id,
        element_id=element.element_id,
        spatial=spatial,
        shape=shape_score,
        layout=layout_score,
        semantic=semantic_score,
    )


def _scene_frame(elements: Sequence[SceneElement]) -> BoundingBox:
    boxes = [e.bounding_box() for e in elements]
    return BoundingBox(min(b.xmin for b in boxes), min(b.ymin for b in boxes),
                       max(b.xmax for b in boxes), max(b.ymax for b in boxes))


def generate_plans(elements: Sequence[SceneElement], chart_docs: Sequence[ChartDocument],
                   vis_descs: Optional[Sequence[VisDescription]] = None,
                   image_descs: Optional[Sequence[Any]] = None,
                   features: Optional[NarrativeFeatures] = None,
                   mode: str = "rules", top_k: int = 5,
                   llm: Any = None) -> list[ScoredPlan]:
    """Rank every feasible (element, chart) pair; empty when nothing passes."""
    if not elements or not chart_docs:
        return []
    if mode == "llm":
        return _generate_plans_llm(elements, chart_docs, vis_descs, image_descs,
                                   features, top_k, llm)
    if mode != "rules":
        raise ValueError(f"unknown mapping mode {mode!r}")
    frame = _scene_frame(elements)
    vis_by_chart = {}
    if vis_descs is not None:
        for doc, vis in zip(chart_docs, vis_descs):
            vis_by_chart[doc.proposal.chart_id] = vis
    scored: list[ScoredPlan] = []
    for element in elements:
        for doc in chart_docs:
            pair = score_pair(element, doc, vis_by_chart.get(doc.proposal.chart_id),
                              features, frame)
            if pair is not None:
                scored.append(pair)
    scored.sort(key=lambda p: (-p.total, p.chart_id, p.element_id))
    return scored[:top_k]


def _generate_plans_llm(elements, chart_docs, vis_descs, image_descs, features,
                        top_k, llm) -> list[ScoredPlan]:
    if llm is None:
        raise MappingError("llm mode requires an adapter")
    from .scene import describe_element

    frame = _scene_frame(elements)
    scored: list[ScoredPlan] = []
    for ei, element in enumerate(elements):
        image_desc = (image_descs[ei] if image_descs is not None
                      else describe_element(element, features or _EMPTY_FEATURES))
        for di, doc in enumerate(chart_docs):
            vis = vis_descs[di] if vis_descs is not None else None
            if vis is None:
                from .charts import describe_chart
                vis = describe_chart(doc, features)
            prompt = mapping_prompt(image_desc, vis, doc.svg)
            raw = llm.complete("design-mapping", prompt)
            plan = _parse_plan_response(raw)
            if plan is None:
                continue
            rules = score_pair(element, doc, vis, features, frame)
            if rules is None:
                continue
            scored.append(ScoredPlan(plan, doc.proposal.chart_id, element.element_id,
                                     rules.spatial, rules.shape, rules.layout,
                                     rules.semantic))
    scored.sort(key=lambda p: (-p.total, p.chart_id, p.element_id))
    return scored[:top_k]


def _parse_plan_response(raw: str) -> Optional[DesignPlan]:
    text = raw.strip()
    if text == "None":
        return None
    try:
        plan = DesignPlan.from_obj(json.loads(text))
    except (json.JSONDecodeError, ParseError) as exc:
        raise MappingError(f"model returned an invalid design plan: {exc}") from exc
    report = validate(plan)
    if not report.ok:
        raise MappingError(f"model plan failed validation: {report.violations}")
    return plan


_EMPTY_FEATURES = NarrativeFeatures((), (), (), (), ())


# ---------------------------------------------------------------------------
# adjustment suggestions

def _referenced_categories(table: DataTable, cat_key: str,
                           features: Optional[NarrativeFeatures]) -> list[Any]:
    if features is None:
        return []
    vocab: set[str] = set()
    for text in list(features.data_facts) + list(features.entity_objects):
        vocab |= tokens(text)
    out = []
    for value in table.values(cat_key):
        if tokens(str(value)) & vocab:
            out.append(value)
    return out


def suggest_adjustments(plan: ScoredPlan, table: DataTable,
                        features: Optional[NarrativeFeatures] = None,
                        element: Optional[SceneElement] = None,
                        chart_doc: Optional[ChartDocument] = None) -> list[ToolCall]:
    """Data-level tool calls that tighten the binding without changing facts.

    Data calls always precede view calls in the final sequence; only data
    calls are emitted here.
    """
    entry = plan.plan.mapping_plan[0]
    calls: list[ToolCall] = []
    if entry.mapping_type != "many-to-many" or element is None:
        return calls
    if chart_doc is None:
        raise AdjustmentError("many-to-many adjustment needs the chart document")
    cat_key = chart_doc.proposal.category_key[0]
    value_key = chart_doc.proposal.value_keys[0]
    members = len(element.members)
    rows = len(table.rows)

    if members < rows:
        referenced = _referenced_categories(table, cat_key, features)
        if len(referenced) == members:
            keep = set(referenced)
        else:
            # keep the largest values when the narrative does not decide
            idx = table.column_index(value_key)
            ranked = sorted(table.rows, key=lambda r: float(r[idx]), reverse=True)
            keep = {r[table.column_index(cat_key)] for r in ranked[:members]}
            dropped_referenced = [c for c in referenced if c not in keep]
            if dropped_referenced:
                raise AdjustmentError(
                    f"filtering would drop narrative-referenced rows: {dropped_referenced}")
        dropped = [v for v in table.values(cat_key) if v not in keep]
        calls.append(ToolCall("filterData",
                              ({"column": cat_key, "op": "not-in", "value": tuple(dropped)},)))

    sort_order = _monotone_order(element)
    if sort_order is not None:
        values = table.numeric_values(value_key)
        already = values == sorted(values, reverse=(sort_order == "descending"))
        if not already:
            calls.append(ToolCall("sortData", (value_key, sort_order)))

    return calls


def _monotone_order(element: SceneElement) -> Optional[str]:
    """Detect a monotone height contour over the members, left to right."""
    if len(element.members) < 3:
        return None
    pts = sorted((m.centroid for m in element.members), key=lambda p: p[0])
    ys = [p[1] for p in pts]
    if all(ys[i] > ys[i + 1] for i in range(len(ys) - 1)):
        return "ascending"   # rising contour in image space (y grows downward)
    if all(ys[i] < ys[i + 1] for i in range(len(ys) - 1)):
        return "descending"
    return None


# ---------------------------------------------------------------------------
# prompt contract

_CONSIDERATIONS = """1. Spatial Organization.
A single element in the real-world scene can be mapped to a data marker or a set of data markers sharing the same data attributes, the entire canvas, or coordinate axes. When type is singleElement under grainLevel in imageDescription.
Grouped elements can be mapped to data markers but require a data-binding relationship. When type is groupedElements under grainLevel in imageDescription.

2. Shape Similarity.
It involves two types: similar in shape types and similar in shape features. For shape types, the shapes of real-world elements approximate the mark types in data visualizations, such as points to points, lines to lines, and circles to circles. Refer to the shapeType under grainLevel in imageDescription and the chartType or type under mark in visDescription. For shape features, the visual shape features of real-world elements can correspond to the mark type or chartType in the visualization or point to insights from the overall visual representation visualInsight of the data visualization.

3. Layout Consistency
We consider relative positions and the distribution here to meet the layout alignment. The relative position of individual elements within a real-world scene can correspond to the spatial layout of a visualization, like serving as the coordinate origin. Consider the elementLevel under layoutDescription in the imageDescription and the spatialSubstrate in the visDescription.
The distribution of grouped elements within a real-world scene corresponds to the overall visualization placement. This should be considered regarding the distributionLayout under grainLevel in imageDescription and the spatialSubstrate or visualInsight in visDescription.

4. Semantic Binding
The semantics of real-world entities can directly correspond to the meaning of the data or metaphorically represent data categories. Additionally, elements conveying narrative context can also be mapped accordingly. This rule can be considered by referring to the semantic in imageDescription and metadata information in visualInsight."""


def mapping_prompt(image_desc: Any, vis_desc: Any, vis_svg: str) -> str:
    """Render the design-mapping prompt for one (element, chart) pair."""
    from .model import dumps

    image_json = dumps(image_desc) if hasattr(image_desc, "to_obj") else json.dumps(image_desc)
    vis_json = dumps(vis_desc) if hasattr(vis_desc, "to_obj") else json.dumps(vis_desc)
    return (
        "You are a data analyst and designer specializing in integrating data "
        "visualizations into real-world scene images based on narrative intent.\n"
        "Your task is to analyze the visual features and semantic structures of these "
        "inputs and generate creative design proposals that seamlessly integrate the "
        "real-world scene with the data visualization.\n\n"
        "Based on prior design experiences, you should refer to the following design "
        "patterns to guide your proposal.\n"
        "Both semantic coherence and visual alignment are important. While achieving "
        "both is ideal, satisfying one dimension can still produce effective results.\n\n"
        f"{_CONSIDERATIONS}\n\n"
        "If no design mapping exists, return None. If a design mapping exists, please "
        "provide your design proposal as a JSON object with the shape "
        '{"designPlan": {"overview": string, "mappingPlan": [{"mappingType": '
        '"one-to-one" | "one-to-many" | "many-to-many", "realWorldElements": string[], '
        '"visElements": string[], "semanticAlignment"?: {"visSemantic", '
        '"realWorldSemantic", "description"}, "visualAlignment"?: {"shapeAlignment"?: '
        '{"realWorldShape", "visShape", "description"}, "layoutAlignment"?: '
        '{"realWorldLayout", "visLayout", "alignmentType", "description"}}}]}}.\n\n'
        f"imageDescription:\n{image_json}\n"
        f"visDescription:\n{vis_json}\n"
        f"visSVG:\n{vis_svg}\n"
    )


def adjustment_prompt(table: DataTable, plan: DesignPlan) -> str:
    """Render the visualization-adjustment prompt for a chosen plan."""
    from .model import dumps

    return (
        "You may propose reasonable modifications to the visualization view to support "
        "the integration, but these changes must respect visualization principles and "
        "maintain data narrative consistency. Modifications can occur both at the data "
        "level and the view level.\n\n"
        "At the data level, you are allowed to improve entity-to-data mapping by "
        "filtering or pruning the dataset using the function filterData(dataset, "
        "filterCondition), where dataset is the input data collection and "
        "filterCondition defines the rule for selecting relevant entities. You can "
        "also sort the dataset to highlight key insights by applying sortData(dataset, "
        "sortKey, sortOrder), where sortKey specifies the attribute for sorting and "
        "sortOrder determines whether the sorting is ascending, descending or other "
        "orders. To better structure the information, you may categorize the data "
        "using categorizeData(dataset, categoryKey), grouping entities based on a "
        "shared attribute.\n\n"
        "At the view level, adjustments should aim to better align visual elements "
        "with real-world scene representations while preserving clarity and meaning. "
        "You may resize elements by applying editSvgSize(SvgElement, targetHeight, "
        "targetWidth), shift their positions using editSvgPosition(SvgElement, "
        "targetX, targetY), or adjust their orientation through "
        "editSvgRotation(SvgElement, targetAngle). Before that, you should select and "
        "align the anchor point to modify these operations using "
        "alignToElement(source, target, alignmentType).\n\n"
        "Finally, you should return a sequence of the applied operations in the form "
        "of function calls with their arguments.\n\n"
        f"dataset:\n{json.dumps(table.to_obj(), ensure_ascii=False)}\n"
        f"designPlan:\n{dumps(plan)}"
    )
