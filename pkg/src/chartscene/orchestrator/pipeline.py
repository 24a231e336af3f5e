"""Pipeline driver and project persistence.

A project is a directory of independently inspectable schema files plus a
manifest. Every artifact is a deterministic function of the inputs and the
recorded LLM responses, so save -> load -> save is byte-identical.
"""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

from .. import animator, charts, evaluator, mapping, narrative, scene
from ..executor import DocumentState, align_to_element, execute_sequence
from ..model import (
    AnimationConfig,
    DataTable,
    DesignPlan,
    EvaluationResult,
    ImageDescription,
    NarrativeFeatures,
    SceneElement,
    TelemetryRecord,
    ToolCall,
    dumps,
)
from ..scene import SceneManifest
from .config import EngineConfig
from .llm import LLMAdapter

STAGES = ("feature-extraction", "chart-proposal", "scene-perception",
          "design-mapping", "adjustment", "evaluation", "animation", "composition")


class PipelineError(RuntimeError):
    pass


@dataclass
class Project:
    project_id: str
    mode: str
    top_k: int
    table: DataTable
    narration: str
    manifest: SceneManifest
    features: Optional[NarrativeFeatures] = None
    proposals: list = field(default_factory=list)
    chart_docs: list = field(default_factory=list)
    vis_descs: list = field(default_factory=list)
    elements: list[SceneElement] = field(default_factory=list)
    image_descs: list[ImageDescription] = field(default_factory=list)
    plans: list[mapping.ScoredPlan] = field(default_factory=list)
    selection: Optional[int] = None
    adjusted_table: Optional[DataTable] = None
    tool_calls: list[ToolCall] = field(default_factory=list)
    execution_log: list[dict] = field(default_factory=list)
    doc_state: Optional[DocumentState] = None
    evaluation: Optional[EvaluationResult] = None
    evaluation_log: list[str] = field(default_factory=list)
    animations: list[AnimationConfig] = field(default_factory=list)
    animation_warnings: list[str] = field(default_factory=list)
    composition: Optional[animator.CompositionDocument] = None
    telemetry: list[TelemetryRecord] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)
    outcome: str = "pending"
    completed_stages: list[str] = field(default_factory=list)

    def selected_plan(self) -> mapping.ScoredPlan:
        if self.selection is None or not (0 <= self.selection < len(self.plans)):
            raise PipelineError(f"invalid plan selection {self.selection!r}")
        return self.plans[self.selection]

    def element_by_id(self, element_id: str) -> SceneElement:
        for e in self.elements:
            if e.element_id == element_id:
                return e
        raise PipelineError(f"unknown element {element_id!r}")

    def chart_doc_by_id(self, chart_id: str):
        for doc in self.chart_docs:
            if doc.proposal.chart_id == chart_id:
                return doc
        raise PipelineError(f"unknown chart {chart_id!r}")


class _Telemetry:
    """Times each stage and attributes the adapter's token usage to it."""

    def __init__(self, project: Project, adapter: Optional[LLMAdapter]) -> None:
        self.project = project
        self.adapter = adapter

    def run(self, stage: str, fn):
        seen = len(self.adapter.usage) if self.adapter else 0
        start = time.perf_counter()
        try:
            result = fn()
        except Exception as exc:
            self.project.errors[stage] = f"{type(exc).__name__}: {exc}"
            raise
        finally:
            elapsed = time.perf_counter() - start
            tokens_in = tokens_out = 0
            if self.adapter:
                for entry in self.adapter.usage[seen:]:
                    tokens_in += entry["input_tokens"]
                    tokens_out += entry["output_tokens"]
            self.project.telemetry.append(
                TelemetryRecord(stage, elapsed, tokens_in, tokens_out))
        self.project.completed_stages.append(stage)
        return result


def telemetry_totals(records: Sequence[TelemetryRecord]) -> dict:
    return {
        "elapsed_seconds": sum(r.elapsed_seconds for r in records),
        "input_tokens": sum(r.input_tokens for r in records),
        "output_tokens": sum(r.output_tokens for r in records),
    }


# ---------------------------------------------------------------------------
# stage helpers

def _view_calls(plan: mapping.ScoredPlan, element: SceneElement,
                doc_state: DocumentState) -> list[ToolCall]:
    entry = plan.plan.mapping_plan[0]
    calls: list[ToolCall] = []
    if entry.mapping_type == "many-to-many":
        members = sorted(element.members, key=lambda m: m.centroid[0])
        mark_classes = [m["class"] for m in doc_state.chart.mark_data]
        for member, cls in zip(members, mark_classes):
            bbox = member.bounding_box
            if bbox is None:
                cx, cy = member.centroid
                continue
            calls.extend(align_to_element(doc_state, cls, bbox, "center"))
    else:
        la = entry.visual_alignment.layout_alignment if entry.visual_alignment else None
        alignment = la.alignment_type if la else "center"
        calls.extend(align_to_element(doc_state, doc_state.chart.proposal.chart_id,
                                      element.bounding_box(), alignment))
    return calls


def _bound_members(plan: mapping.ScoredPlan, element: SceneElement,
                   doc_state: DocumentState) -> list[tuple[str, Any]]:
    entry = plan.plan.mapping_plan[0]
    if entry.mapping_type != "many-to-many":
        return []
    members = sorted(element.members, key=lambda m: m.centroid[0])
    mark_classes = [m["class"] for m in doc_state.chart.mark_data]
    return [(cls, member.geometry) for member, cls in zip(members, mark_classes)]


def _llm_stage_mode(mode: str) -> str:
    return "llm" if mode in ("llm", "replay") else "rules"


def _apply_plan(project: Project, plan: mapping.ScoredPlan,
                extra_calls: Sequence[ToolCall] = ()) -> None:
    """Adjustment stage: data ops, re-render, view alignment, extras."""
    element = project.element_by_id(plan.element_id)
    base_doc = project.chart_doc_by_id(plan.chart_id)
    data_calls = mapping.suggest_adjustments(
        plan, project.table, project.features, element=element, chart_doc=base_doc)

    table = project.table
    from ..executor import filter_data, sort_data

    log: list[dict] = []
    for i, call in enumerate(data_calls):
        pre = len(table.rows)
        if call.name == "filterData":
            table = filter_data(table, call.args[0])
        elif call.name == "sortData":
            table = sort_data(table, call.args[0], call.args[1])
        log.append({"index": i, "call": call.as_call_string(),
                    "pre": {"rows": pre}, "post": {"rows": len(table.rows)}})

    doc = charts.render_chart(base_doc.proposal, table, canvas=base_doc.canvas)
    state = DocumentState(doc)
    view_calls = _view_calls(plan, element, state)
    all_view = list(view_calls) + list(extra_calls)
    result = execute_sequence(state, all_view, table)
    if not result.ok:
        raise PipelineError(f"view call {result.failed_index} failed: {result.error}")
    for entry in result.log:
        entry = dict(entry)
        entry["index"] += len(data_calls)
        log.append(entry)

    project.adjusted_table = table
    project.tool_calls = list(data_calls) + all_view
    project.execution_log = log
    project.doc_state = result.doc


def _evaluate(project: Project, mode: str, adapter: Optional[LLMAdapter]) -> None:
    plan = project.selected_plan()
    element = project.element_by_id(plan.element_id)
    state = project.doc_state
    bound = _bound_members(plan, element, state)
    result, log = evaluator.evaluate(
        state, project.adjusted_table or project.table,
        bound_members=bound, manifest=project.manifest)
    if _llm_stage_mode(mode) == "llm" and adapter is not None:
        prompt = evaluator.evaluation_prompt(project.adjusted_table or project.table)
        raw = adapter.complete("design-evaluation", prompt)
        result = evaluator.merge_llm_evaluation(result, raw)
    project.evaluation = result
    project.evaluation_log = log


def run_pipeline(table: DataTable, narration: str, manifest: SceneManifest,
                 mode: str = "rules", top_k: int = 5,
                 config: Optional[EngineConfig] = None,
                 adapter: Optional[LLMAdapter] = None,
                 project_id: Optional[str] = None) -> Project:
    """Run every stage; failures are recorded and downstream stages skipped."""
    if mode not in ("llm", "rules", "replay"):
        raise ValueError(f"unknown pipeline mode {mode!r}")
    config = config or EngineConfig()
    if adapter is None and mode in ("llm", "replay"):
        adapter = LLMAdapter(config, mode="replay" if mode == "replay" else "live")
    project = Project(project_id or uuid.uuid4().hex[:12], mode, top_k,
                      table, narration, manifest)
    t = _Telemetry(project, adapter)
    stage_mode = _llm_stage_mode(mode)

    try:
        project.features = t.run("feature-extraction", lambda: narrative.extract_features(
            narration, table, mode=stage_mode, llm=adapter))

        def proposals_stage():
            proposals = charts.propose_charts(table, project.features)
            docs = [charts.render_chart(p, table) for p in proposals]
            descs = [charts.describe_chart(d, project.features) for d in docs]
            return proposals, docs, descs
        project.proposals, project.chart_docs, project.vis_descs = t.run(
            "chart-proposal", proposals_stage)

        def perception_stage():
            elements = scene.filter_and_group(manifest, project.features)
            descs = [scene.describe_element(e, project.features, manifest.image_size)
                     for e in elements]
            return elements, descs
        project.elements, project.image_descs = t.run("scene-perception", perception_stage)

        project.plans = t.run("design-mapping", lambda: mapping.generate_plans(
            project.elements, project.chart_docs, project.vis_descs,
            image_descs=project.image_descs, features=project.features,
            mode=stage_mode, top_k=top_k, llm=adapter))
        if not project.plans:
            project.outcome = "no design mapping"
            return project

        project.selection = 0
        t.run("adjustment", lambda: _apply_plan(project, project.selected_plan()))
        t.run("evaluation", lambda: _evaluate(project, mode, adapter))

        def animation_stage():
            configs, warnings = animator.plan_animations(
                project.features.actions, project.doc_state)
            return configs, warnings
        project.animations, project.animation_warnings = t.run("animation", animation_stage)

        project.composition = t.run("composition", lambda: animator.compose(
            manifest.image_ref, manifest.image_size, project.doc_state,
            project.animations, project.evaluation,
            title=project.selected_plan().plan.overview))
        project.outcome = "composed"
    except Exception:
        project.outcome = "failed"
    return project


def select_and_refine(project: Project, plan_index: int,
                      extra_calls: Sequence[ToolCall] = ()) -> Project:
    """Re-run adjustment, evaluation, animation, and composition for a plan."""
    if not (0 <= plan_index < len(project.plans)):
        raise PipelineError(f"plan index {plan_index} out of range "
                            f"(have {len(project.plans)} plans)")
    project.selection = plan_index
    _apply_plan(project, project.selected_plan(), extra_calls)
    _evaluate(project, "rules", None)
    project.animations, project.animation_warnings = animator.plan_animations(
        project.features.actions, project.doc_state)
    project.composition = animator.compose(
        project.manifest.image_ref, project.manifest.image_size, project.doc_state,
        project.animations, project.evaluation,
        title=project.selected_plan().plan.overview)
    project.outcome = "composed"
    return project


def apply_refinement(project: Project, calls: Sequence[ToolCall]) -> Project:
    """Apply extra view calls to the current document, then re-derive the
    evaluation, animations, and composition."""
    if project.doc_state is None:
        raise PipelineError("project has no composed document to refine")
    table = project.adjusted_table or project.table
    result = execute_sequence(project.doc_state, list(calls), table)
    if not result.ok:
        raise PipelineError(f"refine call {result.failed_index} failed: {result.error}")
    offset = len(project.tool_calls)
    for entry in result.log:
        entry = dict(entry)
        entry["index"] += offset
        project.execution_log.append(entry)
    project.doc_state = result.doc
    project.tool_calls = list(project.tool_calls) + list(calls)
    _evaluate(project, "rules", None)
    project.animations, project.animation_warnings = animator.plan_animations(
        project.features.actions, project.doc_state)
    project.composition = animator.compose(
        project.manifest.image_ref, project.manifest.image_size, project.doc_state,
        project.animations, project.evaluation,
        title=project.selected_plan().plan.overview)
    return project


# ---------------------------------------------------------------------------
# persistence

def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def save_project(project: Project, root: Path) -> Path:
    out = Path(root) / project.project_id
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "project.json", dumps({
        "projectId": project.project_id,
        "mode": project.mode,
        "topK": project.top_k,
        "selection": project.selection,
        "outcome": project.outcome,
        "completedStages": list(project.completed_stages),
        "errors": dict(project.errors),
        "animationWarnings": list(project.animation_warnings),
    }))
    _write(out / "table.json", dumps(project.table))
    _write(out / "narration.txt", project.narration)
    _write(out / "scene_manifest.json", dumps(project.manifest))
    if project.features is not None:
        _write(out / "features.json", dumps(project.features))
    if project.proposals:
        _write(out / "proposals.json", dumps([p.to_obj() for p in project.proposals]))
    if project.elements:
        _write(out / "elements.json", dumps([e.to_obj() for e in project.elements]))
    if project.image_descs:
        _write(out / "image_descriptions.json",
               dumps([d.to_obj() for d in project.image_descs]))
    if project.plans:
        _write(out / "plans.json", dumps([
            {"chartId": p.chart_id, "elementId": p.element_id,
             "scores": p.scores_obj(), "plan": p.plan.to_obj()}
            for p in project.plans]))
    if project.adjusted_table is not None:
        _write(out / "adjusted_table.json", dumps(project.adjusted_table))
    if project.tool_calls:
        _write(out / "tool_calls.json", dumps([c.to_obj() for c in project.tool_calls]))
    if project.execution_log:
        _write(out / "execution_log.jsonl",
               "".join(json.dumps(e) + "\n" for e in project.execution_log))
    if project.evaluation is not None:
        _write(out / "evaluation.json", dumps(project.evaluation))
    if project.evaluation_log:
        _write(out / "inpaint_log.txt", "\n\n".join(project.evaluation_log) + "\n")
    if project.animations:
        _write(out / "animations.json", dumps([a.to_obj() for a in project.animations]))
    if project.composition is not None:
        _write(out / "composition.svg", project.composition.svg)
        _write(out / "preview.html", project.composition.preview_html)
        _write(out / "gallery.html", animator.build_gallery([
            {"title": p.plan.overview, "href": "composition.svg",
             "score": p.total,
             "conflict": (project.evaluation.conflict_detected
                          if i == project.selection and project.evaluation else False)}
            for i, p in enumerate(project.plans)]))
    _write(out / "telemetry.json", dumps([r.to_obj() for r in project.telemetry]))
    return out


def load_project(root: Path, project_id: str) -> Project:
    src = Path(root) / project_id
    if not src.exists():
        raise PipelineError(f"no project {project_id!r} under {root}")
    meta = json.loads((src / "project.json").read_text(encoding="utf-8"))
    from ..model import ChartProposal, loads

    table = DataTable.from_obj(json.loads((src / "table.json").read_text(encoding="utf-8")))
    manifest = SceneManifest.from_obj(
        json.loads((src / "scene_manifest.json").read_text(encoding="utf-8")))
    project = Project(meta["projectId"], meta["mode"], meta["topK"], table,
                      (src / "narration.txt").read_text(encoding="utf-8"), manifest)
    project.selection = meta.get("selection")
    project.outcome = meta.get("outcome", "pending")
    project.completed_stages = list(meta.get("completedStages", []))
    project.errors = dict(meta.get("errors", {}))
    project.animation_warnings = list(meta.get("animationWarnings", []))

    def read_json(name: str):
        path = src / name
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    if (src / "features.json").exists():
        project.features = NarrativeFeatures.from_obj(read_json("features.json"))
    proposals = read_json("proposals.json") or []
    project.proposals = [ChartProposal.from_obj(p) for p in proposals]
    project.chart_docs = [charts.render_chart(p, table) for p in project.proposals]
    project.vis_descs = [charts.describe_chart(d, project.features)
                         for d in project.chart_docs]
    elements = read_json("elements.json") or []
    project.elements = [SceneElement.from_obj(e) for e in elements]
    descs = read_json("image_descriptions.json") or []
    project.image_descs = [ImageDescription.from_obj(d) for d in descs]
    for p in read_json("plans.json") or []:
        scores = p["scores"]
        project.plans.append(mapping.ScoredPlan(
            DesignPlan.from_obj(p["plan"]), p["chartId"], p["elementId"],
            scores["spatial"], scores["shape"], scores["layout"], scores["semantic"]))
    adjusted = read_json("adjusted_table.json")
    if adjusted is not None:
        project.adjusted_table = DataTable.from_obj(adjusted)
    project.tool_calls = [ToolCall.from_obj(c) for c in read_json("tool_calls.json") or []]
    log_path = src / "execution_log.jsonl"
    if log_path.exists():
        project.execution_log = [json.loads(line) for line in
                                 log_path.read_text(encoding="utf-8").splitlines() if line]
    if (src / "evaluation.json").exists():
        project.evaluation = EvaluationResult.from_obj(read_json("evaluation.json"))
    if (src / "inpaint_log.txt").exists():
        text = (src / "inpaint_log.txt").read_text(encoding="utf-8").rstrip("\n")
        project.evaluation_log = text.split("\n\n") if text else []
    project.animations = [AnimationConfig.from_obj(a)
                          for a in read_json("animations.json") or []]
    project.telemetry = [TelemetryRecord.from_obj(r)
                         for r in read_json("telemetry.json") or []]

    # rebuild the transformed document from the persisted calls
    if project.selection is not None and project.plans and project.adjusted_table is not None:
        plan = project.selected_plan()
        base = project.chart_doc_by_id(plan.chart_id)
        doc = charts.render_chart(base.proposal, project.adjusted_table, canvas=base.canvas)
        state = DocumentState(doc)
        view_calls = [c for c in project.tool_calls
                      if c.name.startswith(("editSvg", "getSvg"))]
        result = execute_sequence(state, view_calls, project.adjusted_table)
        if result.ok:
            project.doc_state = result.doc
            if (src / "composition.svg").exists():
                project.composition = animator.CompositionDocument(
                    svg=(src / "composition.svg").read_text(encoding="utf-8"),
                    preview_html=(src / "preview.html").read_text(encoding="utf-8"),
                    animations=list(project.animations),
                    chart_id=plan.chart_id,
                    image_ref=manifest.image_ref,
                    image_size=manifest.image_size,
                    evaluation=project.evaluation)
    return project
