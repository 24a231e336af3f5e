"""HTTP interface over the pipeline.

Mutating endpoints accept an optional ``requestId``; repeating a request id
returns the stored response instead of re-running the mutation.
"""

from __future__ import annotations

import tempfile
from pathlib import Path
from typing import Any, Optional

from fastapi import Body, FastAPI, HTTPException
from fastapi.responses import HTMLResponse, Response

from ..model import DataTable, ParseError, ToolCall
from ..scene import SceneManifest
from .config import EngineConfig
from .llm import LLMAdapter
from . import pipeline as pl


class Studio:
    """Holds loaded projects and the idempotency cache for one app."""

    def __init__(self, projects_root: Optional[Path] = None,
                 config: Optional[EngineConfig] = None) -> None:
        self.root = Path(projects_root or tempfile.mkdtemp(prefix="chartscene-"))
        self.config = config or EngineConfig()
        self.projects: dict[str, pl.Project] = {}
        self.replies: dict[str, Any] = {}

    def get(self, project_id: str) -> pl.Project:
        if project_id not in self.projects:
            try:
                self.projects[project_id] = pl.load_project(self.root, project_id)
            except pl.PipelineError as exc:
                raise HTTPException(404, str(exc)) from exc
        return self.projects[project_id]

    def save(self, project: pl.Project) -> None:
        self.projects[project.project_id] = project
        pl.save_project(project, self.root)


def _bbox_obj(b) -> dict:
    return {"xmin": b.xmin, "ymin": b.ymin, "xmax": b.xmax, "ymax": b.ymax}


def _plan_obj(project: pl.Project, index: int) -> dict:
    p = project.plans[index]
    return {
        "index": index,
        "chartId": p.chart_id,
        "elementId": p.element_id,
        "overview": p.plan.overview,
        "scores": p.scores_obj(),
        "selected": index == project.selection,
    }


def _summary(project: pl.Project) -> dict:
    out: dict[str, Any] = {
        "projectId": project.project_id,
        "outcome": project.outcome,
        "selection": project.selection,
        "completedStages": list(project.completed_stages),
        "errors": dict(project.errors),
        "plans": [_plan_obj(project, i) for i in range(len(project.plans))],
        "toolCalls": [c.to_obj() for c in project.tool_calls],
        "telemetryTotals": pl.telemetry_totals(project.telemetry),
    }
    if project.evaluation is not None:
        out["evaluation"] = project.evaluation.to_obj()
    if project.doc_state is not None:
        out["markBounds"] = {
            m["class"]: _bbox_obj(project.doc_state.bbox_of(m["class"]))
            for m in project.doc_state.chart.mark_data
        }
    return out


def create_app(projects_root: Optional[Path] = None,
               config: Optional[EngineConfig] = None,
               adapter: Optional[LLMAdapter] = None) -> FastAPI:
    app = FastAPI(title="chartscene studio", version="0.1.0")
    studio = Studio(projects_root, config)
    app.state.studio = studio

    def idempotent(request_id: Optional[str], compute):
        if request_id and request_id in studio.replies:
            return studio.replies[request_id]
        reply = compute()
        if request_id:
            studio.replies[request_id] = reply
        return reply

    @app.post("/projects")
    def create_project(body: dict = Body(...)):
        def compute():
            try:
                table = DataTable.from_obj(body["table"])
                manifest = SceneManifest.from_obj(body["manifest"])
                narration = body["narration"]
            except (KeyError, ParseError, TypeError) as exc:
                raise HTTPException(400, f"invalid project inputs: {exc}") from exc
            mode = body.get("mode", studio.config.mode)
            project = pl.run_pipeline(
                table, narration, manifest, mode=mode,
                top_k=int(body.get("topK", studio.config.top_k)),
                config=studio.config, adapter=adapter,
                project_id=body.get("projectId"))
            studio.save(project)
            return _summary(project)
        return idempotent(body.get("requestId"), compute)

    @app.get("/projects/{project_id}")
    def get_project(project_id: str):
        return _summary(studio.get(project_id))

    @app.get("/projects/{project_id}/alternatives")
    def alternatives(project_id: str):
        project = studio.get(project_id)
        return {"plans": [_plan_obj(project, i) for i in range(len(project.plans))]}

    @app.post("/projects/{project_id}/select")
    def select(project_id: str, body: dict = Body(...)):
        project = studio.get(project_id)

        def compute():
            try:
                pl.select_and_refine(project, int(body["planIndex"]))
            except (KeyError, ValueError, pl.PipelineError) as exc:
                raise HTTPException(400, str(exc)) from exc
            studio.save(project)
            return _summary(project)
        return idempotent(body.get("requestId"), compute)

    @app.post("/projects/{project_id}/refine")
    def refine(project_id: str, body: dict = Body(...)):
        project = studio.get(project_id)

        def compute():
            try:
                calls = [ToolCall.from_obj(c) for c in body["calls"]]
                pl.apply_refinement(project, calls)
            except (KeyError, ParseError, pl.PipelineError) as exc:
                raise HTTPException(400, str(exc)) from exc
            studio.save(project)
            return _summary(project)
        return idempotent(body.get("requestId"), compute)

    @app.get("/projects/{project_id}/composition.svg")
    def composition_svg(project_id: str):
        project = studio.get(project_id)
        if project.composition is None:
            raise HTTPException(404, "project has no composition")
        return Response(project.composition.svg, media_type="image/svg+xml")

    @app.get("/projects/{project_id}/preview.html")
    def preview_html(project_id: str):
        project = studio.get(project_id)
        if project.composition is None:
            raise HTTPException(404, "project has no composition")
        return HTMLResponse(project.composition.preview_html)

    @app.get("/projects/{project_id}/evaluation")
    def evaluation(project_id: str):
        project = studio.get(project_id)
        if project.evaluation is None:
            raise HTTPException(404, "project has no evaluation")
        return project.evaluation.to_obj()

    @app.get("/projects/{project_id}/telemetry")
    def telemetry(project_id: str):
        project = studio.get(project_id)
        return {
            "records": [r.to_obj() for r in project.telemetry],
            "totals": pl.telemetry_totals(project.telemetry),
        }

    return app
