"""Command line interface."""

from __future__ import annotations

import csv as csv_module
import json
import re
import sys
from pathlib import Path

import click

from ..model import Column, DataTable, ToolCall, dumps
from ..scene import SceneManifest
from .config import EngineConfig
from .llm import LLMAdapter
from . import pipeline as pl

_TEMPORAL_RE = re.compile(r"^\d{4}(-\d{2}(-\d{2})?)?$")


def infer_table(csv_path: Path) -> DataTable:
    """Read a CSV and infer column kinds from the values."""
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv_module.reader(fh)
        rows = [row for row in reader if row]
    if len(rows) < 2:
        raise click.ClickException(f"{csv_path}: need a header row and at least one data row")
    header, data = rows[0], rows[1:]

    def kind_of(values: list[str]) -> str:
        if all(_TEMPORAL_RE.match(v.strip()) for v in values):
            return "temporal"
        try:
            for v in values:
                float(v)
            return "numeric"
        except ValueError:
            return "categorical"

    columns = []
    out_rows: list[list] = [[] for _ in data]
    for j, name in enumerate(header):
        values = [row[j].strip() for row in data]
        kind = kind_of(values)
        columns.append(Column(name.strip(), kind))
        for i, v in enumerate(values):
            if kind == "numeric":
                f = float(v)
                out_rows[i].append(int(f) if f.is_integer() else f)
            else:
                out_rows[i].append(v)
    return DataTable(tuple(columns), tuple(tuple(r) for r in out_rows))


def _load_manifest(manifest_path: Path, image: Path | None) -> SceneManifest:
    obj = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    manifest = SceneManifest.from_obj(obj)
    if image is not None:
        size = manifest.image_size
        try:
            from PIL import Image

            with Image.open(image) as im:
                size = im.size
        except Exception:
            pass
        manifest = SceneManifest(str(image), size, manifest.segments,
                                 manifest.detected_lines)
    return manifest


@click.group()
def main() -> None:
    """Coordinate data visualizations with scene imagery."""


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, path_type=Path),
              help="CSV data table.")
@click.option("--narration", "narration_path", required=True,
              type=click.Path(exists=True, path_type=Path), help="Narrative intent text file.")
@click.option("--image", "image_path", type=click.Path(path_type=Path),
              help="Backdrop raster (png or jpg).")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, path_type=Path), help="Scene segmentation manifest.")
@click.option("--mode", type=click.Choice(["llm", "rules", "replay"]), default="rules")
@click.option("--fixtures", type=click.Path(path_type=Path), help="Replay fixtures directory.")
@click.option("--top-k", type=int, default=5)
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--project-id", default=None)
def compose(data_path, narration_path, image_path, manifest_path, mode, fixtures,
            top_k, out_dir, project_id):
    """Run the full pipeline and persist the project directory."""
    table = infer_table(data_path)
    narration = Path(narration_path).read_text(encoding="utf-8")
    manifest = _load_manifest(manifest_path, image_path)
    config = EngineConfig.from_env(mode=mode, top_k=top_k, fixtures_dir=fixtures)
    adapter = None
    if mode == "replay":
        adapter = LLMAdapter(config, mode="replay", fixtures_dir=fixtures)
    elif mode == "llm":
        adapter = LLMAdapter(config, mode="live")
    project = pl.run_pipeline(table, narration, manifest, mode=mode, top_k=top_k,
                              config=config, adapter=adapter, project_id=project_id)
    path = pl.save_project(project, Path(out_dir))
    click.echo(f"project {project.project_id}: {project.outcome} -> {path}")
    if project.errors:
        for stage, message in project.errors.items():
            click.echo(f"  {stage}: {message}", err=True)
        sys.exit(1)


@main.group()
def report() -> None:
    """Inspect persisted projects."""


@report.command()
@click.option("--project", "project_id", required=True)
@click.option("--projects-root", required=True, type=click.Path(exists=True, path_type=Path))
def telemetry(project_id, projects_root):
    """Print per-stage timing and token usage."""
    project = pl.load_project(Path(projects_root), project_id)
    for r in project.telemetry:
        click.echo(f"{r.stage:20s} {r.elapsed_seconds:8.3f}s "
                   f"in={r.input_tokens} out={r.output_tokens}")
    totals = pl.telemetry_totals(project.telemetry)
    click.echo(f"{'total':20s} {totals['elapsed_seconds']:8.3f}s "
               f"in={totals['input_tokens']} out={totals['output_tokens']}")


@main.command()
@click.option("--project", "project_id", required=True)
@click.option("--projects-root", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--call", "calls", required=True, multiple=True,
              help='Tool call as JSON, e.g. {"name":"editSvgPosition","args":["mark-0",10,20]}.')
def refine(project_id, projects_root, calls):
    """Apply extra view calls to a composed project."""
    project = pl.load_project(Path(projects_root), project_id)
    try:
        parsed = [ToolCall.from_obj(json.loads(c)) for c in calls]
        pl.apply_refinement(project, parsed)
    except Exception as exc:
        raise click.ClickException(str(exc)) from exc
    pl.save_project(project, Path(projects_root))
    click.echo(dumps({"projectId": project.project_id,
                      "toolCalls": [c.to_obj() for c in project.tool_calls]}), nl=False)


@main.command("record-fixtures")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--narration", "narration_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, path_type=Path))
@click.option("--fixtures", required=True, type=click.Path(path_type=Path))
@click.option("--top-k", type=int, default=5)
def record_fixtures(data_path, narration_path, manifest_path, fixtures, top_k):
    """Write replay fixtures for these inputs from a rules-mode run."""
    from .fixtures import record_rules_fixtures

    table = infer_table(data_path)
    narration = Path(narration_path).read_text(encoding="utf-8")
    manifest = _load_manifest(manifest_path, None)
    written = record_rules_fixtures(table, narration, manifest, Path(fixtures), top_k)
    click.echo(f"wrote {len(written)} fixtures to {fixtures}")


@main.command()
@click.option("--projects-root", required=True, type=click.Path(path_type=Path))
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8173)
def serve(projects_root, host, port):
    """Serve the HTTP API."""
    import uvicorn

    from .api import create_app

    app = create_app(Path(projects_root), EngineConfig.from_env())
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
