"""Pipeline orchestration, persistence, adapter modes, HTTP API, and CLI."""

import filecmp
import json
from pathlib import Path

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from chartscene.model import ToolCall, dumps
from chartscene.orchestrator import (
    EngineConfig,
    LLMAdapter,
    ReplayError,
    apply_refinement,
    load_project,
    run_pipeline,
    save_project,
    select_and_refine,
    telemetry_totals,
)
from chartscene.orchestrator.api import create_app
from chartscene.orchestrator.cli import infer_table, main
from chartscene.orchestrator.llm import estimate_tokens, fixture_key, make_response_body
from chartscene.orchestrator.pipeline import STAGES
from chartscene.scene import SceneManifest, Segment


# ---------------------------------------------------------------------------
# pipeline


def test_rules_pipeline_composes(christmas):
    table, narration, manifest = christmas
    project = run_pipeline(table, narration, manifest, mode="rules")
    assert project.outcome == "composed"
    assert project.completed_stages == list(STAGES)
    assert project.errors == {}
    assert project.selection == 0
    assert project.composition is not None
    assert project.evaluation is not None
    assert len(project.telemetry) == len(STAGES)


def test_telemetry_identity(christmas):
    table, narration, manifest = christmas
    project = run_pipeline(table, narration, manifest, mode="rules")
    totals = telemetry_totals(project.telemetry)
    assert totals["elapsed_seconds"] == pytest.approx(
        sum(r.elapsed_seconds for r in project.telemetry))
    assert totals["input_tokens"] == sum(r.input_tokens for r in project.telemetry)
    assert totals["output_tokens"] == sum(r.output_tokens for r in project.telemetry)


def test_replay_pipeline_matches_rules(christmas, llm_fixtures_dir):
    table, narration, manifest = christmas
    rules = run_pipeline(table, narration, manifest, mode="rules")
    adapter = LLMAdapter(mode="replay", fixtures_dir=llm_fixtures_dir)
    replay = run_pipeline(table, narration, manifest, mode="replay", adapter=adapter)
    assert replay.outcome == "composed"
    assert [(p.chart_id, p.element_id) for p in replay.plans] == \
        [(p.chart_id, p.element_id) for p in rules.plans]
    assert replay.evaluation.accuracy_score == rules.evaluation.accuracy_score
    # token usage is attributed only to the stages that consulted the model
    by_stage = {r.stage: r for r in replay.telemetry}
    assert by_stage["feature-extraction"].input_tokens > 0
    assert by_stage["design-mapping"].input_tokens > 0
    assert by_stage["chart-proposal"].input_tokens == 0


def test_replay_without_fixtures_fails(christmas, tmp_path):
    table, narration, manifest = christmas
    adapter = LLMAdapter(mode="replay", fixtures_dir=tmp_path)
    project = run_pipeline(table, narration, manifest, mode="replay", adapter=adapter)
    assert project.outcome == "failed"
    assert "feature-extraction" in project.errors
    assert "ReplayError" in project.errors["feature-extraction"]


def test_no_relevant_scene_element(christmas):
    table, narration, _ = christmas
    # small and unrelated to the narration, so perception drops it
    manifest = SceneManifest("x.png", (1200, 800), (
        Segment("s", ((0, 0), (40, 0), (40, 30), (0, 30)), "office desk"),))
    project = run_pipeline(table, narration, manifest, mode="rules")
    assert project.outcome == "no design mapping"
    assert project.composition is None


def test_save_load_round_trip_is_byte_identical(christmas, tmp_path):
    table, narration, manifest = christmas
    project = run_pipeline(table, narration, manifest, mode="rules", project_id="p1")
    first = save_project(project, tmp_path / "a")
    loaded = load_project(tmp_path / "a", "p1")
    second = save_project(loaded, tmp_path / "b")
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    mismatch = [n for n in names
                if not filecmp.cmp(first / n, second / n, shallow=False)]
    assert mismatch == []


def test_select_and_refine_switches_plan(christmas):
    table, narration, manifest = christmas
    project = run_pipeline(table, narration, manifest, mode="rules")
    assert len(project.plans) >= 2
    target = project.plans[1].chart_id
    select_and_refine(project, 1)
    assert project.selection == 1
    assert project.composition.chart_id == target
    assert project.outcome == "composed"


def test_apply_refinement_moves_mark(christmas):
    table, narration, manifest = christmas
    project = run_pipeline(table, narration, manifest, mode="rules")
    before_calls = len(project.tool_calls)
    bb = project.doc_state.bbox_of("mark-0")
    call = ToolCall("editSvgPosition", ("mark-0", bb.xmin + 25.0, bb.ymin - 10.0))
    apply_refinement(project, [call])
    after = project.doc_state.bbox_of("mark-0")
    assert after.xmin == pytest.approx(bb.xmin + 25.0)
    assert after.ymin == pytest.approx(bb.ymin - 10.0)
    assert len(project.tool_calls) == before_calls + 1
    indices = [e["index"] for e in project.execution_log]
    assert indices == sorted(indices)


# ---------------------------------------------------------------------------
# adapter


def test_fixture_key_is_content_hash():
    assert fixture_key("s", "p") == fixture_key("s", "p")
    assert fixture_key("s", "p") != fixture_key("s", "q")
    assert fixture_key("s", "p") != fixture_key("t", "p")
    assert len(fixture_key("s", "p")) == 64


def test_record_then_replay(tmp_path):
    def transport(request):
        return make_response_body("hello", prompt=request["messages"][0]["content"])

    recorder = LLMAdapter(mode="record", fixtures_dir=tmp_path, transport=transport)
    assert recorder.complete("stage-x", "some prompt") == "hello"
    stored = list(tmp_path.glob("*.json"))
    assert len(stored) == 1
    assert stored[0].stem == fixture_key("stage-x", "some prompt")

    replayer = LLMAdapter(mode="replay", fixtures_dir=tmp_path)
    assert replayer.complete("stage-x", "some prompt") == "hello"
    assert replayer.usage[0]["stage"] == "stage-x"
    assert replayer.usage[0]["output_tokens"] == estimate_tokens("hello")
    with pytest.raises(ReplayError):
        replayer.complete("stage-x", "a different prompt")


def test_estimate_tokens():
    assert estimate_tokens("") == 0
    assert estimate_tokens("abc") == 1
    assert estimate_tokens("a" * 40) == 10


def test_config_from_env(monkeypatch, tmp_path):
    monkeypatch.setenv("CHARTSCENE_ENDPOINT", "http://localhost:9/v1")
    monkeypatch.setenv("CHARTSCENE_MODEL", "test-model")
    monkeypatch.setenv("CHARTSCENE_FIXTURES", str(tmp_path))
    config = EngineConfig.from_env(top_k=3)
    assert config.endpoint == "http://localhost:9/v1"
    assert config.model == "test-model"
    assert config.fixtures_dir == tmp_path
    assert config.top_k == 3


# ---------------------------------------------------------------------------
# HTTP API


def project_body(inputs, **extra):
    table, narration, manifest = inputs
    body = {"table": table.to_obj(), "narration": narration,
            "manifest": manifest.to_obj(), "mode": "rules"}
    body.update(extra)
    return body


def test_api_create_and_fetch(christmas, tmp_path):
    client = TestClient(create_app(tmp_path))
    created = client.post("/projects", json=project_body(
        christmas, projectId="api-1", requestId="r1"))
    assert created.status_code == 200
    summary = created.json()
    assert summary["projectId"] == "api-1"
    assert summary["outcome"] == "composed"
    assert "markBounds" in summary
    # repeating the request id returns the cached reply, not a second run
    again = client.post("/projects", json=project_body(
        christmas, projectId="api-1", requestId="r1"))
    assert again.json() == summary

    fetched = client.get("/projects/api-1").json()
    assert fetched["projectId"] == "api-1"
    alts = client.get("/projects/api-1/alternatives").json()["plans"]
    totals = [p["scores"]["total"] for p in alts]
    assert totals == sorted(totals, reverse=True)
    assert client.get("/projects/api-1/composition.svg").status_code == 200
    assert client.get("/projects/api-1/preview.html").status_code == 200
    assert client.get("/projects/api-1/evaluation").status_code == 200
    telemetry = client.get("/projects/api-1/telemetry").json()
    assert telemetry["totals"]["input_tokens"] == sum(
        r["input_tokens"] for r in telemetry["records"])


def test_api_refine_applies_delta(christmas, tmp_path):
    client = TestClient(create_app(tmp_path))
    summary = client.post("/projects", json=project_body(
        christmas, projectId="api-2")).json()
    before = summary["markBounds"]["mark-0"]
    call = {"name": "editSvgPosition",
            "args": ["mark-0", before["xmin"] + 10.0, before["ymin"] + 5.0]}
    refined = client.post("/projects/api-2/refine",
                          json={"calls": [call], "requestId": "rr"})
    assert refined.status_code == 200
    after = refined.json()["markBounds"]["mark-0"]
    assert after["xmin"] == pytest.approx(before["xmin"] + 10.0)
    assert after["ymin"] == pytest.approx(before["ymin"] + 5.0)
    # idempotent repeat leaves the document untouched
    repeat = client.post("/projects/api-2/refine",
                         json={"calls": [call], "requestId": "rr"})
    assert repeat.json()["markBounds"]["mark-0"] == after


def test_api_select_and_errors(christmas, tmp_path):
    client = TestClient(create_app(tmp_path))
    client.post("/projects", json=project_body(christmas, projectId="api-3"))
    ok = client.post("/projects/api-3/select", json={"planIndex": 1})
    assert ok.status_code == 200
    assert ok.json()["selection"] == 1
    assert client.post("/projects/api-3/select", json={"planIndex": 99}).status_code == 400
    assert client.get("/projects/missing").status_code == 404
    bad = client.post("/projects", json={"narration": "x"})
    assert bad.status_code == 400


def test_api_state_survives_restart(christmas, tmp_path):
    first = TestClient(create_app(tmp_path))
    first.post("/projects", json=project_body(christmas, projectId="api-4"))
    first.post("/projects/api-4/select", json={"planIndex": 1})
    fresh = TestClient(create_app(tmp_path))
    summary = fresh.get("/projects/api-4").json()
    assert summary["selection"] == 1
    assert summary["outcome"] == "composed"
    assert fresh.get("/projects/api-4/composition.svg").status_code == 200


# ---------------------------------------------------------------------------
# CLI


def write_inputs(tmp_path, inputs):
    table, narration, manifest = inputs
    csv_path = tmp_path / "data.csv"
    lines = [",".join(c.name for c in table.columns)]
    lines += [",".join(str(v) for v in row) for row in table.rows]
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    narration_path = tmp_path / "narration.txt"
    narration_path.write_text(narration, encoding="utf-8")
    manifest_path = tmp_path / "manifest.json"
    manifest_path.write_text(dumps(manifest), encoding="utf-8")
    return csv_path, narration_path, manifest_path


def test_infer_table_kinds(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("name,year,score\nalpha,2021,1.5\nbeta,2022,2\n", encoding="utf-8")
    table = infer_table(p)
    assert [c.kind for c in table.columns] == ["categorical", "temporal", "numeric"]
    assert table.rows[1] == ("beta", "2022", 2)


def test_cli_compose_and_reports(christmas, tmp_path):
    csv_path, narration_path, manifest_path = write_inputs(tmp_path, christmas)
    out = tmp_path / "projects"
    runner = CliRunner()
    result = runner.invoke(main, [
        "compose", "--data", str(csv_path), "--narration", str(narration_path),
        "--manifest", str(manifest_path), "--mode", "rules",
        "--out", str(out), "--project-id", "cli-1"])
    assert result.exit_code == 0, result.output
    assert "composed" in result.output
    assert (out / "cli-1" / "composition.svg").exists()

    report = runner.invoke(main, [
        "report", "telemetry", "--project", "cli-1", "--projects-root", str(out)])
    assert report.exit_code == 0, report.output
    assert "total" in report.output

    refine = runner.invoke(main, [
        "refine", "--project", "cli-1", "--projects-root", str(out),
        "--call", json.dumps({"name": "editSvgPosition", "args": ["mark-0", 30, 40]})])
    assert refine.exit_code == 0, refine.output
    assert "editSvgPosition" in refine.output


def test_cli_replay_round_trip(christmas, tmp_path):
    csv_path, narration_path, manifest_path = write_inputs(tmp_path, christmas)
    fixtures = tmp_path / "fixtures"
    runner = CliRunner()
    recorded = runner.invoke(main, [
        "record-fixtures", "--data", str(csv_path), "--narration", str(narration_path),
        "--manifest", str(manifest_path), "--fixtures", str(fixtures)])
    assert recorded.exit_code == 0, recorded.output
    assert list(fixtures.glob("*.json"))
    out = tmp_path / "projects"
    result = runner.invoke(main, [
        "compose", "--data", str(csv_path), "--narration", str(narration_path),
        "--manifest", str(manifest_path), "--mode", "replay",
        "--fixtures", str(fixtures), "--out", str(out), "--project-id", "cli-2"])
    assert result.exit_code == 0, result.output
    assert "composed" in result.output
