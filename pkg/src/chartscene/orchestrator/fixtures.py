"""Deterministic fixture generation for replay mode.

Fixtures mirror the exact prompts the pipeline issues in llm mode; the
responses are the rules-mode outputs wrapped in chat-completion bodies.
Regenerate with ``python3 -m chartscene.orchestrator.fixtures`` via the CLI or
the committed generator script.
"""

from __future__ import annotations

import json
from pathlib import Path

from .. import charts, evaluator, mapping, narrative, scene
from ..model import DataTable, dumps
from ..scene import SceneManifest
from .llm import fixture_key, make_response_body
from .pipeline import run_pipeline


def write_fixture(fixtures_dir: Path, stage: str, prompt: str, content: str,
                  model: str = "fixture") -> Path:
    """Store one prompt/response pair under its content-hash key."""
    fixtures_dir = Path(fixtures_dir)
    fixtures_dir.mkdir(parents=True, exist_ok=True)
    record = {
        "request": {"model": model,
                    "messages": [{"role": "user", "content": prompt}]},
        "response": make_response_body(content, model=model, prompt=prompt),
    }
    path = fixtures_dir / f"{fixture_key(stage, prompt)}.json"
    path.write_text(json.dumps(record, indent=2, ensure_ascii=False) + "\n",
                    encoding="utf-8")
    return path


def record_rules_fixtures(table: DataTable, narration: str, manifest: SceneManifest,
                          fixtures_dir: Path, top_k: int = 5) -> list[Path]:
    """Record every fixture a replay run of these inputs will request."""
    written: list[Path] = []
    project = run_pipeline(table, narration, manifest, mode="rules", top_k=top_k)
    if project.features is None:
        raise RuntimeError(f"rules run failed: {project.errors}")

    prompt = narrative.feature_prompt(narration, table)
    written.append(write_fixture(fixtures_dir, "feature-extraction", prompt,
                                 dumps(project.features)))

    frame = mapping._scene_frame(project.elements) if project.elements else None
    for element, image_desc in zip(project.elements, project.image_descs):
        for doc, vis in zip(project.chart_docs, project.vis_descs):
            prompt = mapping.mapping_prompt(image_desc, vis, doc.svg)
            pair = mapping.score_pair(element, doc, vis, project.features, frame)
            content = "None" if pair is None else dumps(pair.plan)
            written.append(write_fixture(fixtures_dir, "design-mapping",
                                         prompt, content))

    if project.evaluation is not None:
        prompt = evaluator.evaluation_prompt(project.adjusted_table or table)
        written.append(write_fixture(fixtures_dir, "design-evaluation", prompt,
                                     dumps(project.evaluation)))
    return written
