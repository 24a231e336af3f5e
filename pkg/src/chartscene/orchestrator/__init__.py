"""Pipeline orchestration: configuration, LLM adapter, project persistence,
HTTP API, and the command line interface."""

from .config import EngineConfig
from .llm import LLMAdapter, ReplayError
from .pipeline import (
    PipelineError,
    Project,
    apply_refinement,
    load_project,
    run_pipeline,
    save_project,
    select_and_refine,
    telemetry_totals,
)

__all__ = [
    "EngineConfig",
    "LLMAdapter",
    "ReplayError",
    "Project",
    "PipelineError",
    "run_pipeline",
    "select_and_refine",
    "apply_refinement",
    "save_project",
    "load_project",
    "telemetry_totals",
]
