"""Chat-completion adapter with record/replay fixtures.

Fixtures are keyed by a content hash of (stage, prompt) so any prompt drift
surfaces as a missing fixture instead of a silently stale response. Replay
mode never touches the network.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from pathlib import Path
from typing import Any, Callable, Optional

from .config import EngineConfig


class ReplayError(RuntimeError):
    pass


class AdapterError(RuntimeError):
    pass


def fixture_key(stage: str, prompt: str) -> str:
    return hashlib.sha256(f"{stage}\n{prompt}".encode("utf-8")).hexdigest()


def make_response_body(content: str, model: str = "fixture",
                       prompt: str = "") -> dict:
    """A chat-completion response body wrapping *content*."""
    return {
        "id": "chatcmpl-" + hashlib.sha256(content.encode()).hexdigest()[:12],
        "object": "chat.completion",
        "model": model,
        "choices": [{"index": 0, "finish_reason": "stop",
                     "message": {"role": "assistant", "content": content}}],
        "usage": {
            "prompt_tokens": estimate_tokens(prompt),
            "completion_tokens": estimate_tokens(content),
        },
    }


def estimate_tokens(text: str) -> int:
    # ~4 characters per token; deterministic and dependency-free
    return max(1, len(text) // 4) if text else 0


class LLMAdapter:
    """Completes prompts live, recording, or replaying stored fixtures."""

    def __init__(self, config: Optional[EngineConfig] = None, mode: str = "replay",
                 fixtures_dir: Optional[Path] = None,
                 transport: Optional[Callable[[dict], dict]] = None) -> None:
        self.config = config or EngineConfig()
        self.mode = mode
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir else self.config.fixtures_dir
        self._transport = transport
        self._semaphore = threading.Semaphore(self.config.max_concurrent_requests)
        self.usage: list[dict] = []  # per call: stage, elapsed, input/output tokens

    def complete(self, stage: str, prompt: str) -> str:
        start = time.perf_counter()
        if self.mode == "replay":
            body = self._replay(stage, prompt)
        elif self.mode in ("live", "record"):
            body = self._live(stage, prompt)
            if self.mode == "record":
                self._store(stage, prompt, body)
        else:
            raise AdapterError(f"unknown adapter mode {self.mode!r}")
        elapsed = time.perf_counter() - start
        content = self._content(body)
        usage = body.get("usage", {})
        self.usage.append({
            "stage": stage,
            "elapsed_seconds": elapsed,
            "input_tokens": int(usage.get("prompt_tokens", estimate_tokens(prompt))),
            "output_tokens": int(usage.get("completion_tokens", estimate_tokens(content))),
        })
        return content

    @staticmethod
    def _content(body: dict) -> str:
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise AdapterError(f"malformed completion body: {exc}") from exc

    def _fixture_path(self, stage: str, prompt: str) -> Path:
        if self.fixtures_dir is None:
            raise ReplayError("no fixtures directory configured")
        return Path(self.fixtures_dir) / f"{fixture_key(stage, prompt)}.json"

    def _replay(self, stage: str, prompt: str) -> dict:
        path = self._fixture_path(stage, prompt)
        if not path.exists():
            raise ReplayError(
                f"missing fixture for stage {stage!r} (key {fixture_key(stage, prompt)}); "
                "the prompt may have drifted from the recorded one")
        record = json.loads(path.read_text(encoding="utf-8"))
        return record["response"]

    def _store(self, stage: str, prompt: str, body: dict) -> None:
        path = self._fixture_path(stage, prompt)
        path.parent.mkdir(parents=True, exist_ok=True)
        record = {
            "request": self._request_body(prompt),
            "response": body,
        }
        path.write_text(json.dumps(record, indent=2, ensure_ascii=False) + "\n",
                        encoding="utf-8")

    def _request_body(self, prompt: str) -> dict:
        return {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
        }

    def _live(self, stage: str, prompt: str) -> dict:
        request = self._request_body(prompt)
        with self._semaphore:
            if self._transport is not None:
                return self._transport(request)
            import requests

            headers = {"Content-Type": "application/json"}
            if self.config.api_key:
                headers["Authorization"] = f"Bearer {self.config.api_key}"
            resp = requests.post(self.config.endpoint, json=request,
                                 headers=headers, timeout=120)
            resp.raise_for_status()
            return resp.json()
