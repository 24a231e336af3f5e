"""Engine configuration, resolvable from environment variables."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..charts import PALETTE
from ..mapping import W_LAYOUT, W_SEMANTIC, W_SHAPE, W_SPATIAL
from ..scene import CIRCLE_CIRCULARITY, GROUP_DISTANCE


@dataclass
class EngineConfig:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    api_key: str = ""
    model: str = "gpt-4o"
    mode: str = "rules"                 # llm | rules | replay
    top_k: int = 5
    fixtures_dir: Optional[Path] = None
    max_concurrent_requests: int = 4
    weights: tuple[float, float, float, float] = (W_SHAPE, W_SEMANTIC, W_LAYOUT, W_SPATIAL)
    group_distance: float = GROUP_DISTANCE
    circle_circularity: float = CIRCLE_CIRCULARITY
    min_contrast: float = 3.0
    palette: tuple[str, ...] = PALETTE

    @classmethod
    def from_env(cls, **overrides) -> "EngineConfig":
        env = os.environ
        kwargs = {
            "endpoint": env.get("CHARTSCENE_ENDPOINT", cls.endpoint),
            "api_key": env.get("CHARTSCENE_API_KEY", ""),
            "model": env.get("CHARTSCENE_MODEL", cls.model),
        }
        if "CHARTSCENE_FIXTURES" in env:
            kwargs["fixtures_dir"] = Path(env["CHARTSCENE_FIXTURES"])
        kwargs.update(overrides)
        return cls(**kwargs)
