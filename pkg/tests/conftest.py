import json
from pathlib import Path

import pytest

from chartscene.model import DataTable
from chartscene.scene import SceneManifest

FIXTURES = Path(__file__).parent / "fixtures"


def load_inputs(name: str):
    root = FIXTURES / name
    table = DataTable.from_obj(json.loads((root / "table.json").read_text(encoding="utf-8")))
    narration = (root / "narration.txt").read_text(encoding="utf-8")
    manifest = SceneManifest.from_obj(
        json.loads((root / "scene_manifest.json").read_text(encoding="utf-8")))
    return table, narration, manifest


@pytest.fixture(scope="session")
def christmas():
    return load_inputs("christmas")


@pytest.fixture(scope="session")
def ferris():
    return load_inputs("ferris")


@pytest.fixture(scope="session")
def examples_dir():
    return FIXTURES / "examples"


@pytest.fixture(scope="session")
def llm_fixtures_dir():
    return FIXTURES / "llm"
