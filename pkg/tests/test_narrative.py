"""Feature extraction from narration, rules mode and llm repair path."""

import json

import pytest

from chartscene.model import Column, DataTable, dumps, validate
from chartscene.narrative import (
    ExtractionError,
    extract_features,
    extract_features_rules,
    feature_prompt,
    normalize_features,
    split_sentences,
)


def test_split_sentences_basic():
    parts = split_sentences("First fact. Second one! Third?")
    assert len(parts) == 3
    assert parts[0].startswith("First")


def test_rules_extraction_christmas(christmas):
    table, narration, _ = christmas
    features = extract_features_rules(narration, table)
    assert validate(features).ok
    assert any("46%" in f for f in features.data_facts)
    kinds = [a.kind for a in features.actions]
    assert kinds[0] == "enter"
    assert "emphasize" in kinds
    emphasize = next(a for a in features.actions if a.kind == "emphasize")
    assert "46%" in emphasize.description


def test_rules_extraction_empty(christmas):
    table, _, _ = christmas
    features = extract_features_rules("", table)
    assert features.data_facts == ()
    assert features.entity_objects == ()
    assert [a.kind for a in features.actions] == ["enter"]


def test_rules_extraction_highlight_keyword(christmas):
    table, _, _ = christmas
    features = extract_features_rules("Please highlight the 46% share.", table)
    emphasize = [a for a in features.actions if a.kind == "emphasize"]
    assert len(emphasize) == 1
    assert "46%" in emphasize[0].description


def test_rules_extraction_deterministic(christmas):
    table, narration, _ = christmas
    assert extract_features_rules(narration, table) == extract_features_rules(narration, table)


def test_feature_prompt_mentions_inputs(christmas):
    table, narration, _ = christmas
    prompt = feature_prompt(narration, table)
    assert narration in prompt
    assert "Response" in prompt


def test_normalize_features_aliases(christmas):
    table, _, _ = christmas
    features, warnings = normalize_features({
        "dataRelatedInformation": {
            "dataFact": "single fact as a bare string",
            "metadata": {"dataColumns": ["Response"], "dataTransformation": []},
        },
        "entityObjects": ["Tree"],
        "actions": [{"enter": "go"}, {"exit": "fade away"}],
        "mood": "festive",
    }, table=table)
    assert features.data_facts == ("single fact as a bare string",)
    assert [a.kind for a in features.actions] == ["enter"]
    assert any("mood" in w for w in warnings)
    assert any("exit" in w for w in warnings)


class StubLLM:
    def __init__(self, replies):
        self.replies = list(replies)
        self.calls = 0

    def complete(self, stage, prompt):
        self.calls += 1
        return self.replies.pop(0)


def test_llm_mode_repair_retry(christmas):
    table, narration, _ = christmas
    good = dumps(extract_features_rules(narration, table))
    llm = StubLLM(["{broken", good])
    features = extract_features(narration, table, mode="llm", llm=llm)
    assert llm.calls == 2
    assert any("46%" in f for f in features.data_facts)


def test_llm_mode_gives_up_after_retry(christmas):
    table, narration, _ = christmas
    llm = StubLLM(["nope", "still nope"])
    with pytest.raises(ExtractionError):
        extract_features(narration, table, mode="llm", llm=llm)
