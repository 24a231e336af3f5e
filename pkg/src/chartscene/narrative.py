"""Narrative feature extraction: rules mode and LLM mode with repair."""

from __future__ import annotations

import json
import re
from typing import Any, Optional

from .model import (
    DataTable,
    NarrativeAction,
    NarrativeFeatures,
    ParseError,
    validate,
)

_EMPHASIS_WORDS = ("highlight", "emphasize", "focus", "key")
_SUPERLATIVE_RE = re.compile(r"\b(\w+est|most|least|largest|smallest|highest|lowest|best|worst)\b",
                             re.IGNORECASE)
_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")
_NUMERAL_RE = re.compile(r"\d")


class ExtractionError(RuntimeError):
    def __init__(self, message: str, raw_response: Optional[str] = None) -> None:
        super().__init__(message)
        self.raw_response = raw_response


class NormalizationError(ValueError):
    pass


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_RE.split(text.strip()) if s.strip()]


def _mentions_column(sentence: str, table: DataTable) -> bool:
    low = sentence.lower()
    return any(c.name.lower() in low for c in table.columns)


def _noun_phrases(text: str) -> list[str]:
    """Capitalized-token heuristic: maximal runs of capitalized words,
    excluding sentence-initial single words that are common function words."""
    out: list[str] = []
    for sentence in split_sentences(text):
        words = sentence.split()
        run: list[str] = []
        for i, w in enumerate(words):
            bare = w.strip(".,!?;:()\"'")
            if bare and bare[0].isupper() and not bare.isupper() or (bare.isupper() and len(bare) > 1):
                if i == 0 and len(bare) <= 3:
                    continue
                run.append(bare)
            else:
                if run and not (len(run) == 1 and run == [words[0].strip(".,!?;:()\"'")]):
                    out.append(" ".join(run))
                run = []
        if run and not (len(run) == 1 and run == [words[0].strip(".,!?;:()\"'")]):
            out.append(" ".join(run))
    seen = []
    for p in out:
        if p not in seen:
            seen.append(p)
    return seen


def extract_features_rules(narration: str, table: DataTable) -> NarrativeFeatures:
    """Deterministic extraction; same inputs always give the same output."""
    sentences = split_sentences(narration)
    facts = [s for s in sentences if _NUMERAL_RE.search(s) or _mentions_column(s, table)]
    entities = _noun_phrases(narration)
    actions = [NarrativeAction("enter", "Introduce the chart elements in sequence.")]
    for s in sentences:
        low = s.lower()
        if any(w in low for w in _EMPHASIS_WORDS) or _SUPERLATIVE_RE.search(s):
            actions.append(NarrativeAction("emphasize", s))
    columns = tuple(c.name for c in table.columns
                    if narration and c.name.lower() in narration.lower()) or \
        tuple(c.name for c in table.columns)
    return NarrativeFeatures(
        data_facts=tuple(facts),
        data_columns=columns if narration.strip() else tuple(c.name for c in table.columns),
        data_transformations=(),
        entity_objects=tuple(entities) if narration.strip() else (),
        actions=tuple(actions),
    )


def feature_prompt(narration: str, table: DataTable) -> str:
    """Render the extraction prompt; placeholders are the narrative intent
    and the serialized data table."""
    data = json.dumps(table.to_obj(), ensure_ascii=False)
    return (
        "You are an expert in data analysis and data-driven storytelling. "
        "You need to extract data-related information, entity objects, and actions "
        "to guide animations based on the narrative intent "
        f"{{{narration}}} and the corresponding data table {{{data}}}.\n"
        "# Data-related information\n"
        "- Data fact: Extract all key data points and insights directly from the narration, "
        "avoiding redundancy.\n"
        "- Metadata: Provide structured metadata to support visualization and data "
        "transformation, including relevant data columns and data transformation methods.\n"
        "# Entity objects: Identify real-world objects or concepts that have explicit "
        "semantic meaning and could be represented visually.\n"
        "# Actions\n"
        "- Enter: Describe how elements should appear in the visualization.\n"
        "- Emphasize: Highlight key information using animation techniques.\n"
        'Output JSON: {"dataRelatedInformation": {"dataFact": [], "metadata": '
        '{"dataColumns": [], "dataTransformation": []}}, "entityObjects": [], '
        '"actions": [{"enter": ""}, {"emphasize": ""}]}'
    )


def extract_features(narration: str, table: DataTable, mode: str = "rules",
                     llm: Any = None) -> NarrativeFeatures:
    """Extract narrative features; ``mode`` is ``llm`` or ``rules``."""
    if mode == "rules":
        features = extract_features_rules(narration, table)
    elif mode == "llm":
        if llm is None:
            raise ExtractionError("llm mode requires an adapter")
        prompt = feature_prompt(narration, table)
        raw = llm.complete("feature-extraction", prompt)
        try:
            features = normalize_features(json.loads(raw), table=table)[0]
        except (json.JSONDecodeError, NormalizationError, ParseError):
            retry = llm.complete(
                "feature-extraction",
                prompt + "\nYour previous answer was not valid JSON for the schema. "
                         "Return only the JSON object.")
            try:
                features = normalize_features(json.loads(retry), table=table)[0]
            except (json.JSONDecodeError, NormalizationError, ParseError) as exc:
                raise ExtractionError(f"LLM output failed validation after repair: {exc}",
                                      raw_response=retry) from exc
    else:
        raise ValueError(f"unknown extraction mode {mode!r}")
    report = validate(features, table=table)
    if not report.ok:
        raise ExtractionError(f"extracted features invalid: {report.violations}")
    return features


def normalize_features(raw: Any, table: Optional[DataTable] = None
                       ) -> tuple[NarrativeFeatures, list[str]]:
    """Coerce a loosely structured record into the strict schema.

    Returns the features plus a list of warnings for dropped extras.
    """
    if not isinstance(raw, dict):
        raise NormalizationError("expected a JSON object")
    warnings: list[str] = []
    obj = dict(raw)

    info = obj.pop("dataRelatedInformation", None)
    if info is None:
        # near-miss top-level spellings
        info = {}
        for key in ("dataFacts", "dataFact"):
            if key in obj:
                info["dataFact"] = obj.pop(key)
    if not isinstance(info, dict):
        raise NormalizationError("dataRelatedInformation must be an object")
    info = dict(info)
    facts = info.pop("dataFact", info.pop("dataFacts", []))
    if isinstance(facts, str):
        facts = [facts]
    meta = info.pop("metadata", {})
    if not isinstance(meta, dict):
        meta = {}
    meta = dict(meta)
    columns = meta.pop("dataColumns", meta.pop("columns", []))
    if isinstance(columns, str):
        columns = [columns]
    transforms = meta.pop("dataTransformation", meta.pop("dataTransformations", []))
    if isinstance(transforms, str):
        transforms = [transforms]
    for extra in list(info) + list(meta):
        warnings.append(f"dropped unknown field {extra!r}")

    entities = obj.pop("entityObjects", obj.pop("entities", []))
    if isinstance(entities, str):
        entities = [entities]

    raw_actions = obj.pop("actions", [])
    if raw_actions is None:
        raw_actions = []
    actions: list[dict] = []
    for a in raw_actions:
        if isinstance(a, str):
            actions.append({"enter": a})
        elif isinstance(a, dict):
            if set(a) <= {"kind", "description"}:
                kind = a.get("kind", "enter")
                actions.append({kind: a.get("description", "")})
            else:
                for k, v in a.items():
                    if k in ("enter", "emphasize"):
                        actions.append({k: v if isinstance(v, str) else str(v)})
                    else:
                        warnings.append(f"dropped unknown action kind {k!r}")
        else:
            warnings.append(f"dropped malformed action {a!r}")
    for extra in obj:
        warnings.append(f"dropped unknown field {extra!r}")

    if table is not None:
        known = {c.name for c in table.columns}
        kept = []
        for c in columns:
            if c in known:
                kept.append(c)
            else:
                warnings.append(f"dropped unknown data column {c!r}")
        columns = kept

    if not actions and not facts and not entities:
        raise NormalizationError("record has no recognizable feature sections")

    features = NarrativeFeatures.from_obj({
        "dataRelatedInformation": {
            "dataFact": [str(f) for f in facts],
            "metadata": {
                "dataColumns": [str(c) for c in columns],
                "dataTransformation": [str(t) for t in transforms],
            },
        },
        "entityObjects": [str(e) for e in entities],
        "actions": actions,
    })
    return features, warnings
