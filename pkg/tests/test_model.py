"""Wire-format and invariant checks for the core document types."""

import json

import pytest

from chartscene.model import (
    AnimationConfig,
    BoundingBox,
    Column,
    DataTable,
    DesignPlan,
    EvaluationResult,
    ImageDescription,
    NarrativeFeatures,
    ParseError,
    ToolCall,
    VisDescription,
    dumps,
    loads,
    normalize_angle,
    round_trip,
    validate,
)


def table():
    return DataTable(
        (Column("Response", "categorical"), Column("Share", "numeric")),
        (("Artificial tree", 46), ("Real tree", 26)),
    )


def test_dumps_is_canonical():
    text = dumps({"a": 1})
    assert text == '{\n  "a": 1\n}\n'
    assert dumps({"s": "café"}).count("café") == 1  # no ascii escaping


def test_table_round_trip():
    assert round_trip(table()) == table()


def test_table_rejects_unknown_keys():
    obj = table().to_obj()
    obj["extra"] = True
    with pytest.raises(ParseError):
        DataTable.from_obj(obj)


def test_table_duplicate_columns_flagged():
    bad = DataTable((Column("a", "numeric"), Column("a", "numeric")), ((1, 2),))
    report = validate(bad)
    assert not report.ok
    assert any("unique" in v.message for v in report.violations)


def test_features_wire_shape(examples_dir):
    obj = json.loads((examples_dir / "narrative_features.json").read_text())
    features = NarrativeFeatures.from_obj(obj)
    assert features.data_columns == ("Response", "Share of Respondents (%)")
    assert [a.kind for a in features.actions] == ["enter", "emphasize"]
    wire = features.to_obj()
    assert set(wire) == {"dataRelatedInformation", "entityObjects", "actions"}
    assert wire["actions"][0] == {"enter": features.actions[0].description}


def test_vis_description_wrapper(examples_dir):
    obj = json.loads((examples_dir / "vis_description.json").read_text())
    vis = VisDescription.from_obj(obj)
    assert vis.chart_type == "bar"
    assert vis.to_obj()["visDescription"]["spatialSubstrate"]["chartVariants"] == "stacked"


def test_image_description_alias_keys(examples_dir):
    # grainLevel may name the primitive shapeType/shapeTypes; canonical output
    # always uses geometricPrimitive
    single = ImageDescription.from_obj(
        json.loads((examples_dir / "image_description_single.json").read_text()))
    assert single.primitives == ("line",)
    wire = single.to_obj()["imageDescription"]["grainLevel"]
    assert wire["geometricPrimitive"] == "line"
    assert "distributionLayout" not in wire

    grouped = ImageDescription.from_obj(
        json.loads((examples_dir / "image_description_grouped.json").read_text()))
    assert grouped.distribution_layout == "linear"
    assert len(grouped.entries()) == 2


def test_image_description_grouped_requires_layout():
    doc = ImageDescription("groupedElements", ("plane",), ())
    assert not validate(doc).ok


def test_design_plan_semantic_alias(examples_dir):
    obj = json.loads((examples_dir / "design_plan.json").read_text())
    plan = DesignPlan.from_obj(obj)
    entry = plan.mapping_plan[0]
    assert entry.semantic_alignment.vis_semantic == "Age groups in merchandise sales"
    # canonical output uses visSemantic even when dataSemantic came in
    wire = plan.to_obj()["designPlan"]["mappingPlan"][0]
    assert "visSemantic" in wire["semanticAlignment"]
    assert "dataSemantic" not in wire["semanticAlignment"]


def test_design_plan_mapping_type_enforced(examples_dir):
    obj = json.loads((examples_dir / "design_plan.json").read_text())
    obj["designPlan"]["mappingPlan"][0]["mappingType"] = "many-to-one"
    plan = DesignPlan.from_obj(obj)
    assert not validate(plan).ok


def test_evaluation_method_wire(examples_dir):
    result = EvaluationResult.from_obj(
        json.loads((examples_dir / "evaluation_result.json").read_text()))
    assert result.inpaint_operation.method == "fill"
    wire = result.to_obj()
    assert wire["data_accuracy"]["inpaint_operation"]["method"] == "fill_anything.py"


def test_evaluation_fill_needs_prompt():
    obj = json.loads(dumps(EvaluationResult(3, "x", True, 3, "y")))
    obj["data_accuracy"]["inpaint_operation"] = {
        "need_inpaint": True,
        "point_coords": [{"x": 1, "y": 2}],
        "reusable_element": False,
        "method": "fill_anything.py",
    }
    result = EvaluationResult.from_obj(obj)
    assert any("text prompt" in v.message for v in validate(result).violations)


def test_evaluation_inpaint_requires_conflict():
    clean = EvaluationResult.from_obj(json.loads(
        dumps(EvaluationResult(5, "ok", False, 5, "ok"))))
    assert validate(clean).ok


def test_animation_direction_split(examples_dir):
    cfg = AnimationConfig.from_obj(
        json.loads((examples_dir / "animation_config.json").read_text()))
    assert cfg.direction == "bottom"
    assert dict(cfg.properties) == {"scaleY": (0, 1), "opacity": (0, 1)}
    wire = cfg.to_obj()
    # integral floats serialize as ints so timing round-trips byte-identically
    assert wire["timing"] == {"duration": 800, "delay": 100}


def test_animation_selector_context():
    cfg = AnimationConfig(".ghost", "entrance", (("opacity", (0, 1)),), 500, 0)
    assert not validate(cfg, selectors={"mark", "axis"}).ok
    ok = AnimationConfig(".mark", "entrance", (("opacity", (0, 1)),), 500, 0)
    assert validate(ok, selectors={"mark", "axis"}).ok


def test_tool_call_arity_checked():
    with pytest.raises(ParseError):
        ToolCall.from_obj({"name": "editSvgSize", "args": ["mark-0", 10]})
    with pytest.raises(ParseError):
        ToolCall.from_obj({"name": "paintItBlack", "args": []})


def test_tool_call_filter_condition():
    call = ToolCall.from_obj({"name": "filterData",
                              "args": [{"column": "Response", "op": "not-in",
                                        "value": ["No tree"]}]})
    assert call.as_call_string() == 'filterData(Response not-in ["No tree"])'
    with pytest.raises(ParseError):
        ToolCall.from_obj({"name": "filterData",
                           "args": [{"column": "Response", "op": "in", "value": "x"}]})


def test_tool_call_string_numbers():
    call = ToolCall("editSvgPosition", ("mark-0", 400.0, 459.5))
    assert call.as_call_string() == "editSvgPosition('mark-0', 400, 459.5)"


@pytest.mark.parametrize("deg,expected", [
    (0, 0), (90, 90), (91, -89), (180, 0), (-180, 0), (270, 90), (450, 90),
])
def test_normalize_angle(deg, expected):
    assert normalize_angle(deg) == pytest.approx(expected)


def test_bounding_box_anchors():
    b = BoundingBox(0, 0, 10, 20)
    assert b.anchor("center") == (5, 10)
    assert b.anchor("bottom-right") == (10, 20)
    with pytest.raises(ValueError):
        b.anchor("middle")


def test_loads_reports_path():
    with pytest.raises(ParseError):
        loads(DataTable, "{not json")
