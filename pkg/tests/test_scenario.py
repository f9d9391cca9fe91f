import json

import pytest

from conftest import REPO, SCENARIOS, make_scenario
from martlab.scenario import (
    ScenarioFormatError,
    load_scenario,
    parse_scenario,
    validate_scenario,
)


def base_doc():
    return {
        "version": 1,
        "alpha": {"kind": "explicit", "bits": "10"},
        "candidates": [{"name": "flat", "program": "(const 1)", "total": True}],
        "stages": 0,
        "eval_set": "prefix",
        "step_budget": 1000,
    }


def test_parse_minimal_document():
    sc = parse_scenario(base_doc())
    assert sc.stages == 0
    assert sc.candidates[0].name == "flat"
    assert sc.candidate(1) is not None
    assert sc.candidate(2) is None


def test_seeded_alpha_sources():
    doc = base_doc()
    doc["alpha"] = {"kind": "seeded", "seed": 42}
    sc = parse_scenario(doc)
    assert sc.alpha.prefix(8).bits == "10000101"
    doc["alpha"] = {"kind": "seeded", "seed": 42, "length": 3}
    assert parse_scenario(doc).alpha.limit == 3


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("version"),
        lambda d: d.update(version=99),
        lambda d: d.update(stages=-1),
        lambda d: d.update(eval_set="sometimes"),
        lambda d: d.update(step_budget=0),
        lambda d: d["alpha"].update(kind="psychic"),
        lambda d: d["alpha"].update(bits="012"),
        lambda d: d["candidates"].append({"name": "x", "program": "(frob)", "total": True}),
        lambda d: d["candidates"].append("not an object"),
    ],
)
def test_malformed_documents_are_format_errors(mutate):
    doc = base_doc()
    mutate(doc)
    with pytest.raises(ScenarioFormatError):
        parse_scenario(doc)


def test_duplicate_names_fail_validation():
    sc = make_scenario(
        candidates=(("same", "(const 1)", True), ("same", "(const 2)", True)),
        stages=1,
    )
    problems = validate_scenario(sc)
    assert any("duplicate" in p for p in problems)


def test_unfair_total_candidate_fails_validation():
    sc = make_scenario(
        candidates=(("crooked", "(if (= (len) 1) (if (= (bit 1) 0) 2 1) 1)", True),),
    )
    problems = validate_scenario(sc)
    assert problems and "crooked" in problems[0]


def test_partial_candidates_are_not_checked():
    sc = make_scenario(candidates=(("stuck", "(diverge)", False),))
    assert validate_scenario(sc) == []


def test_shipped_scenarios_validate():
    for path in sorted(SCENARIOS.glob("*.json")):
        sc = load_scenario(path)
        assert validate_scenario(sc) == [], path.name


def test_loading_missing_file_is_a_format_error(tmp_path):
    with pytest.raises(ScenarioFormatError):
        load_scenario(tmp_path / "nope.json")


def test_loading_invalid_json_is_a_format_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ScenarioFormatError):
        load_scenario(bad)


def test_fixture_unfair_scenario_parses_but_fails_validation():
    sc = load_scenario(REPO / "tests" / "fixtures" / "unfair_scenario.json")
    assert validate_scenario(sc)
