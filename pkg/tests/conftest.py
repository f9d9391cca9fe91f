from pathlib import Path

import pytest

from martlab.scenario import parse_scenario

REPO = Path(__file__).resolve().parent.parent
SCENARIOS = REPO / "scenarios"


def make_scenario(
    alpha="10",
    candidates=(("flat", "(const 1)", True),),
    stages=0,
    eval_set="prefix",
    step_budget=10000,
):
    return parse_scenario(
        {
            "version": 1,
            "alpha": {"kind": "explicit", "bits": alpha},
            "candidates": [
                {"name": n, "program": p, "total": t} for n, p, t in candidates
            ],
            "stages": stages,
            "eval_set": eval_set,
            "step_budget": step_budget,
        }
    )


@pytest.fixture
def stage0_scenario():
    return make_scenario()


@pytest.fixture
def s3_scenario():
    from martlab.scenario import load_scenario

    return load_scenario(SCENARIOS / "acceptance_s3.json")


@pytest.fixture
def tiny_scenario():
    from martlab.scenario import load_scenario

    return load_scenario(SCENARIOS / "tiny_fairness.json")
