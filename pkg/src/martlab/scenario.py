"""Scenario files: the inputs a construction run is determined by.

A scenario is a JSON document with a versioned header::

    {
      "version": 1,
      "alpha": {"kind": "explicit", "bits": "0110..."}
               | {"kind": "seeded", "seed": 42, "length": 4096},
      "candidates": [
        {"name": "c1", "program": "(const 1)", "total": true},
        ...
      ],
      "stages": 3,
      "eval_set": "prefix",          // or "full"
      "step_budget": 100000
    }

Candidate order matters: stage s >= 1 may mix candidate number s, and the
stage-s totality segment encodes the declared flag of candidate s + 1 (false
when there is no such candidate).  "seeded" alpha sources use the documented
SplitMix64 recurrence; "length" is optional and bounds the queryable range.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import dsl
from .bits import BitSource, BitString, ExplicitBitSource, SeededBitSource

__all__ = [
    "Candidate",
    "Scenario",
    "ScenarioFormatError",
    "ScenarioError",
    "load_scenario",
    "parse_scenario",
    "validate_scenario",
    "VALIDATION_DEPTH_CAP",
]

SCENARIO_VERSION = 1
EVAL_SET_MODES = ("full", "prefix")

# Full-depth candidate validation is exponential in the run's longest string,
# so the up-front check is capped; any failure on a string the run actually
# evaluates still aborts the run with the same diagnosis.
VALIDATION_DEPTH_CAP = 8


class ScenarioFormatError(Exception):
    """The scenario file cannot be read or does not match the schema."""


class ScenarioError(Exception):
    """The scenario is well-formed but its contents fail validation."""


@dataclass(frozen=True)
class Candidate:
    name: str
    program_text: str
    program: dsl.Program
    declared_total: bool


@dataclass(frozen=True)
class Scenario:
    alpha: BitSource
    candidates: tuple[Candidate, ...]
    stages: int
    eval_set_mode: str
    step_budget: int

    def candidate(self, number: int) -> Candidate | None:
        """Candidate by 1-based number, None when absent."""
        if 1 <= number <= len(self.candidates):
            return self.candidates[number - 1]
        return None


def _require(mapping: dict, key: str, kind, where: str):
    if key not in mapping:
        raise ScenarioFormatError(f"{where}: missing field {key!r}")
    value = mapping[key]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is int:
        raise ScenarioFormatError(f"{where}: field {key!r} must be {kind.__name__}")
    return value


def parse_scenario(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioFormatError("scenario document must be a JSON object")
    version = _require(data, "version", int, "scenario")
    if version != SCENARIO_VERSION:
        raise ScenarioFormatError(f"unsupported scenario version {version}")

    alpha_field = _require(data, "alpha", dict, "scenario")
    kind = _require(alpha_field, "kind", str, "alpha")
    if kind == "explicit":
        bits_text = _require(alpha_field, "bits", str, "alpha")
        try:
            alpha: BitSource = ExplicitBitSource(BitString(bits_text))
        except ValueError as err:
            raise ScenarioFormatError(f"alpha: {err}") from None
    elif kind == "seeded":
        seed = _require(alpha_field, "seed", int, "alpha")
        limit = alpha_field.get("length")
        if limit is not None and (not isinstance(limit, int) or limit < 1):
            raise ScenarioFormatError("alpha: length must be a positive integer")
        alpha = SeededBitSource(seed, limit)
    else:
        raise ScenarioFormatError(f"alpha: unknown kind {kind!r}")

    raw_candidates = _require(data, "candidates", list, "scenario")
    candidates = []
    for idx, entry in enumerate(raw_candidates, start=1):
        where = f"candidates[{idx}]"
        if not isinstance(entry, dict):
            raise ScenarioFormatError(f"{where}: must be an object")
        name = _require(entry, "name", str, where)
        program_text = _require(entry, "program", str, where)
        total = _require(entry, "total", bool, where)
        try:
            program = dsl.parse(program_text)
        except dsl.DslSyntaxError as err:
            raise ScenarioFormatError(f"{where} ({name}): {err}") from None
        candidates.append(Candidate(name, program_text, program, total))

    stages = _require(data, "stages", int, "scenario")
    if stages < 0:
        raise ScenarioFormatError("stages must be >= 0")
    eval_set = _require(data, "eval_set", str, "scenario")
    if eval_set not in EVAL_SET_MODES:
        raise ScenarioFormatError(f"eval_set must be one of {EVAL_SET_MODES}")
    budget = _require(data, "step_budget", int, "scenario")
    if budget < 1:
        raise ScenarioFormatError("step_budget must be positive")

    return Scenario(alpha, tuple(candidates), stages, eval_set, budget)


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ScenarioFormatError(f"cannot read scenario: {err}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioFormatError(f"scenario is not valid JSON: {err}") from None
    return parse_scenario(data)


def validate_scenario(sc: Scenario, depth: int | None = None) -> list[str]:
    """Well-formedness problems, empty when the scenario is usable.

    Declared-total candidates must compute total fair martingales; they are
    checked exhaustively up to ``depth`` (default: the capped run depth).
    """
    problems: list[str] = []
    names = [c.name for c in sc.candidates]
    for name in sorted(set(n for n in names if names.count(n) > 1)):
        problems.append(f"duplicate candidate name {name!r}")
    if len(sc.candidates) < sc.stages:
        problems.append(
            f"{sc.stages} stages need at least {sc.stages} candidates,"
            f" got {len(sc.candidates)}"
        )
    if depth is None:
        from .construction import beta_length

        depth = min(VALIDATION_DEPTH_CAP, beta_length(sc.stages))
    for cand in sc.candidates:
        if not cand.declared_total:
            continue
        report = dsl.check_program_martingale(
            cand.program, sc.alpha, depth, sc.step_budget
        )
        if not report.passed:
            problems.append(f"declared-total candidate {cand.name!r}: {report.message}")
    return problems
