"""The stage machine: build the encoded sequence and the covering mixture.

Each stage s = 0..S first (for s >= 1) folds candidate number s into the
running mixture when it is declared total and has positive capital on the
current prefix, then appends two segments of length s + 2 chosen among the
safe extensions at level s: one encoding the declared totality of candidate
s + 1, one encoding the oracle bit at the stage's cut point t.

The cut point is the maximum, over a fixed evaluation set of strings, of
max(steps, oracle use) of the metered mixture evaluation, forced strictly
above the previous stage's value.  The evaluation set, the metering rule and
the monotonicity rule are shared verbatim with the decoder; both sides must
compute identical t values, so any change here is a format change.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from . import dsl
from .bits import BitString, BitSourceRangeError, EMPTY, all_of_length, strings_up_to
from .martingale import Mixture, ProgramMartingale, mix
from .rational import format_rational
from .safe_ext import SafeExtensionQuery, first_two
from .scenario import Scenario, ScenarioError, validate_scenario

__all__ = [
    "StageTrace",
    "ConstructionResult",
    "ConstructionError",
    "AlphaTooShortError",
    "StageEvalFailure",
    "beta_length",
    "stage_epsilon",
    "evaluation_set",
    "stage_time",
    "run_construction",
    "trace_csv",
    "mixture_text",
    "result_to_dict",
]


def beta_length(stage: int) -> int:
    """Total encoded length through the given stage: 2 * sum of (i+2), i = 0..stage."""
    return (stage + 2) * (stage + 3) - 2


def stage_epsilon(stage: int) -> Fraction:
    return Fraction(1, 2**stage)


class ConstructionError(Exception):
    """A scenario violated its contract during the run (names the witness)."""


class AlphaTooShortError(ConstructionError):
    def __init__(self, position: int, limit: int | None):
        super().__init__(
            f"the alpha source must answer position {position}"
            f" (declared length {limit}); lengthen the source"
        )
        self.position = position


class StageEvalFailure(Exception):
    """A metered evaluation inside a stage sweep did not produce a value."""

    def __init__(self, node: BitString, outcome: dsl.EvalOutcome):
        super().__init__(f"at '{node}': {outcome.describe()}")
        self.node = node
        self.outcome = outcome


def evaluation_set(mode: str, beta_start: BitString, max_len: int) -> Iterator[BitString]:
    """The strings a stage's cut point is computed over.

    full: every string of length <= max_len.  prefix: every extension of the
    stage-start prefix up to max_len, plus that prefix's own prefixes.  Order
    is fixed (shortest first, lex within a length) for reproducibility.
    """
    if mode == "full":
        yield from strings_up_to(max_len)
    elif mode == "prefix":
        for k in range(len(beta_start)):
            yield beta_start.prefix(k)
        for extra in range(max_len - len(beta_start) + 1):
            for tail in all_of_length(extra):
                yield beta_start + tail
    else:
        raise ValueError(f"unknown evaluation-set mode {mode!r}")


def stage_time(
    d: Mixture, beta_start: BitString, mode: str, max_len: int, t_prev: int
) -> tuple[int, int]:
    """(raw maximum, cut point) for one stage sweep.

    Raises :class:`StageEvalFailure` on the first diverged or out-of-range
    evaluation.  The cut point is max(raw, t_prev + 1).
    """
    raw = 0
    for z in evaluation_set(mode, beta_start, max_len):
        outcome = d.metered(z)
        if not outcome.is_value:
            raise StageEvalFailure(z, outcome)
        if outcome.steps > raw:
            raw = outcome.steps
        if outcome.oracle_use > raw:
            raw = outcome.oracle_use
    return raw, max(raw, t_prev + 1)


@dataclass(frozen=True)
class StageTrace:
    stage: int
    mixed: bool
    coefficient: Fraction
    totality_segment: BitString
    alpha_segment: BitString
    t_raw: int
    t: int
    alpha_bit: int
    d_at_beta: Fraction
    running_bound: Fraction


@dataclass(frozen=True)
class ConstructionResult:
    beta: BitString
    traces: tuple[StageTrace, ...]
    final_d: Mixture
    mixed_terms: tuple[tuple[int, str, Fraction], ...]  # (stage, candidate, coeff)

    @property
    def t_values(self) -> tuple[int, ...]:
        return tuple(trace.t for trace in self.traces)


def run_construction(sc: Scenario, preflight: bool = True) -> ConstructionResult:
    """Run all stages of a scenario and return the encoded string and mixture.

    With ``preflight`` the scenario is validated first (capped depth); either
    way, any failure of a declared-total candidate on a string the run
    actually needs aborts with a :class:`ConstructionError` naming it.
    """
    if preflight:
        problems = validate_scenario(sc)
        if problems:
            raise ScenarioError("; ".join(problems))

    marts = {
        number: ProgramMartingale(cand.program, sc.alpha, sc.step_budget)
        for number, cand in enumerate(sc.candidates, start=1)
    }
    d = Mixture(Fraction(1), ())
    beta = EMPTY
    t_prev = 0
    traces: list[StageTrace] = []
    mixed_terms: list[tuple[int, str, Fraction]] = []
    eps_mixed_sum = Fraction(0)
    growth_sq = Fraction(1)

    for s in range(sc.stages + 1):
        beta_start = beta
        eps = stage_epsilon(s)
        mixed = False
        coeff = Fraction(0)
        if s >= 1:
            cand = sc.candidate(s)
            if cand is not None and cand.declared_total:
                try:
                    outcome = marts[s].metered(beta_start)
                except dsl.DslEvalError as err:
                    raise ConstructionError(f"candidate {cand.name!r}: {err}") from None
                if not outcome.is_value:
                    raise ConstructionError(
                        f"declared-total candidate {cand.name!r} failed at"
                        f" '{beta_start}': {outcome.describe()}"
                    )
                if outcome.value > 0:
                    coeff = eps / outcome.value
                    d = mix(d, marts[s], coeff)
                    mixed = True
                    mixed_terms.append((s, cand.name, coeff))

        next_cand = sc.candidate(s + 1)
        encode_total = next_cand.declared_total if next_cand is not None else False
        lo, hi = first_two(SafeExtensionQuery(d, beta, s))
        totality_segment = hi if encode_total else lo
        beta = beta + totality_segment

        max_len = beta_length(s)
        try:
            t_raw, t = stage_time(d, beta_start, sc.eval_set_mode, max_len, t_prev)
        except StageEvalFailure as err:
            raise ConstructionError(f"stage {s} sweep failed {err}") from None
        except dsl.DslEvalError as err:
            raise ConstructionError(f"stage {s} sweep fault: {err}") from None

        try:
            alpha_bit = sc.alpha.bit(t)
        except BitSourceRangeError:
            raise AlphaTooShortError(t, sc.alpha.limit) from None

        lo2, hi2 = first_two(SafeExtensionQuery(d, beta, s))
        alpha_segment = hi2 if alpha_bit == 1 else lo2
        beta = beta + alpha_segment

        eps_mixed_sum += eps if mixed else 0
        growth_sq *= (1 + eps) ** 2
        bound = (1 + eps_mixed_sum) * growth_sq
        traces.append(
            StageTrace(
                stage=s,
                mixed=mixed,
                coefficient=coeff,
                totality_segment=totality_segment,
                alpha_segment=alpha_segment,
                t_raw=t_raw,
                t=t,
                alpha_bit=alpha_bit,
                d_at_beta=d.value(beta),
                running_bound=bound,
            )
        )
        t_prev = t

    assert len(beta) == beta_length(sc.stages)
    return ConstructionResult(beta, tuple(traces), d, tuple(mixed_terms))


# ---------------------------------------------------------------------------
# Structured-text exports

TRACE_HEADER = (
    "stage,mixed,coefficient,totality_segment,alpha_segment,"
    "t_raw,t,alpha_bit,d_at_beta,running_bound"
)


def trace_csv(result: ConstructionResult) -> str:
    lines = [TRACE_HEADER]
    for tr in result.traces:
        lines.append(
            f"{tr.stage},{int(tr.mixed)},{format_rational(tr.coefficient)},"
            f"{tr.totality_segment},{tr.alpha_segment},{tr.t_raw},{tr.t},"
            f"{tr.alpha_bit},{format_rational(tr.d_at_beta)},"
            f"{format_rational(tr.running_bound)}"
        )
    return "\n".join(lines) + "\n"


def mixture_text(result: ConstructionResult) -> str:
    lines = ["base 1/1"]
    for stage, name, coeff in result.mixed_terms:
        lines.append(f"component stage={stage} name={name} coeff={format_rational(coeff)}")
    return "\n".join(lines) + "\n"


def result_to_dict(result: ConstructionResult) -> dict:
    return {
        "beta": result.beta.bits,
        "beta_length": len(result.beta),
        "t_values": list(result.t_values),
        "stages": [
            {
                "stage": tr.stage,
                "mixed": tr.mixed,
                "coefficient": format_rational(tr.coefficient),
                "totality_segment": tr.totality_segment.bits,
                "alpha_segment": tr.alpha_segment.bits,
                "t_raw": tr.t_raw,
                "t": tr.t,
                "alpha_bit": tr.alpha_bit,
                "d_at_beta": format_rational(tr.d_at_beta),
                "running_bound": format_rational(tr.running_bound),
            }
            for tr in result.traces
        ],
        "mixture": {
            "base": "1/1",
            "components": [
                {"stage": stage, "name": name, "coefficient": format_rational(coeff)}
                for stage, name, coeff in result.mixed_terms
            ],
        },
    }
