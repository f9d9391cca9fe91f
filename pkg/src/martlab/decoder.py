"""Replay decoding: a bivariate strategy that wins on the constructed pair.

Evaluation of e(a, b) treats a and b as prefixes of the oracle sequence and
of the encoded sequence.  Knowing only the public candidate programs, the
replay rebuilds the stage machine from b alone: at each stage it recomputes
the two safe extensions, matches b's next segment against them to decode the
next candidate's totality, recomputes the stage cut point t with a as the
oracle, and reads the following segment as the claimed oracle bit at t.  The
capital doubles on every decoded position where a agrees and drops to zero
where it does not; all other positions are left alone.

Totality flags are never an input: the replay recovers them from b, so a
context built with or without knowledge of them behaves identically.

Where the replay cannot continue it stops betting and keeps the accumulated
product ("freeze"): a segment matching neither safe extension, an evaluation
that diverges or reads the oracle beyond |a|, or a cut point past |a| (no
later stage can bet, because cut points strictly increase).  Freezing rather
than resetting the value keeps the first-argument fairness identity intact
across those boundaries.  When b is too short to finish a stage, the value is
the average over one-bit extensions of b, which stabilizes once every stage
that could bet within |a| is resolved.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import dsl
from .bits import BitString, ExplicitBitSource
from .bivariate import BivariateMartingale
from .construction import StageEvalFailure, beta_length, stage_epsilon, stage_time
from .martingale import MartingaleEvalError, Mixture, ProgramMartingale, mix
from .safe_ext import InternalInconsistencyError, SafeExtensionQuery, first_two
from .scenario import Scenario

__all__ = [
    "DecoderContext",
    "DecoderMartingale",
    "StageRecord",
    "ReplayResult",
    "MalformedBetaError",
    "eval_e",
    "decode_totality",
    "capital_trace",
    "replay_csv",
    "capital_csv",
]


@dataclass(frozen=True)
class StageRecord:
    """One replayed stage: what was decoded and why the replay moved on."""

    stage: int
    decoded_total: bool | None  # totality of candidate stage+1
    status: str  # bet | decoded | past_cut | eval_failed | malformed | no_more_bets
    t: int | None
    expected_bit: int | None
    consumed: int


@dataclass(frozen=True)
class ReplayResult:
    kind: str  # value | needs_bits
    value: Fraction | None
    flags: tuple[bool, ...]  # decoded totality of candidates 1, 2, ...
    records: tuple[StageRecord, ...]
    consumed: int
    malformed: tuple | None  # (stage, expected_lo, expected_hi, found, which)


class MalformedBetaError(Exception):
    def __init__(self, stage: int, lo: BitString, hi: BitString, found: BitString, which: str):
        super().__init__(
            f"stage {stage}: {which} segment '{found}' matches neither"
            f" expected safe extension '{lo}' nor '{hi}'"
        )
        self.stage = stage
        self.expected = (lo, hi)
        self.found = found
        self.which = which


class _StagePlan:
    """Everything a stage needs that does not depend on its own two segments.

    A pure function of (a, stage, consumed prefix of b), hence memoizable:
    the updated mixture, the two safe extensions for the totality segment,
    and the sweep's raw maximum (or the fact that something failed).
    """

    __slots__ = ("failed", "d", "lo", "hi", "t_raw")

    def __init__(self, failed, d=None, lo=None, hi=None, t_raw=None):
        self.failed = failed
        self.d = d
        self.lo = lo
        self.hi = hi
        self.t_raw = t_raw


_EVAL_FAILURES = (
    StageEvalFailure,
    InternalInconsistencyError,
    MartingaleEvalError,
    dsl.DslEvalError,
)


class DecoderContext:
    """Public candidate programs plus the run parameters shared with the
    construction (evaluation-set mode and the one global step budget)."""

    def __init__(
        self,
        candidates: tuple[tuple[str, dsl.Program], ...],
        eval_set_mode: str,
        step_budget: int,
    ):
        self.candidates = tuple(candidates)
        self.eval_set_mode = eval_set_mode
        self.step_budget = step_budget
        self._marts: dict[str, list[ProgramMartingale]] = {}
        self._plans: dict[tuple[str, int, str], _StagePlan] = {}
        self._pairs: dict[tuple[str, int, str], tuple[BitString, BitString] | None] = {}
        self._values: dict[tuple[str, str], Fraction] = {}

    @classmethod
    def from_scenario(cls, sc: Scenario) -> "DecoderContext":
        # Deliberately drops declared_total: the decoder recovers the flags.
        return cls(
            tuple((c.name, c.program) for c in sc.candidates),
            sc.eval_set_mode,
            sc.step_budget,
        )

    def _candidate_marts(self, a: BitString) -> list[ProgramMartingale]:
        marts = self._marts.get(a.bits)
        if marts is None:
            oracle = ExplicitBitSource(a)
            marts = [
                ProgramMartingale(program, oracle, self.step_budget)
                for _, program in self.candidates
            ]
            self._marts[a.bits] = marts
        return marts

    def _plan(
        self,
        a: BitString,
        s: int,
        bstart: BitString,
        d: Mixture,
        flag: bool,
    ) -> _StagePlan:
        key = (a.bits, s, bstart.bits)
        plan = self._plans.get(key)
        if plan is not None:
            return plan
        marts = self._candidate_marts(a)
        d_cur = d
        try:
            if s >= 1 and flag and s <= len(marts):
                outcome = marts[s - 1].metered(bstart)
                if not outcome.is_value:
                    raise StageEvalFailure(bstart, outcome)
                if outcome.value > 0:
                    d_cur = mix(d_cur, marts[s - 1], stage_epsilon(s) / outcome.value)
            lo, hi = first_two(SafeExtensionQuery(d_cur, bstart, s))
            t_raw, _ = stage_time(d_cur, bstart, self.eval_set_mode, beta_length(s), 0)
            plan = _StagePlan(False, d_cur, lo, hi, t_raw)
        except _EVAL_FAILURES:
            plan = _StagePlan(True)
        self._plans[key] = plan
        return plan

    def _alpha_pair(
        self, a: BitString, s: int, stem: BitString, d: Mixture
    ) -> tuple[BitString, BitString] | None:
        key = (a.bits, s, stem.bits)
        if key in self._pairs:
            return self._pairs[key]
        try:
            pair = first_two(SafeExtensionQuery(d, stem, s))
        except _EVAL_FAILURES:
            pair = None
        self._pairs[key] = pair
        return pair

    def replay(self, a: BitString, b: BitString, collect: bool = False) -> ReplayResult:
        """Run the stage loop as far as a and b allow.

        Returns a value when every one-bit extension of b would yield the
        same one, or needs_bits when b ended inside a segment that still
        matters.  With ``collect`` the loop keeps going through zero capital
        and records every stage (used for totality decoding and reports).
        """
        product = Fraction(1)
        d = Mixture(Fraction(1), ())
        flags: list[bool] = []
        records: list[StageRecord] = []
        malformed: tuple | None = None
        pos = 0
        t_prev = 0
        s = 0

        def done(kind: str, value: Fraction | None) -> ReplayResult:
            return ReplayResult(kind, value, tuple(flags), tuple(records), pos, malformed)

        while True:
            if t_prev >= len(a):
                if collect:
                    records.append(StageRecord(s, None, "no_more_bets", None, None, pos))
                return done("value", product)
            bstart = b.prefix(pos)
            flag = flags[s - 1] if s >= 1 else False
            plan = self._plan(a, s, bstart, d, flag)
            if plan.failed:
                if collect:
                    records.append(StageRecord(s, None, "eval_failed", None, None, pos))
                return done("value", product)
            d = plan.d
            t = max(plan.t_raw, t_prev + 1)
            if t > len(a):
                if collect:
                    records.append(StageRecord(s, None, "past_cut", t, None, pos))
                return done("value", product)

            seg_len = s + 2
            if pos + seg_len > len(b):
                return done("needs_bits", None)
            segment = b.segment(pos + 1, seg_len)
            pos += seg_len
            if segment != plan.lo and segment != plan.hi:
                malformed = (s, plan.lo, plan.hi, segment, "totality")
                if collect:
                    records.append(StageRecord(s, None, "malformed", t, None, pos))
                return done("value", product)
            flags.append(segment == plan.hi)

            stem = b.prefix(pos)
            pair = self._alpha_pair(a, s, stem, d)
            if pair is None:
                if collect:
                    records.append(StageRecord(s, flags[s], "eval_failed", t, None, pos))
                return done("value", product)
            if pos + seg_len > len(b):
                return done("needs_bits", None)
            segment = b.segment(pos + 1, seg_len)
            pos += seg_len
            if segment != pair[0] and segment != pair[1]:
                malformed = (s, pair[0], pair[1], segment, "alpha")
                if collect:
                    records.append(StageRecord(s, flags[s], "malformed", t, None, pos))
                return done("value", product)
            expected = 1 if segment == pair[1] else 0
            product *= 2 if a.bit(t) == expected else 0
            if collect:
                records.append(StageRecord(s, flags[s], "bet", t, expected, pos))
            elif product == 0:
                # Zero capital never recovers; every extension agrees.
                return done("value", product)
            t_prev = t
            s += 1


def eval_e(a: BitString, b: BitString, ctx: DecoderContext) -> Fraction:
    """The decoder strategy's exact value at (a, b).  Total on all pairs."""
    key = (a.bits, b.bits)
    cached = ctx._values.get(key)
    if cached is not None:
        return cached
    result = ctx.replay(a, b)
    if result.kind == "value":
        value = result.value
    else:
        value = (eval_e(a, b.extend(0), ctx) + eval_e(a, b.extend(1), ctx)) / 2
    ctx._values[key] = value
    return value


class DecoderMartingale(BivariateMartingale):
    def __init__(self, ctx: DecoderContext):
        self.ctx = ctx

    def value(self, a: BitString, b: BitString) -> Fraction:
        return eval_e(a, b, self.ctx)


def decode_totality(
    beta: BitString, ctx: DecoderContext, alpha_prefix: BitString
) -> list[bool]:
    """Recover the totality flags encoded in beta (candidate 1 onward).

    ``alpha_prefix`` must cover every stage cut point, or the replay stops
    early and the returned list is truncated.  A segment matching neither
    safe extension raises :class:`MalformedBetaError`.
    """
    result = ctx.replay(alpha_prefix, beta, collect=True)
    if result.malformed is not None:
        raise MalformedBetaError(*result.malformed)
    return list(result.flags)


def capital_trace(
    alpha_prefix: BitString, beta: BitString, ctx: DecoderContext
) -> list[tuple[int, Fraction]]:
    """e along successive prefixes of alpha_prefix, second argument fixed."""
    return [
        (n, eval_e(alpha_prefix.prefix(n), beta, ctx))
        for n in range(len(alpha_prefix) + 1)
    ]


# ---------------------------------------------------------------------------
# Structured-text exports

REPLAY_HEADER = "stage,decoded_total,status,t,expected_bit,consumed"


def replay_csv(records: tuple[StageRecord, ...]) -> str:
    lines = [REPLAY_HEADER]
    for r in records:
        decoded = "" if r.decoded_total is None else int(r.decoded_total)
        t = "" if r.t is None else r.t
        bit = "" if r.expected_bit is None else r.expected_bit
        lines.append(f"{r.stage},{decoded},{r.status},{t},{bit},{r.consumed}")
    return "\n".join(lines) + "\n"


CAPITAL_HEADER = "prefix_len,value"


def capital_csv(trace: list[tuple[int, Fraction]]) -> str:
    lines = [CAPITAL_HEADER]
    for n, value in trace:
        lines.append(f"{n},{value.numerator}/{value.denominator}")
    return "\n".join(lines) + "\n"
