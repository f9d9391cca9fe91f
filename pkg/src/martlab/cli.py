"""Command-line front end.

Exit codes: 0 all checks passed / work done, 1 a check or run failed,
2 usage errors, unreadable files, or malformed scenarios.  Every subcommand
prints its resolved configuration first so runs are reproducible from logs.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import decoder as dec
from .bits import BitString, interleave, split_odd_even, strings_up_to
from .bivariate import from_univariate, to_univariate, validate_bivariate
from .construction import (
    ConstructionError,
    beta_length,
    evaluation_set,
    mixture_text,
    result_to_dict,
    run_construction,
    stage_epsilon,
    trace_csv,
)
from .martingale import (
    random_fair_table,
    savings_transform,
    decompose_odd_even,
    table_from_text,
    validate_fairness,
)
from .rational import format_rational
from .safe_ext import SafeExtensionQuery, safe_extensions
from .scenario import (
    Scenario,
    ScenarioError,
    ScenarioFormatError,
    load_scenario,
    parse_scenario,
    validate_scenario,
)

__all__ = ["main"]

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

# Small built-in scenario with constant-cost candidates; cut points land on
# oracle positions 1 and 2, so decoder fairness is checkable on a tiny
# rectangle.  Used by `check`; a copy ships in scenarios/ for the test suite.
TINY_FAIRNESS_SCENARIO = {
    "version": 1,
    "alpha": {"kind": "explicit", "bits": "10"},
    "candidates": [
        {"name": "flat", "program": "(const 1)", "total": True},
        {"name": "stuck", "program": "(diverge)", "total": False},
    ],
    "stages": 1,
    "eval_set": "prefix",
    "step_budget": 10000,
}


def _print_config(args: argparse.Namespace) -> None:
    fields = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print("config: " + " ".join(f"{k}={v}" for k, v in fields.items()))


def _load_scenario_or_exit(path: str) -> Scenario:
    try:
        return load_scenario(path)
    except ScenarioFormatError as err:
        print(f"error: {err}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE) from None


def cmd_validate(args: argparse.Namespace) -> int:
    _print_config(args)
    sc = _load_scenario_or_exit(args.scenario)
    problems = validate_scenario(sc)
    if problems:
        for p in problems:
            print(f"FAIL {p}")
        return EXIT_FAIL
    print(f"PASS scenario well-formed ({len(sc.candidates)} candidates,"
          f" {sc.stages + 1} stages, {sc.eval_set_mode} mode)")
    return EXIT_OK


def cmd_search(args: argparse.Namespace) -> int:
    _print_config(args)
    try:
        table = table_from_text(Path(args.table).read_text(encoding="utf-8"))
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        stem = BitString(args.stem)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        found = safe_extensions(SafeExtensionQuery(table, stem, args.level))
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAIL
    print(f"{len(found)} safe extension(s) of '{stem}' at level {args.level}"
          f" (threshold 1 + 2^-{args.level}):")
    for rank, y in enumerate(found, start=1):
        marker = " *" if rank <= 2 else ""
        print(f"  {y}{marker}")
    return EXIT_OK


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}")


def cmd_construct(args: argparse.Namespace) -> int:
    _print_config(args)
    sc = _load_scenario_or_exit(args.scenario)
    try:
        result = run_construction(sc)
    except (ScenarioError, ConstructionError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAIL
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "beta.txt", result.beta.bits + "\n")
    _write(out / "trace.csv", trace_csv(result))
    _write(out / "mixture.txt", mixture_text(result))
    _write(
        out / "result.json",
        json.dumps(result_to_dict(result), indent=2, sort_keys=True) + "\n",
    )
    print(f"beta ({len(result.beta)} bits): {result.beta}")
    return EXIT_OK


def cmd_decode(args: argparse.Namespace) -> int:
    _print_config(args)
    sc = _load_scenario_or_exit(args.scenario)
    run_dir = Path(args.run)
    try:
        beta = BitString(
            (run_dir / "beta.txt").read_text(encoding="utf-8").strip()
        )
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    alpha_len = args.alpha_len
    if alpha_len is None:
        result_file = run_dir / "result.json"
        try:
            t_values = json.loads(result_file.read_text(encoding="utf-8"))["t_values"]
            alpha_len = max(t_values)
        except (OSError, json.JSONDecodeError, KeyError, ValueError):
            print(
                "error: no usable result.json in the run directory;"
                " pass --alpha-len explicitly",
                file=sys.stderr,
            )
            return EXIT_USAGE
    try:
        alpha_prefix = sc.alpha.prefix(alpha_len)
    except Exception as err:
        print(f"error: alpha prefix of length {alpha_len}: {err}", file=sys.stderr)
        return EXIT_FAIL

    ctx = dec.DecoderContext.from_scenario(sc)
    replay = ctx.replay(alpha_prefix, beta, collect=True)
    if replay.malformed is not None:
        stage, lo, hi, found, which = replay.malformed
        print(
            f"error: malformed {which} segment at stage {stage}:"
            f" got '{found}', expected '{lo}' or '{hi}'",
            file=sys.stderr,
        )
        return EXIT_FAIL
    trace = dec.capital_trace(alpha_prefix, beta, ctx)
    out = Path(args.out) if args.out else run_dir
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "replay.csv", dec.replay_csv(replay.records))
    _write(out / "capital.csv", dec.capital_csv(trace))
    flags = " ".join(str(int(f)) for f in replay.flags)
    print(f"decoded totality flags: {flags}")
    print(f"final capital at |a|={alpha_len}: {format_rational(trace[-1][1])}")
    return EXIT_OK


def cmd_roundtrip(args: argparse.Namespace) -> int:
    _print_config(args)
    if args.table:
        try:
            f = table_from_text(Path(args.table).read_text(encoding="utf-8"))
        except (OSError, ValueError) as err:
            print(f"error: {err}", file=sys.stderr)
            return EXIT_USAGE
        depth = min(args.depth, f.depth + 2)
    else:
        f = random_fair_table(args.depth, args.seed)
        depth = args.depth
    g = from_univariate(f)
    back = to_univariate(g)
    for z in strings_up_to(depth):
        if back.value(z) != f.value(z):
            print(f"FAIL pair round trip differs at '{z}'")
            return EXIT_FAIL
    print(f"PASS pair round trip exact on all strings up to length {depth}")
    report = validate_bivariate(g, args.rect, args.rect)
    if not report:
        print(f"FAIL {report.describe()}")
        return EXIT_FAIL
    print(f"PASS {report.describe()}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    _print_config(args)
    from .report import render_run_figures

    run_dir = Path(args.run)
    if not run_dir.is_dir():
        print(f"error: not a run directory: {run_dir}", file=sys.stderr)
        return EXIT_USAGE
    written = render_run_figures(run_dir, Path(args.out) if args.out else None)
    if not written:
        print("error: no trace.csv or capital.csv found", file=sys.stderr)
        return EXIT_USAGE
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# The property suite behind `check`


def _check_interleaving() -> str | None:
    for z in strings_up_to(12):
        if interleave(*split_odd_even(z)) != z:
            return f"interleave(split('{z}')) != '{z}'"
    return None


def _check_safe_counts() -> str | None:
    for seed in range(25):
        table = random_fair_table(8, seed=1000 + seed)
        for level in range(5):
            for x in strings_up_to(8 - level - 2):
                if table.value(x) == 0:
                    continue
                found = safe_extensions(SafeExtensionQuery(table, x, level))
                # Independent recount straight off the table values.
                bound = (2**level + 1) * table.value(x)
                recount = sum(
                    1
                    for y in strings_up_to(level + 2)
                    if len(y) == level + 2 and table.value(x + y) * 2**level < bound
                )
                if len(found) != recount or len(found) < 2:
                    return (
                        f"table seed {1000 + seed}, stem '{x}', level {level}:"
                        f" {len(found)} safe extensions (recount {recount})"
                    )
    return None


def _check_pair_roundtrip() -> str | None:
    for seed in range(10):
        f = random_fair_table(8, seed=2000 + seed)
        back = to_univariate(from_univariate(f))
        for z in strings_up_to(8):
            if back.value(z) != f.value(z):
                return f"seed {2000 + seed}: differs at '{z}'"
        report = validate_bivariate(from_univariate(f), 4, 4)
        if not report:
            return f"seed {2000 + seed}: {report.describe()}"
    return None


def _check_savings() -> str | None:
    for seed in range(10):
        f = random_fair_table(8, seed=3000 + seed)
        wrapped = savings_transform(f)
        if not (report := validate_fairness(wrapped, 8)):
            return f"seed {3000 + seed}: {report.describe()}"
        values = {}
        for x in strings_up_to(8):
            banked, active = wrapped.state(x)
            values[x.bits] = banked + active
            if active > 1 or banked + active > 2 * banked:
                return f"seed {3000 + seed}: banking invariant fails at '{x}'"
            if len(x) > 0:
                parent_banked = wrapped.state(x.parent())[0]
                if banked < parent_banked:
                    return f"seed {3000 + seed}: banked capital drops at '{x}'"
        for x in strings_up_to(8):
            v = values[x.bits]
            for y in strings_up_to(8 - len(x)):
                if values[(x + y).bits] * 2 < v:
                    return f"seed {3000 + seed}: halving fails from '{x}' to '{x + y}'"
    return None


def _check_decompose() -> str | None:
    for seed in range(10):
        f = random_fair_table(6, seed=4000 + seed)
        f_odd, f_even = decompose_odd_even(f, 6)
        for x in strings_up_to(6):
            if f_odd.value(x) * f_even.value(x) != f.value(x):
                return f"seed {4000 + seed}: product differs at '{x}'"
            if len(x) > 0:
                parent = x.parent()
                if len(x) % 2 == 0 and f_odd.value(x) != f_odd.value(parent):
                    return f"seed {4000 + seed}: odd factor bets on even edge '{x}'"
                if len(x) % 2 == 1 and f_even.value(x) != f_even.value(parent):
                    return f"seed {4000 + seed}: even factor bets on odd edge '{x}'"
    return None


def _stage_mixtures(result) -> list:
    """The mixture in force at each stage, rebuilt from the final components
    (components are appended in stage order, so prefixes of the list are the
    historical mixtures)."""
    from .martingale import Mixture

    mixtures = []
    mixed_upto = 0
    for tr in result.traces:
        if tr.mixed:
            mixed_upto += 1
        mixtures.append(Mixture(result.final_d.base, result.final_d.components[:mixed_upto]))
    return mixtures


def _check_construction(sc: Scenario) -> str | None:
    result = run_construction(sc)
    again = run_construction(sc)
    if trace_csv(result) != trace_csv(again) or result.beta != again.beta:
        return "two runs of the same scenario differ"
    if len(result.beta) != beta_length(sc.stages):
        return f"beta length {len(result.beta)} != {beta_length(sc.stages)}"
    prev_t = 0
    pos = 0
    for tr, d in zip(result.traces, _stage_mixtures(result)):
        if tr.t <= prev_t:
            return f"stage {tr.stage}: cut point {tr.t} not above {prev_t}"
        prev_t = tr.t
        if tr.d_at_beta > tr.running_bound:
            return f"stage {tr.stage}: capital exceeds its running bound"
        eps = stage_epsilon(tr.stage)
        for segment in (tr.totality_segment, tr.alpha_segment):
            prefix = result.beta.prefix(pos)
            if d.value(prefix + segment) >= (1 + eps) * d.value(prefix):
                return f"stage {tr.stage}: segment '{segment}' violates the growth bound"
            pos += len(segment)
    for z in strings_up_to(6):
        total = result.final_d.value(z)
        if total < 1:
            return f"final mixture below 1 at '{z}'"
        for coeff, m in result.final_d.components:
            if total < coeff * m.value(z):
                return f"dominance fails at '{z}'"
    return None


def _check_decoding(sc: Scenario) -> str | None:
    result = run_construction(sc)
    ctx = dec.DecoderContext.from_scenario(sc)
    alpha_prefix = sc.alpha.prefix(max(result.t_values))
    declared = [c.declared_total for c in sc.candidates[: sc.stages + 1]]
    decoded = dec.decode_totality(result.beta, ctx, alpha_prefix)
    if list(decoded[: len(declared)]) != declared:
        return f"decoded flags {decoded} != declared {declared}"
    trace = dec.capital_trace(alpha_prefix, result.beta, ctx)
    target = Fraction(2 ** (sc.stages + 1))
    if not any(v == target for _, v in trace):
        return f"capital never reaches {target}"
    return None


def _check_decoder_fairness() -> str | None:
    sc = parse_scenario(TINY_FAIRNESS_SCENARIO)
    ctx = dec.DecoderContext.from_scenario(sc)
    e = dec.DecoderMartingale(ctx)
    report = validate_bivariate(e, 2, 8)
    if not report:
        return report.describe()
    return None


CHECKS = [
    ("interleave/split round trip", lambda sc: _check_interleaving()),
    ("safe extension counts", lambda sc: _check_safe_counts()),
    ("pair view round trip", lambda sc: _check_pair_roundtrip()),
    ("savings guarantees", lambda sc: _check_savings()),
    ("odd/even decomposition", lambda sc: _check_decompose()),
    ("construction invariants", _check_construction),
    ("replay decoding", _check_decoding),
    ("decoder fairness rectangle", lambda sc: _check_decoder_fairness()),
]


def cmd_check(args: argparse.Namespace) -> int:
    _print_config(args)
    sc = _load_scenario_or_exit(args.scenario)
    problems = validate_scenario(sc)
    if problems:
        print(f"FAIL scenario validation: {problems[0]}")
        return EXIT_FAIL
    print("PASS scenario validation")
    for name, check in CHECKS:
        try:
            failure = check(sc)
        except Exception as err:  # a crashed check is a failed check
            failure = f"{type(err).__name__}: {err}"
        if failure:
            print(f"FAIL {name}: {failure}")
            return EXIT_FAIL
        print(f"PASS {name}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="martlab",
        description="Exact-rational betting-strategy laboratory: build, encode,"
        " decode, and verify stage constructions.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("search", help="enumerate safe extensions of a table martingale")
    p.add_argument("--table", required=True, help="table martingale file")
    p.add_argument("--stem", default="", help="stem bitstring (default empty)")
    p.add_argument("--level", type=int, default=0, help="level i (threshold 1+2^-i)")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("construct", help="run the stage machine on a scenario")
    p.add_argument("scenario")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("decode", help="replay a run's encoded string")
    p.add_argument("scenario")
    p.add_argument("--run", required=True, help="directory written by construct")
    p.add_argument("--out", help="output directory (default: the run directory)")
    p.add_argument("--alpha-len", type=int, help="oracle prefix length (default: from result.json)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("roundtrip", help="pair-view round trip and rectangle fairness")
    p.add_argument("--table", help="table martingale file (default: seeded random)")
    p.add_argument("--seed", type=int, default=7, help="seed for the random fair table")
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--rect", type=int, default=5, help="rectangle side for validation")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("check", help="run the full property suite")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("report", help="render figures for a run directory")
    p.add_argument("--run", required=True)
    p.add_argument("--out", help="figure directory (default: the run directory)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
