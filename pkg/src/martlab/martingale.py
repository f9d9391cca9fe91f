"""Betting strategies on bitstrings with exact rational capital.

A martingale maps bitstrings to non-negative rationals and satisfies the
exact fairness identity f(x0) + f(x1) = 2 f(x).  Representations here:
finite tables (constant beyond their depth), weighted mixtures over a
constant base, savings-wrapped strategies, path-product factors, and
programs evaluated against a fixed oracle.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from . import dsl
from .bits import BitSource, BitString, EMPTY, strings_up_to
from .rational import format_rational, parse_rational

__all__ = [
    "Martingale",
    "TableMartingale",
    "Mixture",
    "SavingsMartingale",
    "ProgramMartingale",
    "MartingaleEvalError",
    "FairnessViolation",
    "FairnessReport",
    "constant",
    "validate_fairness",
    "mix",
    "savings_transform",
    "decompose_odd_even",
    "fix_oracle",
    "random_fair_table",
    "doubling_on_zero",
    "table_to_text",
    "table_from_text",
]


class MartingaleEvalError(Exception):
    """A martingale value could not be produced (divergence or oracle range)."""

    def __init__(self, message: str, node: BitString):
        super().__init__(message)
        self.node = node


class Martingale:
    """Base class; subclasses implement :meth:`value`."""

    def value(self, x: BitString) -> Fraction:
        raise NotImplementedError


class TableMartingale(Martingale):
    """Values stored for every string of length <= depth.

    Beyond the depth the strategy stops betting: value(xv) = value of the
    length-``depth`` prefix, which preserves fairness at all lengths.
    """

    def __init__(self, depth: int, values: dict[str, Fraction]):
        expected = 2 ** (depth + 1) - 1
        if len(values) != expected:
            raise ValueError(
                f"table of depth {depth} needs {expected} entries, got {len(values)}"
            )
        for x in strings_up_to(depth):
            v = values.get(x.bits)
            if v is None:
                raise ValueError(f"table missing entry for '{x}'")
            if v < 0:
                raise ValueError(f"table value at '{x}' is negative: {v}")
        self.depth = depth
        self._values = dict(values)

    def value(self, x: BitString) -> Fraction:
        key = x.bits if len(x) <= self.depth else x.bits[: self.depth]
        return self._values[key]


def constant(c: Fraction | int) -> TableMartingale:
    return TableMartingale(0, {"": Fraction(c)})


class Mixture(Martingale):
    """base + sum of coefficient * component, all pointwise and exact."""

    def __init__(
        self,
        base: Fraction = Fraction(1),
        components: tuple[tuple[Fraction, Martingale], ...] = (),
    ):
        if base < 0:
            raise ValueError("mixture base must be non-negative")
        for coeff, _ in components:
            if coeff < 0:
                raise ValueError("mixture coefficients must be non-negative")
        self.base = Fraction(base)
        self.components = tuple(components)

    def value(self, x: BitString) -> Fraction:
        total = self.base
        for coeff, m in self.components:
            total += coeff * m.value(x)
        return total

    def metered(self, x: BitString) -> dsl.EvalOutcome:
        """Value plus cost: 1 step for the base, plus each component's steps;
        oracle use is the maximum across components.

        Requires every component to be metered (program-backed).  A failing
        component outcome is returned as-is.
        """
        total = self.base
        steps = 1
        use = 0
        for coeff, m in self.components:
            if not isinstance(m, ProgramMartingale):
                raise TypeError(f"component {m!r} is not meterable")
            outcome = m.metered(x)
            if not outcome.is_value:
                return outcome
            total += coeff * outcome.value
            steps += outcome.steps
            use = max(use, outcome.oracle_use)
        return dsl.EvalOutcome("value", total, steps, use)


def mix(d: Martingale, d_s: Martingale, coefficient: Fraction) -> Mixture:
    """Pointwise d + coefficient * d_s as a mixture node (flattened)."""
    if coefficient < 0:
        raise ValueError("mixture coefficient must be non-negative")
    if isinstance(d, Mixture):
        return Mixture(d.base, d.components + ((coefficient, d_s),))
    return Mixture(Fraction(0), ((Fraction(1), d), (coefficient, d_s)))


class ProgramMartingale(Martingale):
    """A program evaluated against a fixed oracle and step budget.

    Outcomes are memoized per input string; caching is invisible because
    evaluation is deterministic, step counts included.
    """

    def __init__(self, program: dsl.Program, oracle: BitSource, budget: int):
        self.program = program
        self.oracle = oracle
        self.budget = budget
        self._memo: dict[str, dsl.EvalOutcome] = {}

    def metered(self, x: BitString) -> dsl.EvalOutcome:
        outcome = self._memo.get(x.bits)
        if outcome is None:
            outcome = dsl.evaluate(self.program, x, self.oracle, self.budget)
            self._memo[x.bits] = outcome
        return outcome

    def value(self, x: BitString) -> Fraction:
        outcome = self.metered(x)
        if not outcome.is_value:
            raise MartingaleEvalError(f"at '{x}': {outcome.describe()}", x)
        return outcome.value


def fix_oracle(program: dsl.Program, oracle: BitSource, budget: int) -> ProgramMartingale:
    """Bind a program to an oracle and budget as a martingale."""
    return ProgramMartingale(program, oracle, budget)


class SavingsMartingale(Martingale):
    """Savings wrapper: capital is split into banked + active parts.

    The inner strategy is normalized to start at 1, so the wrapped strategy
    starts at 2 with state (banked, active) = (1, 1).  Along each edge the
    active part scales by the inner ratio (ratio 1 for both children of a
    zero node); whenever active exceeds 1 the surplus is banked and active
    resets to 1.  Banked capital never decreases, which gives the exact
    guarantee value(xv) >= value(x) / 2 for every extension.
    """

    def __init__(self, inner: Martingale):
        start = inner.value(EMPTY)
        if start == 0:
            raise ValueError("savings transform requires a positive starting value")
        self.inner = inner
        self._scale = start
        self._states: dict[str, tuple[Fraction, Fraction]] = {
            "": (Fraction(1), Fraction(1))
        }

    def state(self, x: BitString) -> tuple[Fraction, Fraction]:
        """(banked, active) at x, computed along the path from the root."""
        cached = self._states.get(x.bits)
        if cached is not None:
            return cached
        banked, active = self.state(x.parent())
        parent_value = self.inner.value(x.parent())
        if parent_value != 0:
            active = active * self.inner.value(x) / parent_value
        if active > 1:
            banked += active - 1
            active = Fraction(1)
        self._states[x.bits] = (banked, active)
        return banked, active

    def banked(self, x: BitString) -> Fraction:
        return self.state(x)[0]

    def value(self, x: BitString) -> Fraction:
        banked, active = self.state(x)
        return banked + active


def savings_transform(f: Martingale) -> SavingsMartingale:
    """Savings-wrapped version of f; requires f(empty) > 0."""
    return SavingsMartingale(f)


class PathFactorMartingale(Martingale):
    """Product of the inner ratios at positions of one parity only.

    Betting happens only across edges of the chosen parity; across the other
    parity the value is constant.  Children of a zero-valued inner node
    contribute ratio 1 (a zero factor, once recorded, keeps the product 0).
    """

    def __init__(self, inner: Martingale, odd_positions: bool, scale: Fraction):
        self.inner = inner
        self.odd_positions = odd_positions
        self._factors: dict[str, Fraction] = {"": scale}

    def value(self, x: BitString) -> Fraction:
        cached = self._factors.get(x.bits)
        if cached is not None:
            return cached
        parent = x.parent()
        result = self.value(parent)
        if len(x) % 2 == (1 if self.odd_positions else 0):
            parent_value = self.inner.value(parent)
            if parent_value != 0:
                result = result * self.inner.value(x) / parent_value
        self._factors[x.bits] = result
        return result


def decompose_odd_even(f: Martingale, depth: int) -> tuple[Martingale, Martingale]:
    """Split f into factors betting only on odd / only on even positions.

    Requires f fair up to ``depth``; then f_odd(x) * f_even(x) = f(x) exactly
    for every x up to that depth.
    """
    scale = f.value(EMPTY)
    f_odd = PathFactorMartingale(f, True, scale)
    f_even = PathFactorMartingale(f, False, Fraction(1))
    return f_odd, f_even


# ---------------------------------------------------------------------------
# Fairness validation


@dataclass(frozen=True, slots=True)
class FairnessViolation:
    node: BitString
    kind: str  # fairness | negative | evaluation
    message: str


@dataclass(frozen=True, slots=True)
class FairnessReport:
    passed: bool
    violation: FairnessViolation | None
    depth: int

    def __bool__(self) -> bool:
        return self.passed

    def describe(self) -> str:
        if self.passed:
            return f"fair and non-negative up to depth {self.depth}"
        v = self.violation
        return f"{v.kind} violation at '{v.node}': {v.message}"


def validate_fairness(m: Martingale, depth: int) -> FairnessReport:
    """Exact fairness and non-negativity on all strings of length <= depth.

    The fairness identity is checked at every node of length < depth; the
    first violating node (shortest first, lex within a length) is reported.
    """
    values: dict[str, Fraction] = {}
    for x in strings_up_to(depth):
        try:
            v = m.value(x)
        except MartingaleEvalError as err:
            return FairnessReport(
                False, FairnessViolation(x, "evaluation", str(err)), depth
            )
        if v < 0:
            return FairnessReport(
                False,
                FairnessViolation(x, "negative", f"value {format_rational(v)} < 0"),
                depth,
            )
        values[x.bits] = v
    for x in strings_up_to(depth - 1):
        parent = values[x.bits]
        left = values[x.bits + "0"]
        right = values[x.bits + "1"]
        if left + right != 2 * parent:
            return FairnessReport(
                False,
                FairnessViolation(
                    x,
                    "fairness",
                    f"{format_rational(left)} + {format_rational(right)}"
                    f" != 2 * {format_rational(parent)}",
                ),
                depth,
            )
    return FairnessReport(True, None, depth)


# ---------------------------------------------------------------------------
# Table helpers


def random_fair_table(depth: int, seed: int, grid: int = 4) -> TableMartingale:
    """A seeded random fair table: each node splits its value by a random
    ratio r/(2-r) with r on a 1/grid lattice in [0, 2], so zero branches occur."""
    rng = random.Random(seed)
    values: dict[str, Fraction] = {"": Fraction(1)}
    for x in strings_up_to(depth - 1):
        v = values[x.bits]
        r = Fraction(rng.randint(0, 2 * grid), grid)
        values[x.bits + "0"] = r * v
        values[x.bits + "1"] = (2 - r) * v
    return TableMartingale(depth, values)


def doubling_on_zero(depth: int) -> TableMartingale:
    """The all-in strategy betting every bit is 0: value 2^|x| on all-zero
    strings, 0 once a 1 appears."""
    values: dict[str, Fraction] = {}
    for x in strings_up_to(depth):
        values[x.bits] = Fraction(2 ** len(x)) if "1" not in x.bits else Fraction(0)
    return TableMartingale(depth, values)


_EMPTY_MARKER = "-"


def table_to_text(table: TableMartingale) -> str:
    """Serialize one line per string: "bits num/den" ('-' is the empty string)."""
    lines = [f"# martingale table depth={table.depth}"]
    for x in strings_up_to(table.depth):
        key = x.bits if len(x) > 0 else _EMPTY_MARKER
        lines.append(f"{key} {format_rational(table.value(x))}")
    return "\n".join(lines) + "\n"


def table_from_text(text: str) -> TableMartingale:
    """Parse and validate the table format produced by :func:`table_to_text`."""
    entries: dict[str, Fraction] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'bits value', got {raw!r}")
        bits_field, value_field = parts
        bits = "" if bits_field == _EMPTY_MARKER else bits_field
        if bits.strip("01"):
            raise ValueError(f"line {lineno}: bad bitstring {bits_field!r}")
        if bits in entries:
            raise ValueError(f"line {lineno}: duplicate entry for '{bits_field}'")
        value = parse_rational(value_field)
        if value < 0:
            raise ValueError(f"line {lineno}: negative value {value_field}")
        entries[bits] = value
    if not entries:
        raise ValueError("empty table")
    depth = max(len(b) for b in entries)
    return TableMartingale(depth, entries)
