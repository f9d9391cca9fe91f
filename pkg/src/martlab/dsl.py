"""A small s-expression language for betting strategies, with metered evaluation.

Programs map an input bitstring (the string being bet on) and an oracle bit
sequence to a non-negative rational.  Evaluation is deterministic and metered:
every AST node evaluation event costs exactly one step, and the largest
1-based oracle position actually answered is recorded.  Both numbers feed the
stage machinery, so the cost model is part of the file-format contract and
must never change silently.

Grammar (s-expressions; ``;`` starts a line comment)::

    expr := RATIONAL            ; integer or num/den literal, e.g. 2, -1, 7/2
          | (const RATIONAL)
          | (len)               ; length of the input string
          | (bit e)             ; input bit at 1-based position e
          | (oracle e)          ; oracle bit at 1-based position e
          | (add e e) | (sub e e) | (mul e e) | (div e e)
          | (= e e) | (< e e) | (<= e e) | (> e e) | (>= e e)
          | (if c t f)          ; c nonzero selects t; only one branch runs
          | (fold init step)    ; step runs once per input position 1..len
          | (acc) | (pos)       ; current accumulator / position inside fold, loop
          | (loop init cond step)  ; while cond nonzero: acc := step; may diverge
          | (diverge)           ; never yields a value

Comparisons yield 1 or 0.  ``fold`` and ``loop`` bind ``(acc)`` and ``(pos)``
(the loop's position is its 1-based iteration count).  A ``diverge`` node or
budget exhaustion yields a diverged outcome whose step count is the budget.
Division by zero, a bad index, ``(acc)`` outside a binder, or a negative final
value raise :class:`DslEvalError`; those are program faults, not outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .bits import BitSource, BitSourceRangeError, BitString, strings_up_to
from .rational import format_rational, parse_rational

__all__ = [
    "Node",
    "Program",
    "Const",
    "InputLen",
    "InputBit",
    "OracleBit",
    "Arith",
    "Compare",
    "If",
    "Fold",
    "Acc",
    "Pos",
    "Loop",
    "Diverge",
    "DslSyntaxError",
    "DslEvalError",
    "EvalOutcome",
    "parse",
    "format_program",
    "evaluate",
    "check_program_martingale",
    "ProgramCheckReport",
]


class Node:
    """Base of all AST nodes."""

    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Const(Node):
    value: Fraction


@dataclass(frozen=True, slots=True)
class InputLen(Node):
    pass


@dataclass(frozen=True, slots=True)
class InputBit(Node):
    index: Node


@dataclass(frozen=True, slots=True)
class OracleBit(Node):
    index: Node


@dataclass(frozen=True, slots=True)
class Arith(Node):
    op: str  # add | sub | mul | div
    left: Node
    right: Node


@dataclass(frozen=True, slots=True)
class Compare(Node):
    op: str  # = | < | <= | > | >=
    left: Node
    right: Node


@dataclass(frozen=True, slots=True)
class If(Node):
    cond: Node
    then: Node
    orelse: Node


@dataclass(frozen=True, slots=True)
class Fold(Node):
    init: Node
    step: Node


@dataclass(frozen=True, slots=True)
class Acc(Node):
    pass


@dataclass(frozen=True, slots=True)
class Pos(Node):
    pass


@dataclass(frozen=True, slots=True)
class Loop(Node):
    init: Node
    cond: Node
    step: Node


@dataclass(frozen=True, slots=True)
class Diverge(Node):
    pass


Program = Node


class DslSyntaxError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class DslEvalError(Exception):
    """A program fault: the term has no meaningful value on this input."""

    def __init__(self, message: str, input_string: BitString):
        super().__init__(f"{message} on input '{input_string}'")
        self.input_string = input_string


# ---------------------------------------------------------------------------
# Parsing


@dataclass(frozen=True, slots=True)
class _Token:
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c.isspace():
            col += 1
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            tokens.append(_Token(c, line, col))
            col += 1
            i += 1
        else:
            start = i
            start_col = col
            while i < n and not text[i].isspace() and text[i] not in "();":
                i += 1
                col += 1
            tokens.append(_Token(text[start:i], line, start_col))
    return tokens


_ARITH_OPS = ("add", "sub", "mul", "div")
_COMPARE_OPS = ("=", "<", "<=", ">", ">=")


def _is_rational_token(text: str) -> bool:
    body = text[1:] if text.startswith("-") else text
    if "/" in body:
        num, _, den = body.partition("/")
        return num.isdigit() and den.isdigit() and int(den) > 0
    return body.isdigit()


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self._tokens = tokens
        self._pos = 0

    def _peek(self) -> _Token | None:
        return self._tokens[self._pos] if self._pos < len(self._tokens) else None

    def _next(self) -> _Token:
        tok = self._peek()
        if tok is None:
            last = self._tokens[-1] if self._tokens else _Token("", 1, 1)
            raise DslSyntaxError("unexpected end of input", last.line, last.column)
        self._pos += 1
        return tok

    def parse_program(self) -> Node:
        node = self.parse_expr()
        trailing = self._peek()
        if trailing is not None:
            raise DslSyntaxError(
                f"unexpected trailing token {trailing.text!r}", trailing.line, trailing.column
            )
        return node

    def parse_expr(self) -> Node:
        tok = self._next()
        if tok.text == ")":
            raise DslSyntaxError("unexpected ')'", tok.line, tok.column)
        if tok.text != "(":
            if _is_rational_token(tok.text):
                return Const(parse_rational(tok.text))
            raise DslSyntaxError(f"not a rational literal: {tok.text!r}", tok.line, tok.column)
        head = self._next()
        if head.text in "()":
            raise DslSyntaxError("expected an operator name", head.line, head.column)
        node = self._parse_form(head)
        closing = self._next()
        if closing.text != ")":
            raise DslSyntaxError(
                f"expected ')' closing {head.text!r}, found {closing.text!r}",
                closing.line,
                closing.column,
            )
        return node

    def _parse_form(self, head: _Token) -> Node:
        name = head.text
        if name == "const":
            tok = self._next()
            if not _is_rational_token(tok.text):
                raise DslSyntaxError(
                    f"not a rational literal: {tok.text!r}", tok.line, tok.column
                )
            return Const(parse_rational(tok.text))
        if name == "len":
            return InputLen()
        if name == "bit":
            return InputBit(self.parse_expr())
        if name == "oracle":
            return OracleBit(self.parse_expr())
        if name in _ARITH_OPS:
            return Arith(name, self.parse_expr(), self.parse_expr())
        if name in _COMPARE_OPS:
            return Compare(name, self.parse_expr(), self.parse_expr())
        if name == "if":
            return If(self.parse_expr(), self.parse_expr(), self.parse_expr())
        if name == "fold":
            return Fold(self.parse_expr(), self.parse_expr())
        if name == "acc":
            return Acc()
        if name == "pos":
            return Pos()
        if name == "loop":
            return Loop(self.parse_expr(), self.parse_expr(), self.parse_expr())
        if name == "diverge":
            return Diverge()
        raise DslSyntaxError(f"unknown operator {name!r}", head.line, head.column)


def parse(text: str) -> Node:
    """Parse a program; syntax errors carry line/column positions."""
    tokens = _tokenize(text)
    if not tokens:
        raise DslSyntaxError("empty program", 1, 1)
    return _Parser(tokens).parse_program()


def format_program(node: Node) -> str:
    """Canonical text for a program; ``parse(format_program(p)) == p``."""
    if isinstance(node, Const):
        v = node.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(node, InputLen):
        return "(len)"
    if isinstance(node, InputBit):
        return f"(bit {format_program(node.index)})"
    if isinstance(node, OracleBit):
        return f"(oracle {format_program(node.index)})"
    if isinstance(node, Arith):
        return f"({node.op} {format_program(node.left)} {format_program(node.right)})"
    if isinstance(node, Compare):
        return f"({node.op} {format_program(node.left)} {format_program(node.right)})"
    if isinstance(node, If):
        return (
            f"(if {format_program(node.cond)} {format_program(node.then)}"
            f" {format_program(node.orelse)})"
        )
    if isinstance(node, Fold):
        return f"(fold {format_program(node.init)} {format_program(node.step)})"
    if isinstance(node, Acc):
        return "(acc)"
    if isinstance(node, Pos):
        return "(pos)"
    if isinstance(node, Loop):
        return (
            f"(loop {format_program(node.init)} {format_program(node.cond)}"
            f" {format_program(node.step)})"
        )
    if isinstance(node, Diverge):
        return "(diverge)"
    raise TypeError(f"not an AST node: {node!r}")


# ---------------------------------------------------------------------------
# Evaluation


@dataclass(frozen=True, slots=True)
class EvalOutcome:
    """Result of one metered evaluation.

    ``kind`` is "value", "diverged", or "oracle_out_of_range".  ``steps`` is
    the number of node evaluation events (the budget itself for diverged
    outcomes); ``oracle_use`` is the largest oracle position answered, 0 if
    none.  ``bad_index`` is set only for out-of-range outcomes.
    """

    kind: str
    value: Fraction | None
    steps: int
    oracle_use: int
    bad_index: int | None = None

    @property
    def is_value(self) -> bool:
        return self.kind == "value"

    def describe(self) -> str:
        if self.kind == "value":
            return f"value {format_rational(self.value)} (steps={self.steps}, use={self.oracle_use})"
        if self.kind == "diverged":
            return f"diverged (budget={self.steps})"
        return f"oracle out of range at {self.bad_index} (steps={self.steps})"


class _DivergeSignal(Exception):
    pass


class _RangeSignal(Exception):
    def __init__(self, index: int):
        self.index = index


_NO_BINDER = object()


class _Run:
    __slots__ = ("input", "oracle", "budget", "steps", "max_use")

    def __init__(self, input_string: BitString, oracle: BitSource, budget: int):
        self.input = input_string
        self.oracle = oracle
        self.budget = budget
        self.steps = 0
        self.max_use = 0

    def tick(self) -> None:
        self.steps += 1
        if self.steps > self.budget:
            raise _DivergeSignal

    def fault(self, message: str) -> DslEvalError:
        return DslEvalError(message, self.input)


def _as_index(value: Fraction, run: _Run, what: str) -> int:
    if value.denominator != 1 or value.numerator < 1:
        raise run.fault(f"{what} index must be a positive integer, got {value}")
    return value.numerator


def _eval(node: Node, run: _Run, acc, pos) -> Fraction:
    run.tick()
    if isinstance(node, Const):
        return node.value
    if isinstance(node, InputLen):
        return Fraction(len(run.input))
    if isinstance(node, InputBit):
        k = _as_index(_eval(node.index, run, acc, pos), run, "bit")
        if k > len(run.input):
            raise run.fault(f"bit index {k} beyond input length {len(run.input)}")
        return Fraction(run.input.bit(k))
    if isinstance(node, OracleBit):
        k = _as_index(_eval(node.index, run, acc, pos), run, "oracle")
        try:
            b = run.oracle.bit(k)
        except BitSourceRangeError:
            raise _RangeSignal(k) from None
        if k > run.max_use:
            run.max_use = k
        return Fraction(b)
    if isinstance(node, Arith):
        left = _eval(node.left, run, acc, pos)
        right = _eval(node.right, run, acc, pos)
        if node.op == "add":
            return left + right
        if node.op == "sub":
            return left - right
        if node.op == "mul":
            return left * right
        if right == 0:
            raise run.fault("division by zero")
        return left / right
    if isinstance(node, Compare):
        left = _eval(node.left, run, acc, pos)
        right = _eval(node.right, run, acc, pos)
        hit = {
            "=": left == right,
            "<": left < right,
            "<=": left <= right,
            ">": left > right,
            ">=": left >= right,
        }[node.op]
        return Fraction(1 if hit else 0)
    if isinstance(node, If):
        if _eval(node.cond, run, acc, pos) != 0:
            return _eval(node.then, run, acc, pos)
        return _eval(node.orelse, run, acc, pos)
    if isinstance(node, Fold):
        value = _eval(node.init, run, acc, pos)
        for k in range(1, len(run.input) + 1):
            value = _eval(node.step, run, value, Fraction(k))
        return value
    if isinstance(node, Acc):
        if acc is _NO_BINDER:
            raise run.fault("(acc) outside fold/loop")
        return acc
    if isinstance(node, Pos):
        if pos is _NO_BINDER:
            raise run.fault("(pos) outside fold/loop")
        return pos
    if isinstance(node, Loop):
        value = _eval(node.init, run, acc, pos)
        iteration = 0
        while True:
            iteration += 1
            if _eval(node.cond, run, value, Fraction(iteration)) == 0:
                return value
            value = _eval(node.step, run, value, Fraction(iteration))
    if isinstance(node, Diverge):
        raise _DivergeSignal
    raise TypeError(f"not an AST node: {node!r}")


def evaluate(
    program: Node, input_string: BitString, oracle: BitSource, budget: int
) -> EvalOutcome:
    """Metered big-step evaluation.

    Deterministic: the same (program, input, oracle, budget) always produces
    an identical outcome, step count and oracle use included.
    """
    if budget < 1:
        raise ValueError("step budget must be positive")
    run = _Run(input_string, oracle, budget)
    try:
        value = _eval(program, run, _NO_BINDER, _NO_BINDER)
    except _DivergeSignal:
        return EvalOutcome("diverged", None, budget, run.max_use)
    except _RangeSignal as sig:
        return EvalOutcome("oracle_out_of_range", None, run.steps, run.max_use, sig.index)
    if value < 0:
        raise run.fault(f"negative martingale value {value}")
    return EvalOutcome("value", value, run.steps, run.max_use)


# ---------------------------------------------------------------------------
# Whole-program fairness checking


@dataclass(frozen=True, slots=True)
class ProgramCheckReport:
    passed: bool
    witness: BitString | None
    message: str

    def __bool__(self) -> bool:
        return self.passed


def check_program_martingale(
    program: Node, oracle: BitSource, depth: int, budget: int
) -> ProgramCheckReport:
    """Check that a program computes a total fair martingale up to ``depth``.

    Every string of length <= depth must evaluate to a non-negative value,
    and the exact fairness identity f(x0) + f(x1) = 2 f(x) must hold at every
    string of length < depth.
    """
    values: dict[str, Fraction] = {}
    for x in strings_up_to(depth):
        try:
            outcome = evaluate(program, x, oracle, budget)
        except DslEvalError as err:
            return ProgramCheckReport(False, x, f"evaluation fault at '{x}': {err}")
        if not outcome.is_value:
            return ProgramCheckReport(False, x, f"at '{x}': {outcome.describe()}")
        values[x.bits] = outcome.value
    for x in strings_up_to(depth - 1):
        parent = values[x.bits]
        left = values[x.bits + "0"]
        right = values[x.bits + "1"]
        if left + right != 2 * parent:
            return ProgramCheckReport(
                False,
                x,
                f"fairness fails at '{x}': {format_rational(left)} + {format_rational(right)}"
                f" != 2 * {format_rational(parent)}",
            )
    return ProgramCheckReport(True, None, f"total fair martingale up to depth {depth}")
