"""Two-argument betting strategies fair in each coordinate separately.

The two directions of the pair/interleaving correspondence live here: a
univariate strategy on the interleaved string becomes a bivariate one by
averaging over extensions of the shorter argument, and a bivariate strategy
pulls back to the interleaved string through the odd/even split.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .bits import BitString, EMPTY, interleave, split_odd_even, strings_up_to
from .martingale import Martingale, MartingaleEvalError, SavingsMartingale
from .rational import format_rational

__all__ = [
    "BivariateMartingale",
    "InterleavedMartingale",
    "SplitMartingale",
    "BivariateViolation",
    "BivariateReport",
    "from_univariate",
    "to_univariate",
    "bivariate_savings",
    "validate_bivariate",
]


class BivariateMartingale:
    def value(self, x: BitString, y: BitString) -> Fraction:
        raise NotImplementedError


class InterleavedMartingale(BivariateMartingale):
    """Bivariate view of a univariate strategy on the interleaved string.

    For equal lengths the value is f(x1 y1 ... xn yn); when one argument is
    shorter its value is the average over all its extensions to the longer
    length, computed by the two-child recursion (exponential in the length
    gap, memoized; fine at desk scale).
    """

    def __init__(self, inner: Martingale):
        self.inner = inner
        self._memo: dict[tuple[str, str], Fraction] = {}

    def value(self, x: BitString, y: BitString) -> Fraction:
        key = (x.bits, y.bits)
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        if len(x) == len(y):
            result = self.inner.value(interleave(x, y))
        elif len(x) < len(y):
            result = (self.value(x.extend(0), y) + self.value(x.extend(1), y)) / 2
        else:
            result = (self.value(x, y.extend(0)) + self.value(x, y.extend(1))) / 2
        self._memo[key] = result
        return result


def from_univariate(f: Martingale) -> InterleavedMartingale:
    return InterleavedMartingale(f)


class SplitMartingale(Martingale):
    """Univariate view of a bivariate strategy through the odd/even split."""

    def __init__(self, inner: BivariateMartingale):
        self.inner = inner

    def value(self, z: BitString) -> Fraction:
        odd, even = split_odd_even(z)
        return self.inner.value(odd, even)


def to_univariate(g: BivariateMartingale) -> SplitMartingale:
    return SplitMartingale(g)


def bivariate_savings(g: BivariateMartingale) -> InterleavedMartingale:
    """Savings-wrapped bivariate strategy.

    Banking directly on the rectangle lattice would be path-dependent across
    the two coordinates, so the transform round-trips through the univariate
    savings wrapper: pull back through the split, wrap, lift again.  Requires
    g(empty, empty) > 0.
    """
    return from_univariate(SavingsMartingale(to_univariate(g)))


@dataclass(frozen=True, slots=True)
class BivariateViolation:
    x: BitString
    y: BitString
    axis: str  # first | second | value
    message: str


@dataclass(frozen=True, slots=True)
class BivariateReport:
    passed: bool
    violation: BivariateViolation | None
    depth_x: int
    depth_y: int

    def __bool__(self) -> bool:
        return self.passed

    def describe(self) -> str:
        if self.passed:
            return f"section-fair on the {self.depth_x}x{self.depth_y} rectangle"
        v = self.violation
        return f"{v.axis} violation at ('{v.x}', '{v.y}'): {v.message}"


def validate_bivariate(
    g: BivariateMartingale,
    depth_x: int,
    depth_y: int,
    pairs: list[tuple[BitString, BitString]] | None = None,
) -> BivariateReport:
    """Exact section fairness and non-negativity on a rectangle.

    Both identities g(x0,y) + g(x1,y) = 2 g(x,y) and g(x,y0) + g(x,y1) =
    2 g(x,y) are checked wherever the children stay inside the rectangle.
    ``pairs`` restricts the checked nodes (children still must stay inside).
    """
    if pairs is None:
        pairs = [
            (x, y)
            for x in strings_up_to(depth_x)
            for y in strings_up_to(depth_y)
        ]
    values: dict[tuple[str, str], Fraction] = {}

    def get(x: BitString, y: BitString) -> Fraction:
        key = (x.bits, y.bits)
        v = values.get(key)
        if v is None:
            v = g.value(x, y)
            values[key] = v
        return v

    for x, y in pairs:
        try:
            v = get(x, y)
            if v < 0:
                return BivariateReport(
                    False,
                    BivariateViolation(x, y, "value", f"{format_rational(v)} < 0"),
                    depth_x,
                    depth_y,
                )
            if len(x) < depth_x:
                left, right = get(x.extend(0), y), get(x.extend(1), y)
                if left + right != 2 * v:
                    return BivariateReport(
                        False,
                        BivariateViolation(
                            x,
                            y,
                            "first",
                            f"{format_rational(left)} + {format_rational(right)}"
                            f" != 2 * {format_rational(v)}",
                        ),
                        depth_x,
                        depth_y,
                    )
            if len(y) < depth_y:
                left, right = get(x, y.extend(0)), get(x, y.extend(1))
                if left + right != 2 * v:
                    return BivariateReport(
                        False,
                        BivariateViolation(
                            x,
                            y,
                            "second",
                            f"{format_rational(left)} + {format_rational(right)}"
                            f" != 2 * {format_rational(v)}",
                        ),
                        depth_x,
                        depth_y,
                    )
        except MartingaleEvalError as err:
            return BivariateReport(
                False, BivariateViolation(x, y, "value", str(err)), depth_x, depth_y
            )
    return BivariateReport(True, None, depth_x, depth_y)
