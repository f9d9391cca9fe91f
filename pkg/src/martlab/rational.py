"""Exact rational values.

All capital values in this package are :class:`fractions.Fraction` instances:
arbitrary precision, always in lowest terms, with exact arithmetic and
comparison.  No floating point is used anywhere a value is computed or
compared.  This module only adds the serialized "num/den" form.
"""

from __future__ import annotations

from fractions import Fraction

__all__ = ["Fraction", "parse_rational", "format_rational"]


def parse_rational(text: str) -> Fraction:
    """Parse "num/den" (or a bare integer) into a Fraction.

    The denominator, when present, must be positive.
    """
    text = text.strip()
    if "/" in text:
        num_s, _, den_s = text.partition("/")
        try:
            num, den = int(num_s), int(den_s)
        except ValueError:
            raise ValueError(f"not a rational literal: {text!r}") from None
        if den <= 0:
            raise ValueError(f"denominator must be positive: {text!r}")
        return Fraction(num, den)
    try:
        return Fraction(int(text))
    except ValueError:
        raise ValueError(f"not a rational literal: {text!r}") from None


def format_rational(value: Fraction) -> str:
    """Serialize as "num/den" in lowest terms (integers keep an explicit /1)."""
    return f"{value.numerator}/{value.denominator}"
