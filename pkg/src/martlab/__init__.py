"""martlab: an exact-rational laboratory for betting strategies on bit pairs.

Everything is computed with exact rational arithmetic; every documented
identity (fairness, products, growth bounds) is an exact equality or
inequality, never a float comparison.
"""

from .bits import (
    BitString,
    BitSource,
    BitSourceRangeError,
    EMPTY,
    ExplicitBitSource,
    SeededBitSource,
    interleave,
    lex_nth,
    split_odd_even,
)
from .rational import Fraction, format_rational, parse_rational

__version__ = "0.1.0"

__all__ = [
    "BitString",
    "BitSource",
    "BitSourceRangeError",
    "EMPTY",
    "ExplicitBitSource",
    "SeededBitSource",
    "interleave",
    "lex_nth",
    "split_odd_even",
    "Fraction",
    "format_rational",
    "parse_rational",
    "__version__",
]
