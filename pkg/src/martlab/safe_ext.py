"""Safe-extension search: segments the adversary martingale barely grows on.

For a fair martingale d, a stem x with d(x) > 0, and a level i >= 0, a safe
extension is a string y of length i + 2 with d(xy)/d(x) < 1 + 2^(-i).  A
counting argument over the fairness identity guarantees at least two such
strings, which is what lets one bit be encoded by picking the first or the
second.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .bits import BitString, all_of_length
from .martingale import Martingale
from .rational import format_rational

__all__ = [
    "SafeExtensionQuery",
    "InternalInconsistencyError",
    "safe_extensions",
    "first_two",
    "segment_length",
]


def segment_length(level: int) -> int:
    return level + 2


@dataclass(frozen=True)
class SafeExtensionQuery:
    """d, the stem x, and the level i (threshold 1 + 2^-i, segments i+2 long)."""

    martingale: Martingale
    stem: BitString
    level: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be non-negative")


class InternalInconsistencyError(Exception):
    """Fewer than two safe extensions found, which a fair martingale cannot do."""


def safe_extensions(query: SafeExtensionQuery) -> list[BitString]:
    """All safe extensions for the query, in lexicographic order.

    The threshold comparison d(xy) * 2^i < (2^i + 1) * d(x) is exact and
    strict; ties are excluded.
    """
    d, x, i = query.martingale, query.stem, query.level
    base = d.value(x)
    if base == 0:
        raise ValueError(f"stem '{x}' has zero capital; the ratio is undefined")
    scale = 2**i
    bound = (scale + 1) * base
    return [y for y in all_of_length(i + 2) if d.value(x + y) * scale < bound]


def first_two(query: SafeExtensionQuery) -> tuple[BitString, BitString]:
    """The lexicographically first and second safe extensions.

    Exactness of the fairness identity guarantees both exist; finding fewer
    means the supplied martingale is not fair, and the error carries the full
    enumeration for diagnosis.
    """
    found = safe_extensions(query)
    if len(found) >= 2:
        return found[0], found[1]
    d, x, i = query.martingale, query.stem, query.level
    rows = ", ".join(
        f"'{y}'={format_rational(d.value(x + y))}" for y in all_of_length(i + 2)
    )
    raise InternalInconsistencyError(
        f"only {len(found)} safe extension(s) of '{x}' at level {i}"
        f" (d(x)={format_rational(d.value(x))}); the martingale is not fair."
        f" Values: {rows}"
    )
