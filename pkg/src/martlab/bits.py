"""Bitstrings, deterministic bit sources, and interleaving.

Positions are 1-based everywhere: ``x.bit(1)`` is the first bit.  All values
are immutable and safe to share between threads.
"""

from __future__ import annotations

from typing import Iterable, Iterator

__all__ = [
    "BitString",
    "EMPTY",
    "BitSourceRangeError",
    "BitSource",
    "ExplicitBitSource",
    "SeededBitSource",
    "lex_nth",
    "interleave",
    "split_odd_even",
    "all_of_length",
    "strings_up_to",
]


class BitString:
    """An immutable finite sequence of 0/1 bits.

    Wraps an ASCII string of ``"0"``/``"1"`` characters, which is also the
    serialized form.  Equal-length bitstrings compare lexicographically via
    ``sort_key``, matching the numeric order of their binary value.
    """

    __slots__ = ("_bits",)

    def __init__(self, bits: str = ""):
        if bits.strip("01"):
            raise ValueError(f"bitstring may contain only '0'/'1': {bits!r}")
        object.__setattr__(self, "_bits", bits)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitString":
        return cls("".join("1" if b else "0" for b in bits))

    @property
    def bits(self) -> str:
        return self._bits

    def bit(self, k: int) -> int:
        """The k-th bit, 1-based."""
        if not 1 <= k <= len(self._bits):
            raise IndexError(f"bit index {k} out of range for length {len(self._bits)}")
        return 1 if self._bits[k - 1] == "1" else 0

    def prefix(self, n: int) -> "BitString":
        if not 0 <= n <= len(self._bits):
            raise ValueError(f"prefix length {n} out of range")
        return BitString(self._bits[:n])

    def drop(self, n: int) -> "BitString":
        return BitString(self._bits[n:])

    def segment(self, start: int, length: int) -> "BitString":
        """``length`` bits starting at 1-based position ``start``."""
        if start < 1 or start - 1 + length > len(self._bits):
            raise IndexError(f"segment [{start}, {start + length}) out of range")
        return BitString(self._bits[start - 1 : start - 1 + length])

    def parent(self) -> "BitString":
        if not self._bits:
            raise ValueError("empty bitstring has no parent")
        return BitString(self._bits[:-1])

    def extend(self, b: int) -> "BitString":
        return BitString(self._bits + ("1" if b else "0"))

    def is_prefix_of(self, other: "BitString") -> bool:
        return other._bits.startswith(self._bits)

    def sort_key(self) -> tuple[int, str]:
        return (len(self._bits), self._bits)

    def __add__(self, other: "BitString") -> "BitString":
        return BitString(self._bits + other._bits)

    def __len__(self) -> int:
        return len(self._bits)

    def __iter__(self) -> Iterator[int]:
        return (1 if c == "1" else 0 for c in self._bits)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BitString) and self._bits == other._bits

    def __hash__(self) -> int:
        return hash(self._bits)

    def __str__(self) -> str:
        return self._bits

    def __repr__(self) -> str:
        return f"BitString({self._bits!r})"


EMPTY = BitString("")


def lex_nth(length: int, n: int) -> BitString:
    """The n-th bitstring of the given length in lexicographic order (n is 1-based)."""
    if length < 0:
        raise ValueError("length must be non-negative")
    if not 1 <= n <= 2**length:
        raise ValueError(f"n={n} out of range [1, 2^{length}]")
    if length == 0:
        return EMPTY
    return BitString(format(n - 1, f"0{length}b"))


def interleave(x: BitString, y: BitString) -> BitString:
    """Merge x into odd positions and y into even ones: x1 y1 x2 y2 ...

    Requires |x| = |y| or |x| = |y| + 1.
    """
    if len(x) - len(y) not in (0, 1):
        raise ValueError(f"cannot interleave lengths {len(x)} and {len(y)}")
    out = []
    for a, b in zip(x.bits, y.bits):
        out.append(a)
        out.append(b)
    if len(x) > len(y):
        out.append(x.bits[-1])
    return BitString("".join(out))


def split_odd_even(z: BitString) -> tuple[BitString, BitString]:
    """Inverse of interleave: (odd-position bits, even-position bits)."""
    return BitString(z.bits[0::2]), BitString(z.bits[1::2])


def all_of_length(n: int) -> Iterator[BitString]:
    """All bitstrings of length n in lexicographic order."""
    if n == 0:
        yield EMPTY
        return
    for v in range(2**n):
        yield BitString(format(v, f"0{n}b"))


def strings_up_to(max_len: int) -> Iterator[BitString]:
    """All bitstrings of length <= max_len, shortest first, lex within a length."""
    for n in range(max_len + 1):
        yield from all_of_length(n)


class BitSourceRangeError(Exception):
    """A bit was requested beyond the end of a bounded source."""

    def __init__(self, index: int, limit: int):
        super().__init__(f"bit {index} requested from a source of length {limit}")
        self.index = index
        self.limit = limit


class BitSource:
    """Deterministic supplier of an (effectively infinite) bit sequence.

    Querying the same position twice always returns the same bit.  Querying
    beyond the declared length raises :class:`BitSourceRangeError`; there is
    no silent default.
    """

    limit: int | None

    def bit(self, k: int) -> int:
        raise NotImplementedError

    def prefix(self, n: int) -> BitString:
        return BitString.from_bits(self.bit(k) for k in range(1, n + 1))


class ExplicitBitSource(BitSource):
    def __init__(self, bits: BitString):
        self._bits = bits
        self.limit = len(bits)

    def bit(self, k: int) -> int:
        if k < 1:
            raise ValueError("bit positions are 1-based")
        if k > self.limit:
            raise BitSourceRangeError(k, self.limit)
        return self._bits.bit(k)

    def __repr__(self) -> str:
        return f"ExplicitBitSource({self._bits.bits!r})"


_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    """One output of the SplitMix64 mixing function (public domain recurrence)."""
    z = (state + _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class SeededBitSource(BitSource):
    """Counter-mode SplitMix64 source: bit k is the low bit of mix(seed + k*gamma).

    Platform-independent and random-access: positions can be queried in any
    order with identical results.
    """

    def __init__(self, seed: int, limit: int | None = None):
        self._seed = seed & _MASK64
        self.limit = limit

    def bit(self, k: int) -> int:
        if k < 1:
            raise ValueError("bit positions are 1-based")
        if self.limit is not None and k > self.limit:
            raise BitSourceRangeError(k, self.limit)
        return splitmix64((self._seed + k * _GAMMA) & _MASK64) & 1

    def __repr__(self) -> str:
        return f"SeededBitSource(seed={self._seed}, limit={self.limit})"
