"""Exact rational helpers shared by every module.

All lengths, offsets and function values are :class:`fractions.Fraction`.
Nothing in the package ever touches a float.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Iterable, Union

RationalLike = Union[Fraction, int, str]

__all__ = [
    "RationalLike",
    "as_rational",
    "format_rational",
    "rational_gcd",
    "is_integral",
]


def as_rational(value: RationalLike) -> Fraction:
    """Coerce ``value`` to a Fraction, rejecting floats and zero denominators."""
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty rational literal")
        if any(ch in text for ch in ".eE"):
            raise ValueError(f"decimal literals are not exact rationals: {value!r}")
        num, _, den = text.partition("/")
        try:
            numerator = int(num)
            denominator = int(den) if den else 1
        except ValueError:
            raise ValueError(f"malformed rational {value!r}") from None
        if denominator == 0:
            raise ValueError(f"zero denominator in {value!r}")
        return Fraction(numerator, denominator)
    raise TypeError(f"cannot interpret {type(value).__name__} as an exact rational")


def format_rational(value: Fraction | int) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def rational_gcd(values: Iterable[Fraction | int]) -> Fraction:
    """Largest rational h such that every value is an integer multiple of h.

    Zeros are ignored; an all-zero input gives 0.
    """
    nonzero = [Fraction(v) for v in values if v != 0]
    if not nonzero:
        return Fraction(0)
    common = reduce(lcm, (v.denominator for v in nonzero))
    scaled = reduce(gcd, (abs(v.numerator) * (common // v.denominator) for v in nonzero))
    return Fraction(scaled, common)


def is_integral(value: Fraction) -> bool:
    return value.denominator == 1
