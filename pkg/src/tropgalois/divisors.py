"""Divisors: finitely supported integer combinations of points."""

from __future__ import annotations

import re
from typing import Iterable, Iterator, Mapping

from .graph import Model, Point

__all__ = ["Divisor", "parse_divisor", "canonical_divisor"]


class Divisor(Mapping[Point, int]):
    """An immutable finitely supported map from points to integers."""

    __slots__ = ("_coeffs", "_hash")

    def __init__(self, coefficients: Mapping[Point, int] | Iterable[tuple[Point, int]] = ()):
        items = coefficients.items() if isinstance(coefficients, Mapping) else coefficients
        acc: dict[Point, int] = {}
        for point, coeff in items:
            if not isinstance(coeff, int) or isinstance(coeff, bool):
                raise TypeError("divisor coefficients must be integers")
            acc[point] = acc.get(point, 0) + coeff
        self._coeffs = {p: c for p, c in sorted(acc.items()) if c != 0}
        self._hash = None

    @classmethod
    def of(cls, *points: Point) -> "Divisor":
        return cls((p, 1) for p in points)

    def __getitem__(self, point: Point) -> int:
        return self._coeffs.get(point, 0)

    def __iter__(self) -> Iterator[Point]:
        return iter(self._coeffs)

    def __len__(self) -> int:
        return len(self._coeffs)

    def __contains__(self, point: object) -> bool:
        return point in self._coeffs

    @property
    def degree(self) -> int:
        return sum(self._coeffs.values())

    @property
    def support(self) -> tuple[Point, ...]:
        return tuple(self._coeffs)

    @property
    def is_effective(self) -> bool:
        return all(c > 0 for c in self._coeffs.values())

    def __add__(self, other: "Divisor") -> "Divisor":
        return Divisor([*self._coeffs.items(), *other._coeffs.items()])

    def __sub__(self, other: "Divisor") -> "Divisor":
        return Divisor([*self._coeffs.items(), *((p, -c) for p, c in other._coeffs.items())])

    def __neg__(self) -> "Divisor":
        return Divisor((p, -c) for p, c in self._coeffs.items())

    def __mul__(self, k: int) -> "Divisor":
        return Divisor((p, k * c) for p, c in self._coeffs.items())

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Divisor):
            return self._coeffs == other._coeffs
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(tuple(self._coeffs.items()))
        return self._hash

    def __str__(self) -> str:
        if not self._coeffs:
            return "0"
        parts = []
        for point, c in self._coeffs.items():
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            term = str(point) if mag == 1 else f"{mag}*{point}"
            parts.append((sign, term))
        text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, term in parts[1:]:
            text += f" {sign} {term}"
        return text

    def __repr__(self) -> str:
        return f"Divisor({self})"

    def minimum_with(self, other: "Divisor") -> "Divisor":
        keys = set(self) | set(other)
        return Divisor((p, min(self[p], other[p])) for p in keys)


_TERM = re.compile(r"\s*([+-]?)\s*(?:(\d+)\s*\*\s*|(\d+)\s+)?([^\s+*-][^\s+*-]*)\s*")


def parse_divisor(model: Model, text: str) -> Divisor:
    """Parse text such as ``"x + y"``, ``"2*x - a@1/2"`` or ``"0"``."""
    text = text.strip()
    if text in ("", "0"):
        return Divisor()
    coeffs: list[tuple[Point, int]] = []
    pos = 0
    while pos < len(text):
        match = _TERM.match(text, pos)
        if not match or match.end() == pos:
            raise ValueError(f"cannot parse divisor near {text[pos:]!r}")
        sign, count, spaced, name = match.groups()
        count = count or spaced
        if pos > 0 and not sign:
            raise ValueError(f"missing '+' or '-' before {name!r}")
        k = int(count) if count else 1
        coeffs.append((model.parse_point(name), -k if sign == "-" else k))
        pos = match.end()
    return Divisor(coeffs)


def canonical_divisor(model: Model) -> Divisor:
    """K = sum of (valence - 2) x over the vertices of the model."""
    return Divisor((Point(vertex=v), model.valence(v) - 2) for v in model.vertices)
