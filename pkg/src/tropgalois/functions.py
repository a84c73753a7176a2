"""Piecewise-linear rational functions with integer slopes on a model.

A function stores, for every edge of its reference model, the knots
``(offset, value)`` of a continuous piecewise-linear map on ``[0, length]``.
Knot lists always include both endpoints and are kept minimal: a knot
between two pieces of equal slope is dropped, so equal functions have equal
knot lists.
"""

from __future__ import annotations

from bisect import bisect_right
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .divisors import Divisor
from .graph import GraphError, HalfEdge, Model, Point, Subdivision
from .rational import RationalLike, as_rational, format_rational

__all__ = [
    "RationalFunction",
    "BOTTOM",
    "tropical_add",
    "tropical_scale",
    "ord_at",
    "div",
]

Knots = tuple[tuple[Fraction, Fraction], ...]


class _Bottom:
    """The absorbing element -infinity of a semimodule R(D)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "BOTTOM"


BOTTOM = _Bottom()


def _simplify(knots: Sequence[tuple[Fraction, Fraction]]) -> Knots:
    out = [knots[0]]
    for i in range(1, len(knots)):
        t, v = knots[i]
        if t == out[-1][0]:
            if v != out[-1][1]:
                raise GraphError("discontinuous knot data")
            continue
        if len(out) >= 2:
            (t0, v0), (t1, v1) = out[-2], out[-1]
            if (v1 - v0) * (t - t1) == (v - v1) * (t1 - t0):
                out[-1] = (t, v)
                continue
        out.append((t, v))
    return tuple(out)


def _eval(knots: Knots, t: Fraction) -> Fraction:
    i = bisect_right(knots, t, key=lambda kv: kv[0]) - 1
    if i >= len(knots) - 1:
        return knots[-1][1]
    (t0, v0), (t1, v1) = knots[i], knots[i + 1]
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0)


def _combine(a: Knots, b: Knots, op: Callable[[Fraction, Fraction], Fraction], crossings: bool) -> list:
    positions = sorted({t for t, _ in a} | {t for t, _ in b})
    if crossings:
        extra = []
        for t0, t1 in zip(positions, positions[1:]):
            d0 = _eval(a, t0) - _eval(b, t0)
            d1 = _eval(a, t1) - _eval(b, t1)
            if d0 * d1 < 0:
                extra.append(t0 + (t1 - t0) * d0 / (d0 - d1))
        positions = sorted(set(positions) | set(extra))
    return [(t, op(_eval(a, t), _eval(b, t))) for t in positions]


class RationalFunction:
    """A continuous piecewise-linear function with integer slopes."""

    __slots__ = ("model", "_knots", "_hash", "_vertex_values")

    def __init__(self, model: Model, knots: Mapping[str, Iterable[tuple[RationalLike, RationalLike]]]):
        self.model = model
        table: dict[str, Knots] = {}
        for eid, edge in model.edges.items():
            if eid not in knots:
                raise GraphError(f"function has no data on edge {eid!r}")
            raw = sorted((as_rational(t), as_rational(v)) for t, v in knots[eid])
            if not raw or raw[0][0] != 0 or raw[-1][0] != edge.length:
                raise GraphError(f"knots on {eid!r} must span [0, {edge.length}]")
            simple = _simplify(raw)
            for (t0, v0), (t1, v1) in zip(simple, simple[1:]):
                if ((v1 - v0) / (t1 - t0)).denominator != 1:
                    raise GraphError(f"non-integer slope on edge {eid!r}")
            table[eid] = simple
        self._knots = table
        self._hash = None
        self._check_vertices()

    def _check_vertices(self) -> None:
        seen: dict[str, Fraction] = {}
        for eid, edge in self.model.edges.items():
            ks = self._knots[eid]
            for v, val in ((edge.tail, ks[0][1]), (edge.head, ks[-1][1])):
                if seen.setdefault(v, val) != val:
                    raise GraphError(f"function is discontinuous at vertex {v!r}")
        self._vertex_values = seen

    # -- constructors ----------------------------------------------------
    @classmethod
    def constant(cls, model: Model, value: RationalLike = 0) -> "RationalFunction":
        c = as_rational(value)
        return cls(model, {eid: [(0, c), (e.length, c)] for eid, e in model.edges.items()})

    @classmethod
    def from_vertex_values(cls, sub: Subdivision, values: Mapping[str, Fraction]) -> "RationalFunction":
        """Interpolate values given on the vertices of ``sub.child`` linearly along child edges."""
        knots: dict[str, list] = {eid: [] for eid in sub.parent.edges}
        for cid, edge in sub.child.edges.items():
            pid, a, b = sub.pieces[cid]
            knots[pid].append((a, Fraction(values[edge.tail])))
            knots[pid].append((b, Fraction(values[edge.head])))
        return cls(sub.parent, {k: sorted(set(v)) for k, v in knots.items()})

    @classmethod
    def from_child(cls, sub: Subdivision, f: "RationalFunction") -> "RationalFunction":
        knots: dict[str, list] = {eid: [] for eid in sub.parent.edges}
        for cid, ks in f._knots.items():
            pid, a, _ = sub.pieces[cid]
            knots[pid].extend((a + t, v) for t, v in ks)
        return cls(sub.parent, {k: sorted(set(v)) for k, v in knots.items()})

    def to_child(self, sub: Subdivision) -> "RationalFunction":
        if sub.parent is not self.model and not sub.parent.same_as(self.model):
            raise GraphError("subdivision does not refine this function's model")
        knots = {}
        for cid, (pid, a, b) in sub.pieces.items():
            ks = self._knots[pid]
            inner = [(t - a, v) for t, v in ks if a < t < b]
            knots[cid] = [(Fraction(0), _eval(ks, a)), *inner, (b - a, _eval(ks, b))]
        return RationalFunction(sub.child, knots)

    # -- access ----------------------------------------------------------
    def knots(self, eid: str) -> Knots:
        return self._knots[eid]

    def vertex_value(self, vertex: str) -> Fraction:
        if vertex in self._vertex_values:
            return self._vertex_values[vertex]
        if self.model.edges:
            raise GraphError(f"unknown vertex {vertex!r}")
        return Fraction(0)

    def value(self, point: Point) -> Fraction:
        if point.is_vertex:
            return self.vertex_value(point.vertex)
        return _eval(self._knots[point.edge], point.offset)

    __call__ = value

    def pieces(self, eid: str) -> list[tuple[Fraction, Fraction, int]]:
        ks = self._knots[eid]
        return [(t0, t1, int((v1 - v0) / (t1 - t0))) for (t0, v0), (t1, v1) in zip(ks, ks[1:])]

    def slope_leaving(self, point: Point, direction: HalfEdge) -> int:
        """Outgoing slope at ``point`` into the germ ``direction``."""
        eid, end = direction
        if point.is_vertex:
            t = Fraction(0) if end == 0 else self.model.edge(eid).length
        else:
            t = point.offset
        pieces = self.pieces(eid)
        if end == 0:
            # moving toward increasing offset
            for t0, t1, s in pieces:
                if t0 <= t < t1:
                    return s
        else:
            for t0, t1, s in pieces:
                if t0 < t <= t1:
                    return -s
        raise GraphError(f"no germ {direction} at {point}")

    def ord_at(self, point: Point) -> int:
        point = self.model.check_point(point)
        return sum(self.slope_leaving(point, d) for d in self.model.directions(point))

    def breakpoints(self) -> list[Point]:
        out = []
        for eid, ks in self._knots.items():
            out.extend(Point(edge=eid, offset=t) for t, _ in ks[1:-1])
        return out

    def div(self) -> Divisor:
        pts = [Point(vertex=v) for v in self.model.vertices] + self.breakpoints()
        return Divisor((p, self.ord_at(p)) for p in pts)

    def max_abs_slope(self) -> int:
        return max((abs(s) for eid in self._knots for _, _, s in self.pieces(eid)), default=0)

    # -- arithmetic ------------------------------------------------------
    def _zip(self, other: "RationalFunction", op, crossings: bool) -> "RationalFunction":
        if other.model is not self.model and not other.model.same_as(self.model):
            raise GraphError("functions live on different models")
        return RationalFunction(
            self.model,
            {eid: _combine(self._knots[eid], other._knots[eid], op, crossings) for eid in self._knots},
        )

    def __add__(self, other: "RationalFunction") -> "RationalFunction":
        return self._zip(other, lambda a, b: a + b, False)

    def __sub__(self, other: "RationalFunction") -> "RationalFunction":
        return self._zip(other, lambda a, b: a - b, False)

    def __neg__(self) -> "RationalFunction":
        return self.map_values(lambda v: -v)

    def __mul__(self, k: int) -> "RationalFunction":
        if not isinstance(k, int):
            raise TypeError("functions may only be scaled by integers")
        return self.map_values(lambda v: k * v)

    __rmul__ = __mul__

    def map_values(self, fn: Callable[[Fraction], Fraction]) -> "RationalFunction":
        return RationalFunction(self.model, {eid: [(t, fn(v)) for t, v in ks] for eid, ks in self._knots.items()})

    def shift(self, c: RationalLike) -> "RationalFunction":
        c = as_rational(c)
        return self.map_values(lambda v: v + c)

    def maximum_with(self, other: "RationalFunction") -> "RationalFunction":
        return self._zip(other, max, True)

    def minimum_with(self, other: "RationalFunction") -> "RationalFunction":
        return self._zip(other, min, True)

    def min_value(self) -> Fraction:
        values = [v for ks in self._knots.values() for _, v in ks]
        return min(values) if values else self.vertex_value(self.model.vertices[0])

    def max_value(self) -> Fraction:
        values = [v for ks in self._knots.values() for _, v in ks]
        return max(values) if values else self.vertex_value(self.model.vertices[0])

    def anchored(self) -> "RationalFunction":
        """Shift so the value at the lexicographically least vertex is 0."""
        return self.shift(-self.vertex_value(self.model.vertices[0]))

    def is_constant(self) -> bool:
        return all(len(ks) == 2 and ks[0][1] == ks[1][1] for ks in self._knots.values()) and (
            len(set(self._vertex_values.values())) <= 1
        )

    def sample_points(self) -> list[Point]:
        """Vertices, knots and one interior point per linear piece."""
        pts = [Point(vertex=v) for v in self.model.vertices]
        for eid, ks in self._knots.items():
            for i, (t, _) in enumerate(ks):
                if 0 < t:
                    mid = (ks[i - 1][0] + t) / 2
                    pts.append(Point(edge=eid, offset=mid))
                if 0 < t < ks[-1][0]:
                    pts.append(Point(edge=eid, offset=t))
        return pts

    # -- identity --------------------------------------------------------
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return self.model.same_as(other.model) and self._knots == other._knots and (
            self._vertex_values == other._vertex_values
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(tuple(sorted(self._knots.items())))
        return self._hash

    def __repr__(self) -> str:
        parts = []
        for eid, ks in self._knots.items():
            parts.append(f"{eid}: " + " ".join(f"({format_rational(t)},{format_rational(v)})" for t, v in ks))
        return "RationalFunction{" + "; ".join(parts) + "}"

    # -- serialization ---------------------------------------------------
    def to_json(self) -> dict:
        anchor = self.model.vertices[0]
        edges = {}
        for eid in self._knots:
            pieces = self.pieces(eid)
            edges[eid] = {
                "breaks": [format_rational(t) for t, _, _ in pieces[1:]],
                "slopes": [s for _, _, s in pieces],
            }
        return {"anchor": {"vertex": anchor, "value": format_rational(self.vertex_value(anchor))}, "edges": edges}

    @classmethod
    def from_json(cls, model: Model, data: Mapping) -> "RationalFunction":
        anchor = data["anchor"]["vertex"]
        anchor_value = as_rational(data["anchor"]["value"])
        shapes = {}
        for eid, edge in model.edges.items():
            block = data["edges"][eid]
            breaks = [as_rational(b) for b in block["breaks"]]
            slopes = [int(s) for s in block["slopes"]]
            if len(slopes) != len(breaks) + 1:
                raise GraphError(f"edge {eid!r}: need one more slope than breakpoints")
            bounds = [Fraction(0), *breaks, edge.length]
            rel = [(Fraction(0), Fraction(0))]
            for i, s in enumerate(slopes):
                rel.append((bounds[i + 1], rel[-1][1] + s * (bounds[i + 1] - bounds[i])))
            shapes[eid] = rel
        # propagate absolute offsets from the anchor along a spanning search
        base: dict[str, Fraction] = {anchor: anchor_value}
        shift: dict[str, Fraction] = {}
        stack = [anchor]
        while stack:
            v = stack.pop()
            for eid, end in model.half_edges(v):
                if eid in shift:
                    continue
                rel = shapes[eid]
                shift[eid] = base[v] - (rel[0][1] if end == 0 else rel[-1][1])
                edge = model.edge(eid)
                for w, val in ((edge.tail, rel[0][1]), (edge.head, rel[-1][1])):
                    if w not in base:
                        base[w] = shift[eid] + val
                        stack.append(w)
        return cls(model, {eid: [(t, v + shift[eid]) for t, v in rel] for eid, rel in shapes.items()})


def tropical_add(f, g):
    """Pointwise maximum; the bottom element is neutral."""
    if f is BOTTOM:
        return g
    if g is BOTTOM:
        return f
    return f.maximum_with(g)


def tropical_scale(c: RationalLike, f):
    """Add the constant ``c``; the bottom element absorbs."""
    if f is BOTTOM:
        return BOTTOM
    return f.shift(c)


def ord_at(f: RationalFunction, x: Point) -> int:
    return f.ord_at(x)


def div(f: RationalFunction) -> Divisor:
    if f is BOTTOM:
        raise ValueError("the bottom element has no principal divisor")
    return f.div()
