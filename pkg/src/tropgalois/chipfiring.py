"""Closed subgraphs, chip-firing moves, and decomposition into firings."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .divisors import Divisor
from .functions import RationalFunction, _combine
from .graph import GraphError, Model, Point, refine
from .rational import RationalLike, as_rational, rational_gcd

__all__ = [
    "ClosedSubgraph",
    "chip_firing",
    "can_fire",
    "canonical_divisor",
    "Decomposition",
    "decompose_into_chip_firings",
    "INFINITE",
]

INFINITE = None  # firing length sentinel: CF(S, +inf) = -dist(., S)

Interval = tuple[Fraction, Fraction]


def _merge(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
    out: list[list[Fraction]] = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


class ClosedSubgraph:
    """A compact subset of a model: vertices plus closed intervals on edges.

    Isolated interior points are degenerate intervals ``(t, t)``.
    """

    __slots__ = ("model", "vertices", "intervals")

    def __init__(
        self,
        model: Model,
        vertices: Iterable[str] = (),
        intervals: Mapping[str, Iterable[tuple[RationalLike, RationalLike]]] | None = None,
    ):
        verts = set(vertices)
        table: dict[str, tuple[Interval, ...]] = {}
        for eid, spans in (intervals or {}).items():
            edge = model.edge(eid)
            cleaned = []
            for a, b in spans:
                a, b = as_rational(a), as_rational(b)
                if not 0 <= a <= b <= edge.length:
                    raise GraphError(f"interval [{a}, {b}] not inside edge {eid!r}")
                if a == 0:
                    verts.add(edge.tail)
                if b == edge.length:
                    verts.add(edge.head)
                if a == b and (a == 0 or a == edge.length):
                    continue
                cleaned.append((a, b))
            if cleaned:
                table[eid] = _merge(cleaned)
        unknown = verts - set(model.vertices)
        if unknown:
            raise GraphError(f"unknown vertices {sorted(unknown)}")
        if not verts and not table:
            raise GraphError("closed subgraph must be nonempty")
        self.model = model
        self.vertices = frozenset(verts)
        self.intervals = {k: table[k] for k in sorted(table)}

    @classmethod
    def whole(cls, model: Model) -> "ClosedSubgraph":
        return cls(model, model.vertices, {eid: [(0, e.length)] for eid, e in model.edges.items()})

    @classmethod
    def from_points(cls, model: Model, points: Iterable[Point]) -> "ClosedSubgraph":
        verts, spans = [], {}
        for p in points:
            p = model.check_point(p)
            if p.is_vertex:
                verts.append(p.vertex)
            else:
                spans.setdefault(p.edge, []).append((p.offset, p.offset))
        return cls(model, verts, spans)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, ClosedSubgraph)
            and self.model.same_as(other.model)
            and self.vertices == other.vertices
            and self.intervals == other.intervals
        )

    def __hash__(self) -> int:
        return hash((self.vertices, tuple(self.intervals.items())))

    def contains(self, point: Point) -> bool:
        if point.is_vertex:
            return point.vertex in self.vertices
        return any(a <= point.offset <= b for a, b in self.intervals.get(point.edge, ()))

    def is_whole(self) -> bool:
        return all(
            self.intervals.get(eid) == ((Fraction(0), e.length),) for eid, e in self.model.edges.items()
        ) and len(self.vertices) == len(self.model.vertices)

    def _covers_germ(self, eid: str, end: int) -> bool:
        length = self.model.edge(eid).length
        spans = self.intervals.get(eid, ())
        if end == 0:
            return any(a == 0 and b > 0 for a, b in spans)
        return any(b == length and a < length for a, b in spans)

    def boundary(self) -> dict[Point, int]:
        """Boundary points with the number of germs pointing out of the subgraph."""
        out: dict[Point, int] = {}
        for v in sorted(self.vertices):
            count = sum(1 for eid, end in self.model.half_edges(v) if not self._covers_germ(eid, end))
            if count:
                out[Point(vertex=v)] = count
        for eid, spans in self.intervals.items():
            length = self.model.edge(eid).length
            for a, b in spans:
                if a == b:
                    out[Point(edge=eid, offset=a)] = 2
                    continue
                if a > 0:
                    out[Point(edge=eid, offset=a)] = 1
                if b < length:
                    out[Point(edge=eid, offset=b)] = 1
        return out

    def distance_function(self) -> RationalFunction:
        """dist(., S) as a piecewise-linear function (slopes in {-1, 0, 1})."""
        seeds: dict[str, Fraction] = {v: Fraction(0) for v in self.vertices}
        for eid, spans in self.intervals.items():
            edge = self.model.edge(eid)
            seeds[edge.tail] = min(seeds.get(edge.tail, spans[0][0]), spans[0][0])
            tail_gap = edge.length - spans[-1][1]
            seeds[edge.head] = min(seeds.get(edge.head, tail_gap), tail_gap)
        dist = self.model.vertex_distances(seeds)
        knots = {}
        for eid, edge in self.model.edges.items():
            length = edge.length
            candidates = [
                ((Fraction(0), dist[edge.tail]), (length, dist[edge.tail] + length)),
                ((Fraction(0), dist[edge.head] + length), (length, dist[edge.head])),
            ]
            for a, b in self.intervals.get(eid, ()):
                ks = {(Fraction(0), a), (a, Fraction(0)), (b, Fraction(0)), (length, length - b)}
                candidates.append(tuple(sorted(ks)))
            acc = candidates[0]
            for other in candidates[1:]:
                acc = tuple(_combine(acc, other, min, True))
            knots[eid] = acc
        if not self.model.edges:
            return RationalFunction.constant(self.model, 0)
        return RationalFunction(self.model, knots)

    def to_json(self) -> dict:
        from .rational import format_rational

        return {
            "vertices": sorted(self.vertices),
            "intervals": {
                eid: [[format_rational(a), format_rational(b)] for a, b in spans] for eid, spans in self.intervals.items()
            },
        }

    def __repr__(self) -> str:
        return f"ClosedSubgraph(vertices={sorted(self.vertices)}, intervals={self.intervals})"


def chip_firing(subgraph: ClosedSubgraph, length: RationalLike | None) -> RationalFunction:
    """CF(S, l)(x) = -min(l, dist(x, S)); ``length=INFINITE`` drops the clamp."""
    dist = subgraph.distance_function()
    if length is INFINITE:
        return -dist
    l = as_rational(length)
    if l <= 0:
        raise ValueError("firing length must be positive")
    return -(dist.minimum_with(RationalFunction.constant(subgraph.model, l)))


def can_fire(subgraph: ClosedSubgraph, divisor: Divisor) -> bool:
    """Each boundary point holds at least as many chips as germs leaving the subgraph."""
    return all(divisor[p] >= need for p, need in subgraph.boundary().items())


def canonical_divisor(model: Model) -> Divisor:
    from .divisors import canonical_divisor as _canonical

    return _canonical(model)


@dataclass(frozen=True)
class Decomposition:
    """f = constant + sum of coefficient * CF(subgraph, length)."""

    terms: tuple[tuple[ClosedSubgraph, Fraction, int], ...]
    constant: Fraction

    def evaluate(self, model: Model) -> RationalFunction:
        total = RationalFunction.constant(model, self.constant)
        for sub, length, coeff in self.terms:
            total = total + chip_firing(sub, length) * coeff
        return total


def decompose_into_chip_firings(f: RationalFunction) -> Decomposition:
    """Write ``f`` as a constant plus integer multiples of chip-firing moves.

    On a uniform lattice fine enough that ``f`` is linear on every lattice
    edge, f = max f + sum_k CF(S_k, h) where S_k runs over the superlevel
    sets {f >= min f + k h} of the lattice vertices.
    """
    model = f.model
    if f.is_constant():
        return Decomposition((), f.min_value())
    offsets = [e.length for e in model.edges.values()]
    for eid in model.edges:
        offsets.extend(t for t, _ in f.knots(eid))
    h = rational_gcd(offsets)
    lattice = refine(model, [p for p in model.lattice_points(h) if not p.is_vertex])
    child = lattice.child
    values = {v: f.value(lattice.to_parent(Point(vertex=v))) for v in child.vertices}
    low = min(values.values())
    levels = int((max(values.values()) - low) / h)
    merged: dict[ClosedSubgraph, int] = {}
    for k in range(1, levels + 1):
        upper = {v for v, val in values.items() if val >= low + k * h}
        verts, spans = [], {}
        for v in upper:
            p = lattice.to_parent(Point(vertex=v))
            if p.is_vertex:
                verts.append(p.vertex)
            else:
                spans.setdefault(p.edge, []).append((p.offset, p.offset))
        for cid, edge in child.edges.items():
            if edge.tail in upper and edge.head in upper:
                pid, a, b = lattice.pieces[cid]
                spans.setdefault(pid, []).append((a, b))
        sub = ClosedSubgraph(model, verts, spans)
        merged[sub] = merged.get(sub, 0) + 1
    terms = tuple((sub, h, c) for sub, c in merged.items())
    return Decomposition(terms, low + levels * h)
