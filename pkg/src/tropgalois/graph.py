"""Metric graphs, their models, points, subdivisions and the path metric."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Iterator, Mapping

from .rational import RationalLike, as_rational, format_rational

__all__ = [
    "Edge",
    "Point",
    "Model",
    "Subdivision",
    "GraphError",
    "canonical_model",
    "loopless_model",
    "refine",
    "genus",
    "distance",
]


class GraphError(ValueError):
    """Raised for structurally invalid graphs or point references."""


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    length: Fraction

    @property
    def is_loop(self) -> bool:
        return self.tail == self.head

    def other_end(self, vertex: str) -> str:
        return self.head if vertex == self.tail else self.tail


@total_ordering
@dataclass(frozen=True)
class Point:
    """A point of a model: either a vertex, or an interior offset on an edge.

    Interior offsets are measured from the edge tail and lie strictly between
    0 and the edge length; :meth:`Model.point` canonicalizes endpoint offsets
    to vertex points so each point has exactly one representation.
    """

    vertex: str | None = None
    edge: str | None = None
    offset: Fraction = Fraction(0)

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None

    def _key(self) -> tuple:
        if self.vertex is not None:
            return (0, self.vertex, Fraction(0))
        return (1, self.edge, self.offset)

    def __lt__(self, other: "Point") -> bool:
        return self._key() < other._key()

    def __str__(self) -> str:
        if self.vertex is not None:
            return self.vertex
        return f"{self.edge}@{format_rational(self.offset)}"

    def __repr__(self) -> str:
        return f"Point({self})"


# A half-edge is (edge id, end) with end 0 at the tail and 1 at the head.
HalfEdge = tuple[str, int]


class Model:
    """A finite connected multigraph with exact positive edge lengths.

    Loops and parallel edges are allowed.  Instances are immutable.
    """

    def __init__(self, vertices: Iterable[str], edges: Iterable[Edge | tuple]):
        verts = sorted(set(vertices))
        if not verts:
            raise GraphError("a model needs at least one vertex")
        edge_map: dict[str, Edge] = {}
        for raw in edges:
            edge = raw if isinstance(raw, Edge) else Edge(raw[0], raw[1], raw[2], as_rational(raw[3]))
            if not isinstance(edge.length, Fraction):
                edge = Edge(edge.id, edge.tail, edge.head, as_rational(edge.length))
            if edge.id in edge_map:
                raise GraphError(f"duplicate edge id {edge.id!r}")
            if edge.tail not in verts or edge.head not in verts:
                raise GraphError(f"edge {edge.id!r} has an unknown endpoint")
            if edge.length <= 0:
                raise GraphError(f"edge {edge.id!r} has nonpositive length {edge.length}")
            edge_map[edge.id] = edge
        self._vertices = tuple(verts)
        self._edges = {eid: edge_map[eid] for eid in sorted(edge_map)}
        self._half_edges: dict[str, list[HalfEdge]] = {v: [] for v in verts}
        for edge in self._edges.values():
            self._half_edges[edge.tail].append((edge.id, 0))
            self._half_edges[edge.head].append((edge.id, 1))
        self._check_connected()

    def _check_connected(self) -> None:
        seen = {self._vertices[0]}
        stack = [self._vertices[0]]
        while stack:
            v = stack.pop()
            for eid, end in self._half_edges[v]:
                w = self._edges[eid].other_end(v)
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != len(self._vertices):
            raise GraphError("graph is disconnected")

    # -- structure -------------------------------------------------------
    @property
    def vertices(self) -> tuple[str, ...]:
        return self._vertices

    @property
    def edges(self) -> Mapping[str, Edge]:
        return self._edges

    def edge(self, eid: str) -> Edge:
        try:
            return self._edges[eid]
        except KeyError:
            raise GraphError(f"unknown edge {eid!r}") from None

    def half_edges(self, vertex: str) -> list[HalfEdge]:
        return list(self._half_edges[vertex])

    def valence(self, vertex: str) -> int:
        return len(self._half_edges[vertex])

    def point_valence(self, point: Point) -> int:
        return self.valence(point.vertex) if point.is_vertex else 2

    @property
    def genus(self) -> int:
        return len(self._edges) - len(self._vertices) + 1

    @property
    def total_length(self) -> Fraction:
        return sum((e.length for e in self._edges.values()), Fraction(0))

    def endpoint(self, eid: str, end: int) -> str:
        edge = self._edges[eid]
        return edge.tail if end == 0 else edge.head

    # -- points ----------------------------------------------------------
    def vertex_point(self, vertex: str) -> Point:
        if vertex not in self._half_edges:
            raise GraphError(f"unknown vertex {vertex!r}")
        return Point(vertex=vertex)

    def point(self, edge: str, offset: RationalLike) -> Point:
        e = self.edge(edge)
        t = as_rational(offset)
        if t < 0 or t > e.length:
            raise GraphError(f"offset {t} outside edge {edge!r} of length {e.length}")
        if t == 0:
            return Point(vertex=e.tail)
        if t == e.length:
            return Point(vertex=e.head)
        return Point(edge=edge, offset=t)

    def midpoint(self, edge: str) -> Point:
        return self.point(edge, self.edge(edge).length / 2)

    def check_point(self, point: Point) -> Point:
        if point.is_vertex:
            return self.vertex_point(point.vertex)
        canonical = self.point(point.edge, point.offset)
        if canonical != point:
            raise GraphError(f"point {point} is not in canonical form")
        return point

    def parse_point(self, text: str) -> Point:
        """Parse ``"x"`` (a vertex) or ``"a@1/2"`` (offset 1/2 along edge a)."""
        text = text.strip()
        if text in self._half_edges:
            return Point(vertex=text)
        if "@" in text:
            eid, _, off = text.rpartition("@")
            return self.point(eid, as_rational(off))
        raise GraphError(f"unknown point {text!r}")

    def directions(self, point: Point) -> list[HalfEdge]:
        """Germs of edges leaving ``point``; interior points have two."""
        if point.is_vertex:
            return self.half_edges(point.vertex)
        return [(point.edge, 1), (point.edge, 0)]

    # -- metric ----------------------------------------------------------
    def vertex_distances(self, sources: Mapping[str, Fraction]) -> dict[str, Fraction]:
        """Multi-source Dijkstra over vertices with initial distances."""
        dist: dict[str, Fraction] = {}
        heap = [(d, v) for v, d in sources.items()]
        heapq.heapify(heap)
        while heap:
            d, v = heapq.heappop(heap)
            if v in dist:
                continue
            dist[v] = d
            for eid, _ in self._half_edges[v]:
                edge = self._edges[eid]
                w = edge.other_end(v)
                if w not in dist:
                    heapq.heappush(heap, (d + edge.length, w))
        return dist

    def _seed(self, point: Point) -> dict[str, Fraction]:
        if point.is_vertex:
            return {point.vertex: Fraction(0)}
        edge = self._edges[point.edge]
        seeds = {edge.tail: point.offset}
        seeds[edge.head] = min(seeds.get(edge.head, edge.length), edge.length - point.offset)
        return seeds

    def distance(self, x: Point, y: Point) -> Fraction:
        x, y = self.check_point(x), self.check_point(y)
        if x == y:
            return Fraction(0)
        dist = self.vertex_distances(self._seed(x))
        if y.is_vertex:
            return dist[y.vertex]
        edge = self._edges[y.edge]
        best = min(dist[edge.tail] + y.offset, dist[edge.head] + edge.length - y.offset)
        if x.edge == y.edge:
            best = min(best, abs(x.offset - y.offset))
        return best

    # -- misc ------------------------------------------------------------
    def same_as(self, other: "Model") -> bool:
        return self._vertices == other._vertices and self._edges == other._edges

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Model) and self.same_as(other)

    def __hash__(self) -> int:
        return hash((self._vertices, tuple(self._edges.values())))

    def __repr__(self) -> str:
        return f"Model(|V|={len(self._vertices)}, |E|={len(self._edges)}, genus={self.genus})"

    def lattice_points(self, spacing: Fraction) -> list[Point]:
        """All points whose offset is a multiple of ``spacing``, plus vertices."""
        pts = [Point(vertex=v) for v in self._vertices]
        for eid, edge in self._edges.items():
            steps = edge.length / spacing
            if steps.denominator != 1:
                raise GraphError(f"spacing {spacing} does not divide edge {eid!r}")
            pts.extend(Point(edge=eid, offset=k * spacing) for k in range(1, int(steps)))
        return pts


def genus(model: Model) -> int:
    return model.genus


def distance(model: Model, x: Point, y: Point) -> Fraction:
    return model.distance(x, y)


# ---------------------------------------------------------------------------
# canonical and loopless models
# ---------------------------------------------------------------------------


def canonical_model(raw: Model) -> Model:
    """Suppress valence-2 vertices; a circle keeps its least vertex as marker."""
    vertices = set(raw.vertices)
    edges = {eid: e for eid, e in raw.edges.items()}
    if all(raw.valence(v) == 2 for v in vertices) and edges:
        marker = min(vertices)
        return Model([marker], [Edge(min(edges), marker, marker, raw.total_length)])

    def incident(v: str) -> list[tuple[str, int]]:
        out = []
        for eid, e in sorted(edges.items()):
            if e.tail == v:
                out.append((eid, 0))
            if e.head == v:
                out.append((eid, 1))
        return out

    changed = True
    while changed:
        changed = False
        for v in sorted(vertices):
            inc = incident(v)
            if len(inc) != 2 or inc[0][0] == inc[1][0]:
                continue
            (id1, end1), (id2, end2) = inc
            e1, e2 = edges.pop(id1), edges.pop(id2)
            start = e1.head if end1 == 0 else e1.tail
            stop = e2.head if end2 == 0 else e2.tail
            new_id = min(id1, id2)
            edges[new_id] = Edge(new_id, start, stop, e1.length + e2.length)
            vertices.discard(v)
            changed = True
            break
    return Model(vertices, edges.values())


@dataclass(frozen=True)
class Subdivision:
    """A refinement ``child`` of ``parent`` obtained by inserting points.

    ``pieces`` maps every child edge to (parent edge, start, end) with the
    child edge oriented like its parent.  ``new_vertices`` maps inserted
    child vertices to the parent points they represent.
    """

    parent: Model
    child: Model
    pieces: Mapping[str, tuple[str, Fraction, Fraction]]
    new_vertices: Mapping[str, Point]
    _by_parent: Mapping[str, tuple[tuple[Fraction, Fraction, str], ...]] = field(repr=False, default=None)

    def __post_init__(self):
        grouped: dict[str, list] = {}
        for cid, (pid, a, b) in self.pieces.items():
            grouped.setdefault(pid, []).append((a, b, cid))
        object.__setattr__(self, "_by_parent", {k: tuple(sorted(v)) for k, v in grouped.items()})

    @property
    def is_identity(self) -> bool:
        return not self.new_vertices

    def parent_pieces(self, parent_edge: str) -> tuple[tuple[Fraction, Fraction, str], ...]:
        return self._by_parent[parent_edge]

    def to_child(self, point: Point) -> Point:
        if point.is_vertex:
            return Point(vertex=point.vertex)
        for a, b, cid in self._by_parent[point.edge]:
            if point.offset == a:
                return self.child.point(cid, 0)
            if a < point.offset < b:
                return Point(edge=cid, offset=point.offset - a)
            if point.offset == b:
                return self.child.point(cid, b - a)
        raise GraphError(f"point {point} not covered by subdivision")

    def to_parent(self, point: Point) -> Point:
        if point.is_vertex:
            if point.vertex in self.new_vertices:
                return self.new_vertices[point.vertex]
            return Point(vertex=point.vertex)
        pid, a, _ = self.pieces[point.edge]
        return self.parent.point(pid, a + point.offset)

    def compose(self, inner: "Subdivision") -> "Subdivision":
        """Given ``inner`` refining ``self.child``, return the refinement of ``self.parent``."""
        pieces = {}
        for cid, (mid, a, b) in inner.pieces.items():
            pid, s, _ = self.pieces[mid]
            pieces[cid] = (pid, s + a, s + b)
        new_vertices = {}
        for v in inner.child.vertices:
            p = self.to_parent(inner.to_parent(Point(vertex=v)))
            if not p.is_vertex or p.vertex != v:
                new_vertices[v] = p
        return Subdivision(self.parent, inner.child, pieces, new_vertices)


def _vertex_name(edge: str, offset: Fraction) -> str:
    return f"{edge}@{format_rational(offset)}"


def refine(model: Model, points: Iterable[Point]) -> Subdivision:
    """Insert ``points`` as vertices; untouched edges keep their ids."""
    cuts: dict[str, set[Fraction]] = {}
    for p in points:
        p = model.check_point(p)
        if not p.is_vertex:
            cuts.setdefault(p.edge, set()).add(p.offset)
    vertices = list(model.vertices)
    edges: list[Edge] = []
    pieces: dict[str, tuple[str, Fraction, Fraction]] = {}
    new_vertices: dict[str, Point] = {}
    taken = set(model.vertices)
    for eid, edge in model.edges.items():
        offsets = sorted(cuts.get(eid, ()))
        if not offsets:
            edges.append(edge)
            pieces[eid] = (eid, Fraction(0), edge.length)
            continue
        names = [edge.tail]
        for t in offsets:
            name = _vertex_name(eid, t)
            if name in taken:
                raise GraphError(f"vertex name clash while refining: {name!r}")
            taken.add(name)
            vertices.append(name)
            new_vertices[name] = Point(edge=eid, offset=t)
            names.append(name)
        names.append(edge.head)
        bounds = [Fraction(0), *offsets, edge.length]
        for i in range(len(bounds) - 1):
            cid = f"{eid}#{i}"
            edges.append(Edge(cid, names[i], names[i + 1], bounds[i + 1] - bounds[i]))
            pieces[cid] = (eid, bounds[i], bounds[i + 1])
    return Subdivision(model, Model(vertices, edges), pieces, new_vertices)


def loopless_model(model: Model) -> Subdivision:
    return refine(model, [model.midpoint(eid) for eid, e in model.edges.items() if e.is_loop])


def recognize_subdivision(parent: Model, child: Model) -> Subdivision:
    """Rebuild the subdivision relation from the naming scheme used by :func:`refine`."""
    points = []
    for v in child.vertices:
        if v in parent.edges or v in parent.vertices:
            continue
        eid, _, off = v.rpartition("@")
        if eid not in parent.edges:
            raise GraphError(f"child vertex {v!r} does not name a point of the parent")
        points.append(parent.point(eid, as_rational(off)))
    sub = refine(parent, points)
    if not sub.child.same_as(child):
        raise GraphError("child model is not the refinement it claims to be")
    return sub


def iter_edge_pairs(model: Model) -> Iterator[tuple[str, str]]:
    ids = list(model.edges)
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            yield a, b
