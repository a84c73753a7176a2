"""Finite isometric group actions on models, quotients, and invariant linear systems."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .divisors import Divisor
from .functions import RationalFunction
from .graph import GraphError, Model, Point, Subdivision, refine
from .guard import DEFAULT_GUARD, ScaleGuard

__all__ = [
    "ActionError",
    "GroupElement",
    "IsometricAction",
    "ValidationReport",
    "QuotientResult",
    "validate_action",
    "v1_points",
    "invariant_part",
    "symmetrize",
    "invariant_generators",
    "quotient",
]


class ActionError(ValueError):
    """A proposed group action is not a valid isometric action."""


@dataclass(frozen=True)
class GroupElement:
    """An automorphism of a model: vertex images plus edge images with a reversal flag."""

    vertices: Mapping[str, str]
    edges: Mapping[str, tuple[str, bool]]
    _key: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", dict(sorted(self.vertices.items())))
        object.__setattr__(self, "edges", {k: (v[0], bool(v[1])) for k, v in sorted(self.edges.items())})
        object.__setattr__(self, "_key", (tuple(self.vertices.items()), tuple(self.edges.items())))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GroupElement) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __lt__(self, other: "GroupElement") -> bool:
        return self._key < other._key

    @classmethod
    def identity(cls, model: Model) -> "GroupElement":
        return cls({v: v for v in model.vertices}, {e: (e, False) for e in model.edges})

    @property
    def is_identity(self) -> bool:
        return all(k == v for k, v in self.vertices.items()) and all(k == t and not f for k, (t, f) in self.edges.items())

    def compose(self, inner: "GroupElement") -> "GroupElement":
        """self after inner."""
        verts = {v: self.vertices[w] for v, w in inner.vertices.items()}
        edges = {}
        for e, (e1, f1) in inner.edges.items():
            e2, f2 = self.edges[e1]
            edges[e] = (e2, f1 != f2)
        return GroupElement(verts, edges)

    def inverse(self) -> "GroupElement":
        return GroupElement({w: v for v, w in self.vertices.items()}, {t: (e, f) for e, (t, f) in self.edges.items()})

    def apply(self, point: Point, model: Model | None = None) -> Point:
        if point.is_vertex:
            return Point(vertex=self.vertices[point.vertex])
        target, flip = self.edges[point.edge]
        if not flip:
            return Point(edge=target, offset=point.offset)
        if model is None:
            raise GraphError("reversing an edge needs the model for its length")
        return model.point(target, model.edge(target).length - point.offset)

    def to_json(self) -> dict:
        return {
            "vertices": dict(self.vertices),
            "edges": {e: [t, f] for e, (t, f) in self.edges.items()},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "GroupElement":
        return cls(dict(data["vertices"]), {e: (v[0], v[1]) for e, v in data["edges"].items()})


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]


def _check_element(model: Model, g: GroupElement) -> list[str]:
    problems = []
    if set(g.vertices) != set(model.vertices) or set(g.vertices.values()) != set(model.vertices):
        problems.append("vertex map is not a permutation of the vertices")
        return problems
    if set(g.edges) != set(model.edges) or {t for t, _ in g.edges.values()} != set(model.edges):
        problems.append("edge map is not a permutation of the edges")
        return problems
    for eid, (target, flip) in g.edges.items():
        e, t = model.edge(eid), model.edge(target)
        if e.length != t.length:
            problems.append(f"edge {eid} (length {e.length}) sent to {target} (length {t.length})")
            continue
        ends = (t.head, t.tail) if flip else (t.tail, t.head)
        if (g.vertices[e.tail], g.vertices[e.head]) != ends:
            problems.append(f"edge {eid} sent to {target} with mismatched endpoints")
    return problems


def validate_action(model: Model, generators: Mapping[str, GroupElement] | Sequence[GroupElement]) -> ValidationReport:
    """Check that every generator is a length-preserving automorphism of ``model``.

    Group axioms then hold for the generated group: it is a finite group of
    permutations, closed by construction with identity and inverses.
    """
    items = generators.items() if isinstance(generators, Mapping) else enumerate(generators)
    violations = [f"{name}: {p}" for name, g in items for p in _check_element(model, g)]
    return ValidationReport(not violations, tuple(violations))


class IsometricAction:
    """A finite group acting on a model by length-preserving automorphisms."""

    def __init__(
        self,
        model: Model,
        generators: Mapping[str, GroupElement] | Sequence[GroupElement] = (),
        guard: ScaleGuard = DEFAULT_GUARD,
    ):
        gens = dict(generators) if isinstance(generators, Mapping) else {f"g{i}": g for i, g in enumerate(generators)}
        report = validate_action(model, gens)
        if not report.ok:
            raise ActionError("; ".join(report.violations))
        self.model = model
        self.named = gens
        ident = GroupElement.identity(model)
        seen = {ident}
        frontier = [ident]
        while frontier:
            nxt = []
            for h in frontier:
                for g in gens.values():
                    gh = g.compose(h)
                    if gh not in seen:
                        seen.add(gh)
                        nxt.append(gh)
                        guard.check("group order", len(seen), guard.max_group_order)
            frontier = nxt
        self.elements: tuple[GroupElement, ...] = (ident, *sorted(seen - {ident}))
        self._members = seen

    @classmethod
    def trivial(cls, model: Model) -> "IsometricAction":
        return cls(model, {})

    @classmethod
    def from_elements(cls, model: Model, elements: Iterable[GroupElement], guard: ScaleGuard = DEFAULT_GUARD) -> "IsometricAction":
        """The group generated by ``elements``, with a small greedy generating set."""
        pool = sorted(set(elements))
        gens: dict[str, GroupElement] = {}
        action = cls(model, gens, guard)
        for g in pool:
            if g not in action._members:
                gens[f"g{len(gens)}"] = g
                action = cls(model, dict(gens), guard)
        return action

    @property
    def generators(self) -> tuple[GroupElement, ...]:
        return tuple(self.named.values())

    @property
    def order(self) -> int:
        return len(self.elements)

    def apply(self, element: GroupElement, point: Point) -> Point:
        return element.apply(point, self.model)

    def orbit(self, point: Point) -> tuple[Point, ...]:
        point = self.model.check_point(point)
        return tuple(sorted({g.apply(point, self.model) for g in self.elements}))

    def stabilizer(self, point: Point) -> tuple[GroupElement, ...]:
        point = self.model.check_point(point)
        return tuple(g for g in self.elements if g.apply(point, self.model) == point)

    def edge_stabilizer(self, eid: str) -> tuple[GroupElement, ...]:
        """Elements fixing the edge pointwise."""
        return tuple(g for g in self.elements if g.edges[eid] == (eid, False))

    def vertex_orbits(self) -> list[tuple[str, ...]]:
        seen, out = set(), []
        for v in self.model.vertices:
            if v not in seen:
                orb = tuple(sorted({g.vertices[v] for g in self.elements}))
                seen.update(orb)
                out.append(orb)
        return out

    def edge_orbits(self) -> list[tuple[str, ...]]:
        seen, out = set(), []
        for e in self.model.edges:
            if e not in seen:
                orb = tuple(sorted({g.edges[e][0] for g in self.elements}))
                seen.update(orb)
                out.append(orb)
        return out

    def is_invariant_divisor(self, divisor: Divisor) -> bool:
        return all(divisor[g.apply(p, self.model)] == c for g in self.generators for p, c in divisor.items())

    def compose_function(self, f: RationalFunction, element: GroupElement) -> RationalFunction:
        """f o element."""
        knots = {}
        for eid, (target, flip) in element.edges.items():
            ks = f.knots(target)
            if flip:
                length = self.model.edge(target).length
                ks = [(length - t, v) for t, v in reversed(ks)]
            knots[eid] = ks
        return RationalFunction(self.model, knots)

    def is_invariant_function(self, f: RationalFunction) -> bool:
        return all(self.compose_function(f, g) == f for g in self.generators)

    def transport(self, sub: Subdivision) -> "IsometricAction":
        """The same action on a K-invariant refinement of the model."""
        if not sub.parent.same_as(self.model):
            raise ActionError("subdivision does not refine the acted-on model")
        child = sub.child

        def move(g: GroupElement) -> GroupElement:
            verts = {}
            for v in child.vertices:
                image = sub.to_child(g.apply(sub.to_parent(Point(vertex=v)), self.model))
                if not image.is_vertex:
                    raise ActionError(f"refinement is not invariant: {v} has a non-vertex image")
                verts[v] = image.vertex
            edges = {}
            for cid, (pid, a, b) in sub.pieces.items():
                target, flip = g.edges[pid]
                length = self.model.edge(pid).length
                lo, hi = (length - b, length - a) if flip else (a, b)
                match = [c for s, t, c in sub.parent_pieces(target) if (s, t) == (lo, hi)]
                if not match:
                    raise ActionError(f"refinement is not invariant along edge {pid}")
                edges[cid] = (match[0], flip)
            return GroupElement(verts, edges)

        return IsometricAction(child, {name: move(g) for name, g in self.named.items()})

    def __repr__(self) -> str:
        return f"IsometricAction(order={self.order}, generators={list(self.named)})"


# ---------------------------------------------------------------------------


def v1_points(action: IsometricAction) -> tuple[Point, ...]:
    """Points whose stabilizer differs from that of points arbitrarily close by.

    These are midpoints of reversed edges and vertices whose stabilizer is
    not the pointwise stabilizer of every incident edge.
    """
    model = action.model
    out = set()
    for eid, edge in model.edges.items():
        if any(g.edges[eid] == (eid, True) for g in action.elements):
            out.add(model.midpoint(eid))
    for v in model.vertices:
        kv = {g for g in action.elements if g.vertices[v] == v}
        for eid, _ in model.half_edges(v):
            if set(action.edge_stabilizer(eid)) != kv:
                out.add(Point(vertex=v))
                break
    return tuple(sorted(out))


def invariant_part(divisor: Divisor, action: IsometricAction) -> tuple[Divisor, Divisor]:
    """D1 = sum of orbit-minimal coefficients; returns (D1, D - D1)."""
    if not divisor.is_effective:
        raise ValueError("invariant_part needs an effective divisor")
    coeffs = {}
    for p in divisor:
        orbit = action.orbit(p)
        low = min(divisor[q] for q in orbit)
        if low:
            for q in orbit:
                coeffs[q] = low
    d1 = Divisor(coeffs)
    return d1, divisor - d1


def symmetrize(f: RationalFunction, action: IsometricAction) -> RationalFunction:
    """x -> max over the group of f(sigma x)."""
    out = f
    for g in action.elements[1:]:
        out = out.maximum_with(action.compose_function(f, g))
    return out


def invariant_generators(divisor: Divisor, action: IsometricAction, guard: ScaleGuard = DEFAULT_GUARD):
    """A generating set of the invariant part R(D)^K, pruned to its extremals."""
    from .linear_systems import GeneratingSet, generators, is_extremal

    model = action.model
    d1, _ = invariant_part(divisor, action)
    base = generators(d1, model, guard)
    sym = GeneratingSet.build(divisor, (symmetrize(f, action) for f in base), model)
    kept = [f for f in sym if is_extremal(f, d1, action, guard)]
    return GeneratingSet(divisor, tuple(kept), model)


# ---------------------------------------------------------------------------
# quotients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuotientResult:
    """Gamma/K with its projection.

    ``working`` refines the acted-on model (vertex set invariant, no edge
    reversed, no edge joining two points of one orbit); ``stabilizers`` gives
    |K_e| per quotient edge; ``added_midpoints`` lists the points inserted
    only to keep the quotient loopless.
    """

    quotient: Model
    projection: "object"
    working: Subdivision
    action: IsometricAction
    stabilizers: Mapping[str, int]
    added_midpoints: tuple[Point, ...]


def quotient(action: IsometricAction, extra_points: Iterable[Point] = ()) -> QuotientResult:
    from .morphisms import EdgeImage, MultiMorphism

    model = action.model
    points: set[Point] = set(v1_points(action))
    for p in extra_points:
        points.update(action.orbit(p))
    points = {p for p in points if not p.is_vertex}
    added: set[Point] = set()
    while True:
        sub = refine(model, points)
        work = action.transport(sub)
        g1 = sub.child
        orbit_of = {}
        for orb in work.vertex_orbits():
            for v in orb:
                orbit_of[v] = orb[0]
        looping = [eid for eid, e in g1.edges.items() if orbit_of[e.tail] == orbit_of[e.head]]
        if not looping:
            break
        for eid in looping:
            mid = sub.to_parent(g1.midpoint(eid))
            for q in action.orbit(mid):
                points.add(q)
                added.add(q)
    edges = []
    edge_map = {}
    stabilizers = {}
    for orb in work.edge_orbits():
        rep = g1.edge(orb[0])
        k_e = len(work.edge_stabilizer(rep.id))
        tail, head = orbit_of[rep.tail], orbit_of[rep.head]
        edges.append((rep.id, tail, head, k_e * rep.length))
        stabilizers[rep.id] = k_e
        for eid in orb:
            flip = orbit_of[g1.edge(eid).tail] != tail
            edge_map[eid] = EdgeImage(rep.id, flip, k_e)
    q_model = Model(set(orbit_of.values()), edges)
    proj = MultiMorphism(g1, q_model, dict(orbit_of), edge_map, source_sub=sub)
    return QuotientResult(q_model, proj, sub, work, stabilizers, tuple(sorted(added)))
