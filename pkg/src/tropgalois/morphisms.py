"""Harmonic morphisms of metric graphs, with optional edge multiplicities."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, NamedTuple

from .divisors import Divisor
from .functions import RationalFunction, _eval
from .graph import GraphError, HalfEdge, Model, Point, Subdivision, refine
from .rational import format_rational

__all__ = [
    "EdgeImage",
    "MultiMorphism",
    "LocalDegree",
    "HarmonicReport",
    "GaloisVerdict",
    "Factorization",
    "verify_galois",
    "factor_through_quotient",
    "identity_morphism",
]


class EdgeImage(NamedTuple):
    """Where a source edge goes: a target edge (or None when collapsed), orientation, dilation."""

    target: str | None
    reverse: bool
    dilation: int


class LocalDegree(NamedTuple):
    value: int | None
    report: str | None


@dataclass(frozen=True)
class HarmonicReport:
    harmonic: bool
    failures: Mapping[str, str]


class MultiMorphism:
    """A piecewise dilation between working models, sending vertices to vertices.

    Each working edge maps onto a single target edge (dilation >= 1) or to a
    vertex (dilation 0).  ``source_sub`` relates the working source model to
    the graph the caller thinks in; divisors and functions passed in and
    returned live on ``source_sub.parent``.  ``source_mult`` / ``target_mult``
    are edge multiplicities on the working models (default 1).
    """

    def __init__(
        self,
        source: Model,
        target: Model,
        vertex_map: Mapping[str, str],
        edge_map: Mapping[str, EdgeImage | tuple],
        source_mult: Mapping[str, int] | None = None,
        target_mult: Mapping[str, int] | None = None,
        source_sub: Subdivision | None = None,
    ):
        self.source = source
        self.target = target
        self.vertex_map = dict(vertex_map)
        self.edge_map = {k: EdgeImage(*v) for k, v in edge_map.items()}
        self.source_mult = dict(source_mult) if source_mult else {e: 1 for e in source.edges}
        self.target_mult = dict(target_mult) if target_mult else {e: 1 for e in target.edges}
        self.source_sub = source_sub if source_sub is not None else refine(source, [])
        if not self.source_sub.child.same_as(source):
            raise GraphError("source_sub must refine down to the working source model")
        self._validate()

    def _validate(self) -> None:
        if set(self.vertex_map) != set(self.source.vertices):
            raise GraphError("vertex map must cover every source vertex")
        if set(self.edge_map) != set(self.source.edges):
            raise GraphError("edge map must cover every source edge")
        for v, w in self.vertex_map.items():
            if w not in self.target.vertices:
                raise GraphError(f"vertex {v} maps to unknown vertex {w}")
        for eid, img in self.edge_map.items():
            e = self.source.edge(eid)
            if img.target is None:
                if img.dilation != 0 or self.vertex_map[e.tail] != self.vertex_map[e.head]:
                    raise GraphError(f"collapsed edge {eid} must have dilation 0 and one image vertex")
                continue
            t = self.target.edge(img.target)
            if img.dilation <= 0 or t.length != img.dilation * e.length:
                raise GraphError(f"edge {eid} is not a dilation onto {img.target}")
            ends = (t.head, t.tail) if img.reverse else (t.tail, t.head)
            if (self.vertex_map[e.tail], self.vertex_map[e.head]) != ends:
                raise GraphError(f"edge {eid} image is discontinuous at its endpoints")
        for eid, m in [*self.source_mult.items(), *self.target_mult.items()]:
            if m < 1:
                raise GraphError(f"edge multiplicity on {eid} must be positive")

    # -- coordinates -----------------------------------------------------
    @property
    def base(self) -> Model:
        return self.source_sub.parent

    def _in(self, point: Point) -> Point:
        return self.source_sub.to_child(self.base.check_point(point))

    def _out(self, point: Point) -> Point:
        return self.source_sub.to_parent(point)

    def apply(self, point: Point) -> Point:
        p = self._in(point)
        if p.is_vertex:
            return Point(vertex=self.vertex_map[p.vertex])
        img = self.edge_map[p.edge]
        if img.target is None:
            return Point(vertex=self.vertex_map[self.source.edge(p.edge).tail])
        s = img.dilation * p.offset
        if img.reverse:
            s = self.target.edge(img.target).length - s
        return self.target.point(img.target, s)

    def weight(self, eid: str) -> Fraction:
        """m'(phi(e)) / m(e), with m' of a collapsed edge taken to be 0."""
        img = self.edge_map[eid]
        if img.target is None:
            return Fraction(0)
        return Fraction(self.target_mult[img.target], self.source_mult[eid])

    def _divides(self, eid: str) -> bool:
        img = self.edge_map[eid]
        return img.target is None or self.target_mult[img.target] % self.source_mult[eid] == 0

    def _image_half_edge(self, half: HalfEdge) -> HalfEdge | None:
        eid, end = half
        img = self.edge_map[eid]
        if img.target is None:
            return None
        return (img.target, end ^ int(img.reverse))

    @property
    def is_finite(self) -> bool:
        return all(img.dilation > 0 for img in self.edge_map.values())

    # -- degrees ---------------------------------------------------------
    def local_degree(self, point: Point) -> LocalDegree:
        return self._local_degree_working(self._in(point))

    def _local_degree_working(self, p: Point) -> LocalDegree:
        if not self.target.edges:
            return LocalDegree(0, None)
        if not p.is_vertex:
            img = self.edge_map[p.edge]
            if not self._divides(p.edge):
                return LocalDegree(None, f"m({p.edge}) does not divide m'({img.target})")
            return LocalDegree(int(self.weight(p.edge) * img.dilation), None)
        v = p.vertex
        sums = {h: Fraction(0) for h in self.target.half_edges(self.vertex_map[v])}
        for half in self.source.half_edges(v):
            if not self._divides(half[0]):
                img = self.edge_map[half[0]]
                return LocalDegree(None, f"m({half[0]}) does not divide m'({img.target})")
            image = self._image_half_edge(half)
            if image is not None:
                sums[image] += self.weight(half[0]) * self.edge_map[half[0]].dilation
        values = set(sums.values())
        if len(values) == 1:
            value = values.pop()
            if value.denominator != 1:
                return LocalDegree(None, f"non-integral local degree {value} at {v}")
            return LocalDegree(int(value), None)
        (h1, s1), (h2, s2) = next(
            ((a, b) for a in sums.items() for b in sums.items() if a[1] != b[1])
        )
        return LocalDegree(
            None,
            f"at {v}: target half-edge {h1[0]}:{h1[1]} has sum {format_rational(s1)} "
            f"but {h2[0]}:{h2[1]} has sum {format_rational(s2)}",
        )

    def harmonic_report(self) -> HarmonicReport:
        failures = {}
        for v in self.source.vertices:
            ld = self._local_degree_working(Point(vertex=v))
            if ld.value is None:
                failures[str(self._out(Point(vertex=v)))] = ld.report
        for eid in self.source.edges:
            if not self._divides(eid):
                failures[eid] = f"m({eid}) does not divide m'({self.edge_map[eid].target})"
        if not failures:
            totals = self._fiber_totals()
            if len(set(totals.values())) > 1:
                failures["degree"] = "fiber sums differ: " + ", ".join(
                    f"{k}={v}" for k, v in sorted(totals.items())
                )
        return HarmonicReport(not failures, failures)

    def is_harmonic(self) -> bool:
        return self.harmonic_report().harmonic

    def _fiber_totals(self) -> dict[str, int]:
        totals = {v: 0 for v in self.target.vertices}
        for v in self.source.vertices:
            totals[self.vertex_map[v]] += self._local_degree_working(Point(vertex=v)).value
        for eid in self.target.edges:
            totals[f"{eid}@interior"] = 0
        for eid, img in self.edge_map.items():
            if img.target is not None:
                totals[f"{img.target}@interior"] += int(self.weight(eid) * img.dilation)
        return totals

    def degree(self) -> int:
        report = self.harmonic_report()
        if not report.harmonic:
            raise ValueError("degree is only defined for harmonic morphisms")
        if not self.target.edges:
            return 0
        return next(iter(self._fiber_totals().values()))

    def fiber(self, target_point: Point) -> tuple[Point, ...]:
        """Preimages of a target point that are not interior to collapsed edges."""
        target_point = self.target.check_point(target_point)
        out = []
        if target_point.is_vertex:
            out = [Point(vertex=v) for v, w in self.vertex_map.items() if w == target_point.vertex]
        else:
            length = self.target.edge(target_point.edge).length
            for eid, img in self.edge_map.items():
                if img.target == target_point.edge:
                    s = length - target_point.offset if img.reverse else target_point.offset
                    out.append(self.source.point(eid, s / img.dilation))
        return tuple(sorted(self._out(p) for p in out))

    # -- divisors --------------------------------------------------------
    def push_divisor(self, divisor: Divisor) -> Divisor:
        return Divisor((self.apply(p), c) for p, c in divisor.items())

    def pull_divisor(self, divisor: Divisor) -> Divisor:
        coeffs = []
        for p, c in divisor.items():
            p = self.target.check_point(p)
            for x in self.fiber(p):
                ld = self.local_degree(x)
                if ld.value is None:
                    raise ValueError(ld.report)
                coeffs.append((x, ld.value * c))
        return Divisor(coeffs)

    # -- functions -------------------------------------------------------
    def pull_function(self, f: RationalFunction) -> RationalFunction:
        """f o phi on the base source model."""
        knots = {}
        for eid, img in self.edge_map.items():
            e = self.source.edge(eid)
            if img.target is None:
                value = f.vertex_value(self.vertex_map[e.tail])
                knots[eid] = [(0, value), (e.length, value)]
                continue
            length = self.target.edge(img.target).length
            ks = []
            for s, val in f.knots(img.target):
                t = (length - s) if img.reverse else s
                ks.append((t / img.dilation, val))
            knots[eid] = sorted(ks)
        return RationalFunction.from_child(self.source_sub, RationalFunction(self.source, knots))

    def push_function(self, f: RationalFunction) -> RationalFunction:
        """x' -> sum over the fiber of deg_x * f(x)."""
        work = f.to_child(self.source_sub)
        knots = {}
        for tid, t_edge in self.target.edges.items():
            pre = [(eid, img) for eid, img in self.edge_map.items() if img.target == tid]
            positions = {Fraction(0), t_edge.length}
            for eid, img in pre:
                for s, _ in work.knots(eid):
                    pos = s * img.dilation
                    positions.add(t_edge.length - pos if img.reverse else pos)
            ks = []
            for pos in sorted(positions):
                total = Fraction(0)
                for eid, img in pre:
                    s = (t_edge.length - pos) if img.reverse else pos
                    total += self.weight(eid) * img.dilation * _eval(work.knots(eid), s / img.dilation)
                ks.append((pos, total))
            knots[tid] = ks
        if not self.target.edges:
            return RationalFunction.constant(self.target, 0)
        return RationalFunction(self.target, knots)

    def div_mm(self, f: RationalFunction) -> Divisor:
        """Principal divisor with outgoing slopes weighted by m'(phi(e)) / m(e)."""
        for eid in self.source.edges:
            if not self._divides(eid):
                raise ValueError(f"m({eid}) does not divide m'({self.edge_map[eid].target})")
        work = f.to_child(self.source_sub)
        pts = [Point(vertex=v) for v in self.source.vertices] + work.breakpoints()
        coeffs = []
        for p in pts:
            total = Fraction(0)
            for direction in self.source.directions(p):
                total += self.weight(direction[0]) * work.slope_leaving(p, direction)
            if total.denominator != 1:
                raise ValueError(f"non-integral weighted order at {p}")
            coeffs.append((self._out(p), int(total)))
        return Divisor(coeffs)

    # -- serialization ---------------------------------------------------
    def to_json(self) -> dict:
        return {
            "vertex_map": dict(sorted(self.vertex_map.items())),
            "edge_map": {
                eid: {"target": img.target, "reverse": img.reverse, "dilation": img.dilation}
                for eid, img in sorted(self.edge_map.items())
            },
            "source_multiplicity": dict(sorted(self.source_mult.items())),
            "target_multiplicity": dict(sorted(self.target_mult.items())),
        }


def identity_morphism(model: Model) -> MultiMorphism:
    return MultiMorphism(
        model,
        model,
        {v: v for v in model.vertices},
        {e: EdgeImage(e, False, 1) for e in model.edges},
    )


# ---------------------------------------------------------------------------
# Galois coverings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaloisVerdict:
    """Outcome of verify_galois.

    ``fibers`` maps each target vertex and each target edge (as ``edge@interior``)
    to its preimage orbits; ``witness`` names the failing check when false.
    """

    ok: bool
    degree: int | None
    group_order: int
    fibers: Mapping[str, tuple[tuple[str, ...], ...]]
    witness: str | None

    def to_json(self) -> dict:
        return {
            "galois": self.ok,
            "degree": self.degree,
            "group_order": self.group_order,
            "fibers": {k: [list(o) for o in v] for k, v in self.fibers.items()},
            "witness": self.witness,
        }


def verify_galois(phi: MultiMorphism, action) -> GaloisVerdict:
    """Harmonic, degree |K|, K-invariant, and K transitive on every fiber."""
    order = action.order
    if not phi.is_finite:
        collapsed = sorted(e for e, img in phi.edge_map.items() if img.dilation == 0)
        return GaloisVerdict(False, None, order, {}, f"edge {collapsed[0]} is collapsed")
    report = phi.harmonic_report()
    if not report.harmonic:
        where, why = next(iter(report.failures.items()))
        return GaloisVerdict(False, None, order, {}, f"not harmonic: {why}")
    deg = phi.degree()
    if deg != order:
        return GaloisVerdict(False, deg, order, {}, f"degree {deg} differs from group order {order}")
    work = action.transport(phi.source_sub)
    for name, g in work.named.items():
        for v in phi.source.vertices:
            if phi.vertex_map[g.vertices[v]] != phi.vertex_map[v]:
                return GaloisVerdict(False, deg, order, {}, f"phi({v}) != phi({name}({v}))")
        for eid, (target, flip) in g.edges.items():
            a, b = phi.edge_map[eid], phi.edge_map[target]
            if a.target != b.target or (a.reverse != (b.reverse != flip)):
                return GaloisVerdict(False, deg, order, {}, f"phi is not invariant on edge {eid} under {name}")
    vorb = {v: orb for orb in work.vertex_orbits() for v in orb}
    eorb = {e: orb for orb in work.edge_orbits() for e in orb}
    fibers: dict[str, tuple[tuple[str, ...], ...]] = {}
    for w in phi.target.vertices:
        pre = sorted(v for v, img in phi.vertex_map.items() if img == w)
        orbits = tuple(sorted({vorb[v] for v in pre}))
        fibers[w] = tuple(tuple(str(phi._out(Point(vertex=v))) for v in o) for o in orbits)
        if len(orbits) > 1:
            a, b = orbits[0][0], orbits[1][0]
            pa, pb = phi._out(Point(vertex=a)), phi._out(Point(vertex=b))
            return GaloisVerdict(False, deg, order, fibers, f"fiber over {w} holds {pa} and {pb} in different orbits")
    for t in phi.target.edges:
        pre = sorted(e for e, img in phi.edge_map.items() if img.target == t)
        orbits = tuple(sorted({eorb[e] for e in pre}))
        fibers[f"{t}@interior"] = orbits
        if len(orbits) > 1:
            return GaloisVerdict(
                False, deg, order, fibers, f"fiber over the interior of {t} meets edges {orbits[0][0]} and {orbits[1][0]} in different orbits"
            )
    return GaloisVerdict(True, deg, order, fibers, None)


@dataclass(frozen=True)
class Factorization:
    """psi : Gamma/K -> target with phi = psi o pi, as explicit correspondences.

    ``length_ratio[e]`` is l'(psi(e)) / l_Q(e); it equals 1 / w where w is the
    multiplicity weight of phi on the edges above e, so it is 1 exactly when
    phi carries trivial multiplicities.
    """

    quotient: object
    vertex_map: Mapping[str, Point]
    edge_map: Mapping[str, tuple[str, Fraction, Fraction]]
    length_ratio: Mapping[str, Fraction]
    bijective: bool


def factor_through_quotient(phi: MultiMorphism, action) -> Factorization:
    """Build psi with phi = psi o pi for a verified K-Galois covering phi."""
    from .action import quotient

    extra = [phi._out(Point(vertex=v)) for v in phi.source.vertices]
    q = quotient(action, extra)
    pi = q.projection
    vmap = {}
    for v in pi.source.vertices:
        image = phi.apply(pi._out(Point(vertex=v)))
        prev = vmap.setdefault(pi.vertex_map[v], image)
        if prev != image:
            raise ValueError("phi is not constant on a K-orbit; not a Galois covering")
    emap, ratio = {}, {}
    for eid, img in pi.edge_map.items():
        e = pi.source.edge(eid)
        a, b = phi.apply(pi._out(Point(vertex=e.tail))), phi.apply(pi._out(Point(vertex=e.head)))
        mid = phi.apply(pi._out(pi.source.midpoint(eid)))
        carrier = mid.edge if not mid.is_vertex else None
        if carrier is None:
            raise ValueError("phi collapses an edge")
        span = _span_on(phi.target, carrier, a, b)
        if img.reverse:
            span = (span[1], span[0])
        prev = emap.setdefault(img.target, (carrier, *span))
        if prev != (carrier, *span):
            raise ValueError("phi is not constant on a K-orbit of edges")
        ratio[img.target] = abs(span[1] - span[0]) / q.quotient.edge(img.target).length
    segments = sorted((c, min(s, t), max(s, t)) for c, s, t in emap.values())
    covered = all(
        _tiles(phi.target.edge(t).length, [(s, u) for c, s, u in segments if c == t]) for t in phi.target.edges
    )
    bijective = len(set(vmap.values())) == len(vmap) and len(set(segments)) == len(segments) and covered
    return Factorization(q, vmap, emap, ratio, bijective)


def _span_on(model: Model, eid: str, a: Point, b: Point) -> tuple[Fraction, Fraction]:
    edge = model.edge(eid)

    def offsets(p: Point) -> set[Fraction]:
        if not p.is_vertex:
            return {p.offset}
        out = set()
        if p.vertex == edge.tail:
            out.add(Fraction(0))
        if p.vertex == edge.head:
            out.add(edge.length)
        return out

    sa, sb = offsets(a), offsets(b)
    for s in sorted(sa):
        for t in sorted(sb):
            if s != t:
                return (s, t)
    raise GraphError(f"points {a}, {b} do not bound a segment of {eid}")


def _tiles(length: Fraction, spans: list[tuple[Fraction, Fraction]]) -> bool:
    pos = Fraction(0)
    for s, t in sorted(spans):
        if s != pos:
            return False
        pos = t
    return pos == length
