"""Rational maps into tropical projective space and the coverings they induce."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, count
from typing import Iterable, Mapping, NamedTuple, Sequence

from .action import IsometricAction
from .divisors import Divisor
from .functions import RationalFunction
from .graph import Model, Point, Subdivision, refine
from .guard import DEFAULT_GUARD, ScaleGuard
from .linear_systems import GeneratingSet, generators
from .morphisms import EdgeImage, MultiMorphism, verify_galois
from .rational import format_rational, rational_gcd

__all__ = [
    "TPPoint",
    "lattice_length",
    "tp_distance",
    "chart_distances",
    "evaluate_map",
    "ImageGraph",
    "image_graph",
    "InjectivityReport",
    "is_K_injective",
    "induced_covering",
    "k_ample_witness",
    "descend",
    "pull_back_equality_check",
]


class TPPoint:
    """A point of TP^n, stored with its minimum coordinate shifted to 0."""

    __slots__ = ("coords",)

    def __init__(self, coords: Iterable[Fraction | int]):
        values = [Fraction(c) for c in coords]
        if not values:
            raise ValueError("a projective point needs at least one coordinate")
        low = min(values)
        self.coords = tuple(v - low for v in values)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TPPoint) and self.coords == other.coords

    def __hash__(self) -> int:
        return hash(self.coords)

    def __lt__(self, other: "TPPoint") -> bool:
        return self.coords < other.coords

    def __len__(self) -> int:
        return len(self.coords)

    def __str__(self) -> str:
        return "(" + ":".join(format_rational(c) for c in self.coords) + ")"

    __repr__ = __str__

    def chart(self, k: int) -> tuple[Fraction, ...]:
        """Affine coordinates c_i - c_k with the k-th entry dropped."""
        base = self.coords[k]
        return tuple(c - base for i, c in enumerate(self.coords) if i != k)


def lattice_length(vector: Sequence[Fraction | int]) -> Fraction:
    """lambda with vector = lambda * (primitive integer vector); 0 for the zero vector."""
    return rational_gcd(vector)


def _projective_length(slopes: Sequence[int]) -> Fraction:
    """Lattice length of a slope vector taken modulo the all-ones direction."""
    return lattice_length([s - slopes[0] for s in slopes])


def chart_distances(u: TPPoint, v: TPPoint) -> list[Fraction]:
    """The lattice length of u - v computed in every affine chart."""
    if len(u) != len(v):
        raise ValueError("points live in different projective spaces")
    return [lattice_length([a - b for a, b in zip(u.chart(k), v.chart(k))]) for k in range(len(u))]


def tp_distance(u: TPPoint, v: TPPoint) -> Fraction:
    dists = set(chart_distances(u, v))
    if len(dists) != 1:
        raise ArithmeticError(f"chart-dependent distance between {u} and {v}: {sorted(dists)}")
    return dists.pop()


def evaluate_map(functions: GeneratingSet | Sequence[RationalFunction], point: Point) -> TPPoint:
    funcs = list(functions)
    if not funcs:
        raise ValueError("the map needs at least one function")
    return TPPoint(f.value(point) for f in funcs)


# ---------------------------------------------------------------------------
# image graphs
# ---------------------------------------------------------------------------


def _solve(a: Sequence[Fraction], s1: Sequence[Fraction], b: Sequence[Fraction], s2: Sequence[Fraction]):
    """Parameters (s, t) with a + s*s1 == b + t*s2 for non-parallel directions, else None."""
    n = len(a)
    for i in range(n):
        for j in range(i + 1, n):
            det = -s1[i] * s2[j] + s1[j] * s2[i]
            if det:
                ri, rj = b[i] - a[i], b[j] - a[j]
                s = (-ri * s2[j] + rj * s2[i]) / det
                t = (s1[i] * rj - s1[j] * ri) / det
                if all(a[k] + s * s1[k] == b[k] + t * s2[k] for k in range(n)):
                    return s, t
                return None
    return None


def _param_of(point: Sequence[Fraction], a: Sequence[Fraction], s1: Sequence[Fraction]) -> Fraction | None:
    """s with a + s*s1 == point, if any (s1 nonzero)."""
    k = next(i for i, x in enumerate(s1) if x)
    s = (point[k] - a[k]) / s1[k]
    return s if all(a[i] + s * s1[i] == point[i] for i in range(len(a))) else None


class _Segments:
    """Affine-chart parametrizations of the working edges."""

    def __init__(self, funcs: Sequence[RationalFunction], sub: Subdivision):
        self.sub = sub
        child = sub.child
        self.start, self.dir, self.length = {}, {}, {}
        self.vertex = {}
        for v in child.vertices:
            vals = [f.value(sub.to_parent(Point(vertex=v))) for f in funcs]
            self.vertex[v] = tuple(x - vals[0] for x in vals[1:])
        for eid, e in child.edges.items():
            tail = [f.value(sub.to_parent(Point(vertex=e.tail))) for f in funcs]
            head = [f.value(sub.to_parent(Point(vertex=e.head))) for f in funcs]
            slopes = [(b - a) / e.length for a, b in zip(tail, head)]
            self.start[eid] = self.vertex[e.tail]
            self.dir[eid] = tuple(s - slopes[0] for s in slopes[1:])
            self.length[eid] = e.length

    def cuts(self) -> set[Point]:
        """Working-model parameters where edge images meet other edges or vertex images."""
        child = self.sub.child
        out: set[Point] = set()
        moving = [e for e in child.edges if any(self.dir[e])]

        def add(eid: str, s: Fraction) -> None:
            if 0 < s < self.length[eid]:
                out.add(self.sub.to_parent(child.point(eid, s)))

        for eid in moving:
            for v in child.vertices:
                s = _param_of(self.vertex[v], self.start[eid], self.dir[eid])
                if s is not None:
                    add(eid, s)
        for e1, e2 in combinations(moving, 2):
            a, s1, b, s2 = self.start[e1], self.dir[e1], self.start[e2], self.dir[e2]
            hit = _solve(a, s1, b, s2)
            if hit is not None:
                add(e1, hit[0])
                add(e2, hit[1])
                continue
            # parallel: collinear overlaps contribute the other segment's endpoints
            for x, sx, y, sy, ey, ex in ((a, s1, b, s2, e2, e1), (b, s2, a, s1, e1, e2)):
                for end in (y, tuple(y[k] + self.length[ey] * sy[k] for k in range(len(y)))):
                    s = _param_of(end, x, sx)
                    if s is not None:
                        add(ex, s)
        return out


@dataclass(frozen=True)
class ImageGraph:
    """Im(phi_F) as a model, with the map onto it.

    ``coordinates`` gives each image vertex as a TP point; ``slopes`` gives the
    integer slope vector of every working edge; ``multiplicity`` is
    m'(image edge) = |K_e| for the working edges e above it.
    """

    model: Model
    coordinates: Mapping[str, TPPoint]
    slopes: Mapping[str, tuple[int, ...]]
    morphism: MultiMorphism
    working: Subdivision
    action: IsometricAction
    multiplicity: Mapping[str, int]

    @property
    def genus(self) -> int:
        return self.model.genus

    def image_length(self, working_edge: str) -> Fraction:
        return _projective_length(self.slopes[working_edge]) * self.working.child.edge(working_edge).length

    def to_json(self) -> dict:
        return {
            "vertices": {v: str(p) for v, p in sorted(self.coordinates.items())},
            "edges": [
                {"id": eid, "ends": [e.tail, e.head], "length": format_rational(e.length), "multiplicity": self.multiplicity[eid]}
                for eid, e in self.model.edges.items()
            ],
            "genus": self.model.genus,
            "slopes": {eid: list(s) for eid, s in sorted(self.slopes.items())},
        }


def _working_points(funcs: Sequence[RationalFunction], divisor: Divisor | None, action: IsometricAction) -> set[Point]:
    from .action import v1_points

    pts: set[Point] = set(v1_points(action))
    for f in funcs:
        pts.update(f.breakpoints())
        if divisor is not None:
            pts.update((divisor + f.div()).support)
    return pts


def image_graph(
    functions: GeneratingSet | Sequence[RationalFunction],
    action: IsometricAction | None = None,
    divisor: Divisor | None = None,
) -> ImageGraph:
    funcs = list(functions)
    if not funcs:
        raise ValueError("the map needs at least one function")
    model = funcs[0].model
    if divisor is None and isinstance(functions, GeneratingSet):
        divisor = functions.divisor
    action = action or IsometricAction.trivial(model)
    pts = _working_points(funcs, divisor, action)
    for _ in count():
        closed = {q for p in pts for q in action.orbit(p)}
        sub = refine(model, [p for p in closed if not p.is_vertex])
        if len(funcs) == 1 or not model.edges:
            break
        new = _Segments(funcs, sub).cuts() - closed
        if not new:
            break
        pts = closed | new
    work = action.transport(sub)
    child = sub.child
    coords = {v: evaluate_map(funcs, sub.to_parent(Point(vertex=v))) for v in child.vertices}
    slopes: dict[str, tuple[int, ...]] = {}
    for eid, e in child.edges.items():
        vec = tuple(int((f_head - f_tail) / e.length) for f_tail, f_head in zip(
            (f.value(sub.to_parent(Point(vertex=e.tail))) for f in funcs),
            (f.value(sub.to_parent(Point(vertex=e.head))) for f in funcs),
        ))
        slopes[eid] = vec
    # image vertices are named by their least preimage
    names: dict[TPPoint, str] = {}
    for v in sorted(child.vertices, key=lambda v: sub.to_parent(Point(vertex=v))):
        names.setdefault(coords[v], str(sub.to_parent(Point(vertex=v))))
    vertex_map = {v: names[coords[v]] for v in child.vertices}
    edges: dict[tuple, list[str]] = {}
    for eid, e in child.edges.items():
        if len(set(slopes[eid])) == 1:
            continue
        mid = evaluate_map(funcs, sub.to_parent(child.midpoint(eid)))
        key = (frozenset((coords[e.tail], coords[e.head])), mid)
        edges.setdefault(key, []).append(eid)
    image_edges = []
    edge_map: dict[str, EdgeImage] = {}
    mult: dict[str, int] = {}
    for key, group in edges.items():
        rep = child.edge(min(group))
        tail, head = vertex_map[rep.tail], vertex_map[rep.head]
        dil = int(_projective_length(slopes[rep.id]))
        image_edges.append((rep.id, tail, head, dil * rep.length))
        mult[rep.id] = len(work.edge_stabilizer(rep.id))
        for eid in group:
            e = child.edge(eid)
            edge_map[eid] = EdgeImage(rep.id, vertex_map[e.tail] != tail, int(_projective_length(slopes[eid])))
    for eid, e in child.edges.items():
        if eid not in edge_map:
            edge_map[eid] = EdgeImage(None, False, 0)
    img = Model(set(vertex_map.values()), image_edges)
    morphism = MultiMorphism(child, img, vertex_map, edge_map, target_mult=mult, source_sub=sub)
    return ImageGraph(
        img,
        {names[c]: c for c in names},
        slopes,
        morphism,
        sub,
        work,
        mult,
    )


class InjectivityReport(NamedTuple):
    injective: bool
    witness: tuple[Point, Point] | None
    image: ImageGraph


def is_K_injective(
    functions: GeneratingSet | Sequence[RationalFunction],
    action: IsometricAction | None = None,
    divisor: Divisor | None = None,
) -> InjectivityReport:
    """Do distinct K-orbits have distinct images?  Witness: two points in different orbits, same image."""
    img = image_graph(functions, action, divisor)
    phi, work, sub = img.morphism, img.action, img.working
    for eid, e in sub.child.edges.items():
        if phi.edge_map[eid].target is None:
            a = sub.to_parent(sub.child.point(eid, e.length / 3))
            b = sub.to_parent(sub.child.point(eid, 2 * e.length / 3))
            return InjectivityReport(False, (a, b), img)
    vorb = {v: orb for orb in work.vertex_orbits() for v in orb}
    eorb = {e: orb for orb in work.edge_orbits() for e in orb}
    groups: dict[str, list[str]] = {}
    for v, w in phi.vertex_map.items():
        groups.setdefault(w, []).append(v)
    for w, vs in sorted(groups.items()):
        orbits = sorted({vorb[v] for v in vs})
        if len(orbits) > 1:
            pair = (sub.to_parent(Point(vertex=orbits[0][0])), sub.to_parent(Point(vertex=orbits[1][0])))
            return InjectivityReport(False, pair, img)
    egroups: dict[str, list[str]] = {}
    for eid, im in phi.edge_map.items():
        egroups.setdefault(im.target, []).append(eid)
    for t, es in sorted(egroups.items()):
        orbits = sorted({eorb[e] for e in es})
        if len(orbits) > 1:
            a, b = orbits[0][0], orbits[1][0]
            pa = sub.to_parent(sub.child.midpoint(a))
            pb = phi.fiber(phi.apply(pa))
            other = next(p for p in pb if sub.to_child(p).edge in orbits[1])
            return InjectivityReport(False, (pa, other), img)
    return InjectivityReport(True, None, img)


@dataclass(frozen=True)
class InducedCovering:
    morphism: MultiMorphism
    image: ImageGraph
    verdict: object


def induced_covering(
    functions: GeneratingSet | Sequence[RationalFunction],
    action: IsometricAction | None = None,
    divisor: Divisor | None = None,
) -> InducedCovering:
    """The K-Galois covering of Im(phi_F) for a K-injective F, checked edge by edge."""
    report = is_K_injective(functions, action, divisor)
    if not report.injective:
        raise ValueError(f"map is not K-injective: {report.witness[0]} and {report.witness[1]} share an image")
    img = report.image
    for eid, vec in img.slopes.items():
        if not any(abs(s - t) == 1 for s in vec for t in vec):
            raise ArithmeticError(f"no function has slope one relative to another on {eid}")
        if img.morphism.edge_map[eid].dilation != 1:
            raise ArithmeticError(f"edge {eid} is not mapped isometrically")
    verdict = verify_galois(img.morphism, action or IsometricAction.trivial(img.working.parent))
    if not verdict.ok:
        raise ArithmeticError(f"induced map fails the Galois check: {verdict.witness}")
    return InducedCovering(img.morphism, img, verdict)


# ---------------------------------------------------------------------------
# ampleness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AmpleWitness:
    k: int
    functions: GeneratingSet
    quotient_functions: GeneratingSet
    report: InjectivityReport


def k_ample_witness(
    divisor: Divisor, action: IsometricAction, max_k: int = 8, guard: ScaleGuard = DEFAULT_GUARD
) -> AmpleWitness:
    """Search k = 1, 2, ... for a K-injective map from pulled-back generators of k * pi_*(D)."""
    from .action import quotient

    model = action.model
    if not divisor.is_effective or divisor.degree < 1 or not action.is_invariant_divisor(divisor):
        raise ValueError("need an effective K-invariant divisor of positive degree")
    q = quotient(action)
    pi = q.projection
    pushed = pi.push_divisor(divisor)
    for k in range(1, max_k + 1):
        down = generators(pushed * k, q.quotient, guard)
        if not len(down):
            continue
        ups = GeneratingSet(pi.pull_divisor(pushed * k), tuple(pi.pull_function(f) for f in down), model)
        report = is_K_injective(ups, action)
        if report.injective:
            return AmpleWitness(k, ups, down, report)
    raise ArithmeticError(f"no K-injective multiple found up to k = {max_k}")


# ---------------------------------------------------------------------------
# descent of invariant functions
# ---------------------------------------------------------------------------


def descend(phi: MultiMorphism, f: RationalFunction) -> RationalFunction | None:
    """f' on the target with f = f' o phi, or None when f is not constant on fibers."""
    work = f.to_child(phi.source_sub)
    knots: dict[str, list] = {}
    values: dict[str, Fraction] = {}
    for v, w in phi.vertex_map.items():
        if values.setdefault(w, work.vertex_value(v)) != work.vertex_value(v):
            return None
    for eid, img in phi.edge_map.items():
        if img.target is None:
            ks = work.knots(eid)
            if any(val != ks[0][1] for _, val in ks):
                return None
            continue
        length = phi.target.edge(img.target).length
        ks = []
        for s, val in work.knots(eid):
            pos = s * img.dilation
            ks.append((length - pos if img.reverse else pos, val))
        ks.sort()
        if any(((b[1] - a[1]) / (b[0] - a[0])).denominator != 1 for a, b in zip(ks, ks[1:])):
            return None
        prev = knots.setdefault(img.target, ks)
        if prev != ks:
            return None
    if not phi.target.edges:
        return RationalFunction.constant(phi.target, next(iter(values.values())))
    return RationalFunction(phi.target, knots)


def pull_back_equality_check(phi: MultiMorphism, samples: Iterable[RationalFunction], action=None) -> bool:
    """Every sample descends to the target and pulls back to itself.

    When the morphism has dilations > 1 (a quotient projection), also check
    that each slope of a pulled-back function is a multiple of the dilation.
    """
    for f in samples:
        down = descend(phi, f)
        if down is None or phi.pull_function(down) != f:
            return False
        work = f.to_child(phi.source_sub)
        for eid, img in phi.edge_map.items():
            if img.dilation > 1 and any(s % img.dilation for _, _, s in work.pieces(eid)):
                return False
    return True
