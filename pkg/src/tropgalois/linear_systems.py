"""Linear systems: membership in R(D), reduced divisors, rank, generators, extremality."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import ceil, floor
from typing import Iterable, Iterator, NamedTuple, Sequence

from .divisors import Divisor, canonical_divisor
from .functions import RationalFunction
from .graph import Model, Point, Subdivision, loopless_model, refine
from .guard import DEFAULT_GUARD, ScaleGuard
from .rational import rational_gcd

__all__ = [
    "GeneratingSet",
    "Reduction",
    "SpanResult",
    "is_in_R",
    "reduce",
    "rank",
    "riemann_roch_residual",
    "span_membership",
    "generators",
    "is_extremal",
    "has_smooth_cut",
    "rank_candidates",
]


def is_in_R(divisor: Divisor, f: RationalFunction) -> bool:
    return (divisor + f.div()).is_effective


# ---------------------------------------------------------------------------
# discrete chip-firing on a uniform lattice
# ---------------------------------------------------------------------------


def _offsets(points: Iterable[Point]) -> list[Fraction]:
    return [p.offset for p in points if not p.is_vertex]


class _Lattice:
    """The refinement of a model at all multiples of ``spacing`` as a discrete graph."""

    def __init__(self, model: Model, spacing: Fraction):
        self.model = model
        self.spacing = spacing
        self.sub: Subdivision = refine(model, [p for p in model.lattice_points(spacing) if not p.is_vertex])
        child = self.sub.child
        self.names = list(child.vertices)
        self.index = {v: i for i, v in enumerate(self.names)}
        self.nbrs: list[list[int]] = [[] for _ in self.names]
        for edge in child.edges.values():
            if edge.is_loop:
                continue
            a, b = self.index[edge.tail], self.index[edge.head]
            self.nbrs[a].append(b)
            self.nbrs[b].append(a)
        self.points = [self.sub.to_parent(Point(vertex=v)) for v in self.names]
        self.point_index = {p: i for i, p in enumerate(self.points)}
        self._depths: dict[int, list[int]] = {}

    def vector(self, divisor: Divisor) -> list[int]:
        vec = [0] * len(self.names)
        for p, c in divisor.items():
            vec[self.point_index[p]] += c
        return vec

    def divisor(self, vec: Sequence[int]) -> Divisor:
        return Divisor((self.points[i], c) for i, c in enumerate(vec) if c)

    def function(self, firings: Sequence[int]) -> RationalFunction:
        values = {v: self.spacing * firings[i] for i, v in enumerate(self.names)}
        return RationalFunction.from_vertex_values(self.sub, values)

    def depths(self, q: int) -> list[int]:
        if q not in self._depths:
            depth = [-1] * len(self.names)
            depth[q] = 0
            frontier = [q]
            while frontier:
                nxt = []
                for v in frontier:
                    for w in self.nbrs[v]:
                        if depth[w] < 0:
                            depth[w] = depth[v] + 1
                            nxt.append(w)
                frontier = nxt
            self._depths[q] = depth
        return self._depths[q]

    def reduce(self, vec: list[int], q: int, firings: list[int] | None = None) -> list[int]:
        """q-reduce ``vec`` in place; ``firings`` accumulates how often each vertex fired."""
        n = len(vec)
        if firings is None:
            firings = [0] * n
        depth = self.depths(q)
        layers: dict[int, list[int]] = {}
        for v, d in enumerate(depth):
            layers.setdefault(d, []).append(v)
        # Pull chips outward layer by layer until everything off q is nonnegative.
        for d in range(max(layers), 0, -1):
            inward = {v: sum(1 for w in self.nbrs[v] if depth[w] == d - 1) for v in layers[d]}
            times = max((ceil(-vec[v] / inward[v]) for v in layers[d] if vec[v] < 0), default=0)
            if not times:
                continue
            for u in layers[d - 1]:
                for w in self.nbrs[u]:
                    if depth[w] == d:
                        vec[u] -= times
                        vec[w] += times
            for u, du in enumerate(depth):
                if du < d:
                    firings[u] += times
        # Dhar burning from q; fire the unburnt part until everything burns.
        while True:
            burnt = [False] * n
            burnt[q] = True
            heat = [0] * n
            stack = [q]
            while stack:
                v = stack.pop()
                for w in self.nbrs[v]:
                    if not burnt[w]:
                        heat[w] += 1
                        if heat[w] > vec[w]:
                            burnt[w] = True
                            stack.append(w)
            unburnt = [v for v in range(n) if not burnt[v]]
            if not unburnt:
                return vec
            out = {u: sum(1 for w in self.nbrs[u] if burnt[w]) for u in unburnt}
            times = min(vec[u] // k for u, k in out.items() if k)
            for u, k in out.items():
                if k:
                    vec[u] -= times * k
                    for w in self.nbrs[u]:
                        if burnt[w]:
                            vec[w] += times
                firings[u] += times


@lru_cache(maxsize=64)
def _lattice(model: Model, spacing: Fraction) -> _Lattice:
    return _Lattice(model, spacing)


def _spacing(model: Model, points: Iterable[Point]) -> Fraction:
    return rational_gcd([e.length for e in model.edges.values()] + _offsets(points)) if model.edges else Fraction(1)


class Reduction(NamedTuple):
    """A q-reduced divisor with a witness: ``D + div(witness) == divisor``."""

    divisor: Divisor
    witness: RationalFunction


def reduce(divisor: Divisor, q: Point, model: Model) -> Reduction:
    """The unique q-reduced divisor linearly equivalent to ``divisor``.

    For a divisor supported on a uniform lattice that also contains q, the
    metric q-reduced divisor equals the discrete one on the lattice graph,
    so Dhar's burning algorithm there is exact.
    """
    q = model.check_point(q)
    for p in divisor:
        model.check_point(p)
    lat = _lattice(model, _spacing(model, [*divisor, q]))
    vec = lat.vector(divisor)
    firings = [0] * len(vec)
    lat.reduce(vec, lat.point_index[q], firings)
    witness = lat.function(firings).anchored() if model.edges else RationalFunction.constant(model)
    return Reduction(lat.divisor(vec), witness)


def rank_candidates(model: Model, divisor: Divisor, how: str = "vertices") -> list[Point]:
    """Points over which effective divisors E are tried when computing rank.

    ``"vertices"``: the vertices of the loopless model (a rank-determining set).
    ``"lattice"``: the uniform lattice of spacing gcd(lengths) / (deg D + 1).
    """
    if how == "vertices":
        sub = loopless_model(model)
        return [sub.to_parent(Point(vertex=v)) for v in sub.child.vertices]
    if how == "lattice":
        if not model.edges:
            return [Point(vertex=model.vertices[0])]
        step = rational_gcd(e.length for e in model.edges.values()) / (max(divisor.degree, 0) + 1)
        return model.lattice_points(step)
    raise ValueError(f"unknown candidate set {how!r}")


def rank(divisor: Divisor, model: Model, candidates: str | Sequence[Point] = "vertices") -> int:
    """Baker-Norine rank: min{deg E : |D - E| empty} - 1, with E over a candidate set."""
    if divisor.degree < 0:
        return -1
    pts = rank_candidates(model, divisor, candidates) if isinstance(candidates, str) else list(candidates)
    q = Point(vertex=model.vertices[0])
    lat = _lattice(model, _spacing(model, [*divisor, *pts, q]))
    qi = lat.point_index[q]
    cand = sorted({lat.point_index[model.check_point(p)] for p in pts})
    start = lat.reduce(lat.vector(divisor), qi)
    memo: dict[tuple[int, ...], int] = {}

    def r(vec: list[int]) -> int:
        key = tuple(vec)
        if key in memo:
            return memo[key]
        if vec[qi] < 0:
            memo[key] = -1
            return -1
        best = vec[qi]
        for c in cand:
            if best == 0:
                break
            nxt = list(vec)
            nxt[c] -= 1
            if c == qi or nxt[c] < 0:
                lat.reduce(nxt, qi)
            best = min(best, 1 + r(nxt))
        memo[key] = best
        return best

    return r(start)


def riemann_roch_residual(divisor: Divisor, model: Model) -> int:
    k = canonical_divisor(model)
    return rank(divisor, model) - rank(k - divisor, model) - (divisor.degree + 1 - model.genus)


# ---------------------------------------------------------------------------
# semimodule membership
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratingSet:
    """Finitely many members of R(D), each anchored to 0 at the least vertex."""

    divisor: Divisor
    functions: tuple[RationalFunction, ...]
    model: Model

    def __iter__(self) -> Iterator[RationalFunction]:
        return iter(self.functions)

    def __len__(self) -> int:
        return len(self.functions)

    def __getitem__(self, i: int) -> RationalFunction:
        return self.functions[i]

    @classmethod
    def build(cls, divisor: Divisor, functions: Iterable[RationalFunction], model: Model) -> "GeneratingSet":
        seen: dict[RationalFunction, None] = {}
        for f in functions:
            seen.setdefault(f.anchored(), None)
        ordered = sorted(seen, key=_function_key)
        return cls(divisor, tuple(ordered), model)


def _function_key(f: RationalFunction) -> tuple:
    return tuple((eid, f.knots(eid)) for eid in f.model.edges)


class SpanResult(NamedTuple):
    member: bool
    coefficients: tuple[Fraction, ...]
    witness: Point | None


def span_membership(gens: GeneratingSet | Sequence[RationalFunction], f: RationalFunction) -> SpanResult:
    """Is ``f`` a tropical combination max_i(c_i + f_i)?  Uses c_i = min(f - f_i)."""
    funcs = list(gens)
    if not funcs:
        return SpanResult(False, (), Point(vertex=f.model.vertices[0]))
    coeffs = tuple((f - g).min_value() for g in funcs)
    best = funcs[0].shift(coeffs[0])
    for c, g in zip(coeffs[1:], funcs[1:]):
        best = best.maximum_with(g.shift(c))
    if best == f:
        return SpanResult(True, coeffs, None)
    gap = f - best
    witness = next(p for p in gap.sample_points() if gap.value(p) > 0)
    return SpanResult(False, coeffs, witness)


# ---------------------------------------------------------------------------
# smooth cut sets
# ---------------------------------------------------------------------------


def _smooth(model: Model, p: Point) -> bool:
    return not p.is_vertex or model.valence(p.vertex) == 2


def has_smooth_cut(model: Model, points: Iterable[Point]) -> bool:
    """Do the smooth (valence-2) points among ``points`` disconnect the graph?"""
    smooth = sorted({model.check_point(p) for p in points if _smooth(model, p)})
    if not smooth:
        return False
    sub = refine(model, smooth)
    child = sub.child
    removed = {sub.to_child(p).vertex for p in smooth}
    parent = {v: v for v in child.vertices if v not in removed}

    def find(v: str) -> str:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    open_arcs = 0
    for edge in child.edges.values():
        t_in, h_in = edge.tail in removed, edge.head in removed
        if t_in and h_in:
            open_arcs += 1
        elif not t_in and not h_in:
            parent[find(edge.tail)] = find(edge.head)
    roots = {find(v) for v in parent}
    return len(roots) + open_arcs > 1


# ---------------------------------------------------------------------------
# generators of R(D)
# ---------------------------------------------------------------------------


def _spanning_trees(model: Model, limit: int) -> list[tuple[str, ...]]:
    edges = [eid for eid, e in model.edges.items() if not e.is_loop]
    need = len(model.vertices) - 1
    out = []
    for combo in itertools.combinations(edges, need):
        parent = {v: v for v in model.vertices}

        def find(v: str) -> str:
            while parent[v] != v:
                v = parent[v]
            return v

        ok = True
        for eid in combo:
            e = model.edge(eid)
            a, b = find(e.tail), find(e.head)
            if a == b:
                ok = False
                break
            parent[a] = b
        if ok:
            out.append(combo)
            if len(out) > limit:
                break
    return out


def _tree_order(model: Model, tree: Sequence[str]) -> list[tuple[str, str, str, int]]:
    """Tree edges in BFS order from the least vertex as (edge, parent, child, sign).

    ``sign`` is +1 when the edge is oriented parent -> child.
    """
    root = model.vertices[0]
    adj: dict[str, list[str]] = {v: [] for v in model.vertices}
    for eid in tree:
        e = model.edge(eid)
        adj[e.tail].append(eid)
        adj[e.head].append(eid)
    order, seen, frontier = [], {root}, [root]
    while frontier:
        nxt = []
        for v in frontier:
            for eid in adj[v]:
                e = model.edge(eid)
                w = e.other_end(v)
                if w not in seen:
                    seen.add(w)
                    order.append((eid, v, w, 1 if e.tail == v else -1))
                    nxt.append(w)
        frontier = nxt
    return order


def _enumerate_smooth_free(model: Model, d0: Divisor, guard: ScaleGuard) -> list[RationalFunction]:
    """All f with D0 + div f effective and free of smooth cut sets, for effective D0."""
    d = d0.degree
    sub = refine(model, [p for p in d0 if not p.is_vertex])
    g1 = sub.child
    guard.check("edges of the working model", len(g1.edges), guard.max_edges + 2 * guard.max_degree)
    if not g1.edges or d == 0:
        return [RationalFunction.constant(model)]
    chips = {v: d0[sub.to_parent(Point(vertex=v))] for v in g1.vertices}
    trees = _spanning_trees(g1, guard.max_spanning_trees)
    guard.check("spanning trees", len(trees), guard.max_spanning_trees)
    found: dict[Divisor, RationalFunction] = {}
    slopes = range(-d, d + 1)
    for tree in trees:
        order = _tree_order(g1, tree)
        in_tree = set(tree)
        others = [eid for eid in g1.edges if eid not in in_tree]
        # the last non-tree edge touching each vertex, for early effectivity checks
        last_touch: dict[str, int] = {}
        for i, eid in enumerate(others):
            e = g1.edge(eid)
            last_touch[e.tail] = i
            last_touch[e.head] = i
        closes_at: dict[int, list[str]] = {}
        for v, i in last_touch.items():
            closes_at.setdefault(i, []).append(v)
        tree_only = [v for v in g1.vertices if v not in last_touch]
        for choice in itertools.product(slopes, repeat=len(order)):
            values = {g1.vertices[0]: Fraction(0)}
            out = {v: 0 for v in g1.vertices}
            for (eid, par, ch, sign), s in zip(order, choice):
                values[ch] = values[par] + s * g1.edge(eid).length
                out[par] += s
                out[ch] -= s
            if any(chips[v] + out[v] < 0 for v in tree_only):
                continue
            options = []
            for eid in others:
                e = g1.edge(eid)
                opts = []
                # loops fall out of the same rule with r = 0
                r = (values[e.head] - values[e.tail]) / e.length
                if r.denominator == 1 and abs(r) <= d:
                    opts.append(("lin", int(r)))
                top = ceil(r) - 1
                low = floor(r) + 1
                for a in range(-d, top + 1):
                    for b in range(max(low, a + 1), min(d, a + d) + 1):
                        opts.append(("cut", a, b))
                if not opts:
                    break
                options.append(opts)
            else:
                _search_cuts(g1, others, options, closes_at, chips, out, values, model, sub, d, found)
    return list(found.values())


def _search_cuts(g1, others, options, closes_at, chips, out, values, model, sub, d, found) -> None:
    picks: list[tuple] = [None] * len(others)

    def step(i: int, spent: int) -> None:
        if i == len(others):
            _emit(g1, others, picks, chips, out, values, model, sub, found)
            return
        e = g1.edge(others[i])
        for opt in options[i]:
            cost = opt[2] - opt[1] if opt[0] == "cut" else 0
            if spent + cost > d:
                continue
            a, b = (opt[1], opt[1]) if opt[0] == "lin" else (opt[1], opt[2])
            out[e.tail] += a
            out[e.head] -= b
            if all(chips[v] + out[v] >= 0 for v in closes_at.get(i, ())):
                picks[i] = opt
                step(i + 1, spent + cost)
            out[e.tail] -= a
            out[e.head] += b

    step(0, 0)


def _emit(g1, others, picks, chips, out, values, model, sub, found) -> None:
    coeffs: dict[Point, int] = {}
    extra_knots: dict[str, tuple[Fraction, Fraction]] = {}
    for v in g1.vertices:
        c = chips[v] + out[v]
        if c:
            coeffs[sub.to_parent(Point(vertex=v))] = c
    for eid, opt in zip(others, picks):
        if opt[0] != "cut":
            continue
        e = g1.edge(eid)
        _, a, b = opt
        t = (b * e.length - (values[e.head] - values[e.tail])) / (b - a)
        coeffs[sub.to_parent(g1.point(eid, t))] = b - a
        extra_knots[eid] = (t, values[e.tail] + a * t)
    divisor = Divisor(coeffs)
    if divisor in found or has_smooth_cut(model, divisor.support):
        return
    knots = {}
    for eid, e in g1.edges.items():
        ks = [(Fraction(0), values[e.tail]), (e.length, values[e.head])]
        if eid in extra_knots:
            ks.insert(1, extra_knots[eid])
        knots[eid] = ks
    found[divisor] = RationalFunction.from_child(sub, RationalFunction(g1, knots))


def generators(divisor: Divisor, model: Model, guard: ScaleGuard = DEFAULT_GUARD) -> GeneratingSet:
    """The finite generating set S(D) of R(D): members whose D + div f has no smooth cut set.

    Empty when |D| is empty.
    """
    guard.check("canonical edges", len(model.edges), guard.max_edges)
    if divisor.degree < 0:
        return GeneratingSet(divisor, (), model)
    guard.check("divisor degree", divisor.degree, guard.max_degree)
    q = Point(vertex=model.vertices[0])
    red = reduce(divisor, q, model)
    if not red.divisor.is_effective:
        return GeneratingSet(divisor, (), model)
    found = _enumerate_smooth_free(model, red.divisor, guard)
    return GeneratingSet.build(divisor, (red.witness + g for g in found), model)


# ---------------------------------------------------------------------------
# extremality
# ---------------------------------------------------------------------------


def _cells(model: Model, support: Sequence[Point]) -> tuple[Subdivision, list[list[str]], dict[str, int]]:
    sub = refine(model, support)
    removed = {sub.to_child(p).vertex for p in support}
    child = sub.child
    parent = {eid: eid for eid in child.edges}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for v in child.vertices:
        if v in removed:
            continue
        incident = [eid for eid, _ in child.half_edges(v)]
        for eid in incident[1:]:
            parent[find(eid)] = find(incident[0])
    groups: dict[str, list[str]] = {}
    for eid in child.edges:
        groups.setdefault(find(eid), []).append(eid)
    cells = sorted(groups.values())
    cell_of = {eid: i for i, cell in enumerate(cells) for eid in cell}
    return sub, cells, cell_of


def is_extremal(f: RationalFunction, divisor: Divisor, action=None, guard: ScaleGuard = DEFAULT_GUARD) -> bool:
    """False iff two proper (K-invariant) subgraphs cover the graph and each can fire on D + div f.

    A fireable subgraph has its boundary inside supp(D + div f), so it is a
    union of closed cells of the graph cut along that support; adding
    isolated support points never helps a cover, so only cell unions are tried.
    """
    model = f.model
    effective = divisor + f.div()
    if not effective.is_effective:
        raise ValueError("f is not in R(D)")
    support = list(effective.support)
    if not model.edges:
        return True
    sub, cells, cell_of = _cells(model, support)
    m = len(cells)
    if m < 2:
        return True
    guard.check("cells", m, guard.max_cells)
    # germs at each support point, by cell
    germs: dict[Point, list[int]] = {}
    for p in support:
        v = sub.to_child(p).vertex
        germs[p] = [cell_of[eid] for eid, _ in sub.child.half_edges(v)]
    perms = _cell_permutations(action, sub, cells, cell_of) if action is not None else []
    full = (1 << m) - 1
    fireable = []
    for mask in range(1, full):
        if any(_image_mask(mask, perm) != mask for perm in perms):
            continue
        ok = True
        for p, cs in germs.items():
            inside = [c for c in cs if mask >> c & 1]
            if inside and len(cs) - len(inside) > effective[p]:
                ok = False
                break
        if ok:
            fireable.append(mask)
    for a, b in itertools.combinations_with_replacement(fireable, 2):
        if a | b == full:
            return False
    return True


def _image_mask(mask: int, perm: Sequence[int]) -> int:
    out = 0
    for c, img in enumerate(perm):
        if mask >> c & 1:
            out |= 1 << img
    return out


def _cell_permutations(action, sub: Subdivision, cells, cell_of) -> list[list[int]]:
    perms = []
    for element in action.generators:
        perm = []
        for cell in cells:
            probe = sub.to_parent(sub.child.midpoint(cell[0]))
            image = sub.to_child(action.apply(element, probe))
            perm.append(cell_of[image.edge] if not image.is_vertex else _cell_at_vertex(sub, image, cell_of))
        perms.append(perm)
    return perms


def _cell_at_vertex(sub: Subdivision, point: Point, cell_of) -> int:
    eid, _ = sub.child.half_edges(point.vertex)[0]
    return cell_of[eid]
