"""Isometry groups, hyperelliptic involutions and the canonical map."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations, product
from typing import Iterator

from .action import GroupElement, IsometricAction, quotient
from .divisors import Divisor, canonical_divisor
from .graph import GraphError, Model, Point, canonical_model
from .guard import DEFAULT_GUARD, ScaleGuard
from .linear_systems import GeneratingSet, generators, is_extremal, rank

__all__ = [
    "isometric_automorphisms",
    "HyperellipticCertificate",
    "hyperelliptic_involutions",
    "is_hyperelliptic",
    "canonical_map_analysis",
    "iota_invariant_canonical_covering",
    "canonical_generators",
]


def _signature(model: Model, v: str) -> tuple:
    loops = sorted(e.length for eid, e in model.edges.items() if e.is_loop and e.tail == v)
    others = sorted(e.length for eid, e in model.edges.items() if not e.is_loop and v in (e.tail, e.head))
    return (model.valence(v), tuple(loops), tuple(others))


def _vertex_maps(model: Model) -> Iterator[dict[str, str]]:
    verts = list(model.vertices)
    sig = {v: _signature(model, v) for v in verts}
    bundles: dict[tuple[str, str], dict] = {}
    for e in model.edges.values():
        if not e.is_loop:
            key = tuple(sorted((e.tail, e.head)))
            bundles.setdefault(key, {}).setdefault(e.length, 0)
            bundles[key][e.length] += 1

    def bundle(a: str, b: str) -> dict:
        return bundles.get(tuple(sorted((a, b))), {})

    assignment: dict[str, str] = {}
    used: set[str] = set()

    def extend(i: int) -> Iterator[dict[str, str]]:
        if i == len(verts):
            yield dict(assignment)
            return
        v = verts[i]
        for w in verts:
            if w in used or sig[w] != sig[v]:
                continue
            if any(bundle(u, v) != bundle(assignment[u], w) for u in verts[:i]):
                continue
            assignment[v] = w
            used.add(w)
            yield from extend(i + 1)
            used.discard(w)
            del assignment[v]

    yield from extend(0)


def _edge_maps(model: Model, vmap: dict[str, str]) -> Iterator[dict[str, tuple[str, bool]]]:
    groups: dict[tuple, list[str]] = {}
    for eid, e in model.edges.items():
        if e.is_loop:
            key = ("loop", e.tail, e.length)
        else:
            key = ("edge", *sorted((e.tail, e.head)), e.length)
        groups.setdefault(key, []).append(eid)
    choices = []
    for key, members in sorted(groups.items()):
        if key[0] == "loop":
            target = groups[("loop", vmap[key[1]], key[2])]
            options = []
            for perm in permutations(target):
                for flips in product((False, True), repeat=len(members)):
                    options.append({m: (t, f) for m, t, f in zip(members, perm, flips)})
        else:
            a, b = key[1], key[2]
            target = groups[("edge", *sorted((vmap[a], vmap[b])), key[3])]
            options = []
            for perm in permutations(target):
                opt = {}
                for m, t in zip(members, perm):
                    e, te = model.edge(m), model.edge(t)
                    opt[m] = (t, vmap[e.tail] != te.tail)
                options.append(opt)
        choices.append(options)
    for combo in product(*choices):
        out: dict[str, tuple[str, bool]] = {}
        for part in combo:
            out.update(part)
        yield out


def isometric_automorphisms(model: Model, guard: ScaleGuard = DEFAULT_GUARD) -> IsometricAction:
    """Every length-preserving automorphism of the model, by backtracking over vertex images.

    On a circle's one-vertex model this is the reflection group fixing the marker.
    """
    guard.check("canonical edges", len(model.edges), guard.max_edges)
    elements = []
    for vmap in _vertex_maps(model):
        for emap in _edge_maps(model, vmap):
            elements.append(GroupElement(vmap, emap))
            guard.check("group order", len(elements), guard.max_group_order)
    return IsometricAction.from_elements(model, elements, guard)


@dataclass(frozen=True)
class HyperellipticCertificate:
    """An involution with a genus-0 quotient plus the divisor x + iota(x) of rank one."""

    involution: GroupElement
    action: IsometricAction
    quotient: Model
    witness: Divisor
    witness_rank: int
    involutions_found: int

    def to_json(self) -> dict:
        from .tmg import model_to_json

        return {
            "hyperelliptic": True,
            "involution": self.involution.to_json(),
            "quotient": model_to_json(self.quotient),
            "witness": str(self.witness),
            "witness_degree": self.witness.degree,
            "witness_rank": self.witness_rank,
            "involutions_found": self.involutions_found,
        }


def _check_hypotheses(model: Model) -> None:
    leaves = [v for v in model.vertices if model.valence(v) == 1]
    if leaves:
        raise GraphError(f"graph has valence-1 points: {', '.join(leaves)}")


def hyperelliptic_involutions(model: Model, guard: ScaleGuard = DEFAULT_GUARD) -> list[GroupElement]:
    """Order-2 isometries whose quotient is a tree."""
    group = isometric_automorphisms(model, guard)
    out = []
    for g in group.elements[1:]:
        if not g.compose(g).is_identity:
            continue
        if quotient(IsometricAction(model, {"iota": g})).quotient.genus == 0:
            out.append(g)
    return out


def is_hyperelliptic(model: Model, guard: ScaleGuard = DEFAULT_GUARD) -> HyperellipticCertificate | None:
    """Certificate when the canonical model carries an involution with tree quotient."""
    model = canonical_model(model)
    if model.genus < 2:
        raise GraphError(f"hyperellipticity needs genus >= 2 (genus is {model.genus})")
    _check_hypotheses(model)
    found = hyperelliptic_involutions(model, guard)
    if not found:
        return None
    iota = found[0]
    action = IsometricAction(model, {"iota": iota})
    x = Point(vertex=model.vertices[0])
    witness = Divisor.of(x, iota.apply(x, model))
    r = rank(witness, model)
    if r != 1:
        raise ArithmeticError(f"involution found but x + iota(x) has rank {r}")
    return HyperellipticCertificate(iota, action, quotient(action).quotient, witness, r, len(found))


def canonical_generators(model: Model, guard: ScaleGuard = DEFAULT_GUARD) -> GeneratingSet:
    """Extremal generators of R(K) (the complete canonical linear system)."""
    k = canonical_divisor(model)
    full = generators(k, model, guard)
    kept = tuple(f for f in full if is_extremal(f, k, None, guard))
    return GeneratingSet(k, kept, model)


@dataclass(frozen=True)
class InvariantCovering:
    certificate: HyperellipticCertificate
    functions: GeneratingSet
    covering: object
    image_genus: int
    fiber_sizes: tuple[int, ...]


def iota_invariant_canonical_covering(model: Model, guard: ScaleGuard = DEFAULT_GUARD) -> InvariantCovering:
    """The <iota>-invariant subsystem through the degree-2 witness, and the double cover it induces."""
    from .action import invariant_generators
    from .projective import induced_covering

    model = canonical_model(model)
    cert = is_hyperelliptic(model, guard)
    if cert is None:
        raise ValueError("graph is not hyperelliptic")
    funcs = invariant_generators(cert.witness, cert.action, guard)
    cov = induced_covering(funcs, cert.action)
    image = cov.image.model
    if image.genus != 0:
        raise ArithmeticError(f"invariant canonical image has genus {image.genus}")
    probes = [Point(vertex=w) for w in image.vertices] + [image.midpoint(e) for e in image.edges]
    sizes = sorted({len(cov.morphism.fiber(p)) for p in probes})
    return InvariantCovering(cert, funcs, cov, image.genus, tuple(sizes))


def canonical_map_analysis(model: Model, guard: ScaleGuard = DEFAULT_GUARD) -> dict:
    """What the canonical linear system induces, dispatched on genus."""
    from .projective import is_K_injective

    model = canonical_model(model)
    _check_hypotheses(model)
    g = model.genus
    report: dict = {"genus": g}
    if g == 0:
        report["verdict"] = "not induced"
        report["reason"] = "the canonical divisor has negative degree, so |K| is empty"
        return report
    if g == 1:
        report["verdict"] = "constant map"
        report["reason"] = "K = 0, so R(K) holds only constants"
        return report
    if g == 2:
        cov = iota_invariant_canonical_covering(model, guard)
        report.update(
            verdict="galois double cover of a tree",
            galois=cov.covering.verdict.ok,
            degree=cov.covering.verdict.degree,
            image_genus=cov.image_genus,
            fiber_sizes=list(cov.fiber_sizes),
            generators=len(cov.functions),
        )
        return report
    funcs = canonical_generators(model, guard)
    inj = is_K_injective(funcs)
    img = inj.image
    phi = img.morphism
    identified = []
    groups: dict[str, list[str]] = {}
    for v, w in phi.vertex_map.items():
        groups.setdefault(w, []).append(str(img.working.to_parent(Point(vertex=v))))
    for w, pts in sorted(groups.items()):
        if len(pts) > 1:
            identified.append(sorted(pts))
    egroups: dict[str, list[str]] = {}
    for eid, im in phi.edge_map.items():
        egroups.setdefault(str(im.target), []).append(eid)
    overlapping = sorted(sorted(es) for t, es in egroups.items() if len(es) > 1 or t == "None")
    harmonic = phi.harmonic_report()
    report.update(
        verdict="injective" if inj.injective else "not injective",
        injective=inj.injective,
        witness=[str(p) for p in inj.witness] if inj.witness else None,
        identified_points=identified,
        identified_edges=overlapping,
        harmonic=harmonic.harmonic,
        non_harmonic_at=sorted(harmonic.failures),
        image_genus=img.genus,
        generators=len(funcs),
    )
    return report
