import random
from fractions import Fraction

import pytest
from helpers import FIXTURES, action, model, random_chip_firing, random_divisor, random_point

from tropgalois.action import IsometricAction, quotient, symmetrize
from tropgalois.chipfiring import ClosedSubgraph, chip_firing
from tropgalois.divisors import Divisor, canonical_divisor
from tropgalois.functions import RationalFunction
from tropgalois.graph import GraphError, Model, Point, refine
from tropgalois.linear_systems import generators
from tropgalois.morphisms import (
    EdgeImage,
    MultiMorphism,
    factor_through_quotient,
    identity_morphism,
    verify_galois,
)
from tropgalois.projective import image_graph
from tropgalois.tmg import parse_map

X, Y = Point(vertex="x"), Point(vertex="y")
HALF = Fraction(1, 2)


@pytest.fixture(scope="module")
def pi():
    return quotient(action("theta")).projection


def circle_double_cover():
    big = Model(["p"], [("e", "p", "p", 2)])
    small = Model(["q"], [("f", "q", "q", 1)])
    sub = refine(big, [big.point("e", 1)])
    return MultiMorphism(
        sub.child, small, {v: "q" for v in sub.child.vertices}, {e: EdgeImage("f", False, 1) for e in sub.child.edges}, source_sub=sub
    )


def relabel(phi: MultiMorphism, vnames: dict, enames: dict, reverse: bool = False) -> MultiMorphism:
    """phi followed by an isometry of its target that renames (and optionally reverses) everything."""
    target = Model(
        [vnames[v] for v in phi.target.vertices],
        [
            (enames[e.id], vnames[e.head] if reverse else vnames[e.tail], vnames[e.tail] if reverse else vnames[e.head], e.length)
            for e in phi.target.edges.values()
        ],
    )
    emap = {k: EdgeImage(enames[img.target], img.reverse != reverse, img.dilation) for k, img in phi.edge_map.items()}
    vmap = {k: vnames[w] for k, w in phi.vertex_map.items()}
    return MultiMorphism(phi.source, target, vmap, emap, source_sub=phi.source_sub)


def test_map_file_matches_quotient(pi):
    doc = parse_map(FIXTURES / "pi.json")
    assert doc.morphism.to_json() == pi.to_json()


def test_local_degree_examples(pi):
    theta = model("theta")
    ident = identity_morphism(theta)
    assert ident.local_degree(X).value == 1
    assert ident.local_degree(theta.point("e1", HALF)).value == 1
    assert pi.local_degree(X).value == 1
    assert pi.local_degree(theta.point("e2", HALF)).value == 2
    cover = circle_double_cover()
    for p in (Point(vertex="p"), cover.base.point("e", HALF), cover.base.point("e", 1)):
        assert cover.local_degree(p).value == 1
        assert len(cover.fiber(cover.apply(p))) == 2
    assert cover.degree() == 2


def test_harmonicity_examples(pi):
    assert pi.is_harmonic() and pi.degree() == 2
    ident = identity_morphism(model("k4"))
    assert ident.is_harmonic() and ident.degree() == 1
    b4 = model("banana4")
    phi = image_graph(generators(canonical_divisor(b4), b4)).morphism
    report = phi.harmonic_report()
    assert not report.harmonic
    assert "x" in report.failures and "y" in report.failures
    with pytest.raises(ValueError):
        phi.degree()


def test_morphism_validation():
    theta = model("theta")
    with pytest.raises(GraphError, match="dilation"):
        MultiMorphism(theta, theta, {v: v for v in theta.vertices}, {e: EdgeImage(e, False, 2) for e in theta.edges})
    with pytest.raises(GraphError, match="discontinuous"):
        MultiMorphism(theta, theta, {"x": "y", "y": "x"}, {e: EdgeImage(e, False, 1) for e in theta.edges})
    with pytest.raises(GraphError, match="cover every"):
        MultiMorphism(theta, theta, {"x": "x"}, {})


def test_push_and_pull_divisors(pi):
    theta = model("theta")
    assert pi.pull_divisor(Divisor.of(X)) == Divisor.of(X, Y)
    assert pi.push_divisor(Divisor.of(X, Y)) == Divisor([(X, 2)])
    assert pi.pull_divisor(pi.push_divisor(Divisor.of(X, Y))) == Divisor.of(X, Y) * 2
    m = theta.point("e1", HALF)
    assert pi.pull_divisor(Divisor.of(pi.apply(m))) == Divisor([(m, 2)])


def test_pull_back_functions(pi):
    star = pi.target
    assert pi.pull_function(RationalFunction.constant(star, 3)) == RationalFunction.constant(model("theta"), 3)
    center = ClosedSubgraph.from_points(star, [Point(vertex="x")])
    down = chip_firing(center, Fraction(1, 4))
    up = pi.pull_function(down)
    act = action("theta")
    assert act.is_invariant_function(up)
    theta = model("theta")
    assert up.value(theta.point("e1", Fraction(1, 8))) == Fraction(-1, 8)
    assert up.value(theta.point("e3", Fraction(7, 8))) == Fraction(-1, 8)
    assert up.value(theta.point("e2", HALF)) == Fraction(-1, 4)


def test_push_forward_constant(pi):
    pushed = pi.push_function(RationalFunction.constant(model("theta"), 1))
    assert pushed == RationalFunction.constant(pi.target, 2)


def test_pull_back_commutes_with_div():
    rng = random.Random(51)
    for phi in (quotient(action("theta")).projection, quotient(action("dumbbell")).projection, circle_double_cover()):
        for _ in range(8):
            f = random_chip_firing(phi.target, rng, 2)
            assert phi.pull_function(f).div() == phi.pull_divisor(f.div())
            assert phi.div_mm(phi.pull_function(f)) == phi.pull_divisor(f.div())


def test_push_forward_commutes_with_div():
    rng = random.Random(52)
    for phi in (quotient(action("theta")).projection, circle_double_cover(), quotient(action("banana4", "swap")).projection):
        for _ in range(8):
            f = random_chip_firing(phi.base, rng, 2)
            assert phi.push_divisor(phi.div_mm(f)) == phi.push_function(f).div()


def test_div_mm_examples(pi):
    rng = random.Random(53)
    theta = model("theta")
    f = random_chip_firing(theta, rng)
    assert identity_morphism(theta).div_mm(f) == f.div()
    assert pi.div_mm(f) == f.div()
    doubled = MultiMorphism(theta, theta, {v: v for v in theta.vertices}, {e: EdgeImage(e, False, 1) for e in theta.edges}, None, {"e1": 2, "e2": 1, "e3": 1})
    g = RationalFunction(theta, {e: [(0, 0), (1, 1)] for e in theta.edges})
    assert g.div() == Divisor([(X, 3), (Y, -3)])
    assert doubled.div_mm(g) == Divisor([(X, 4), (Y, -4)])


def test_local_degree_reports_divisibility():
    theta = model("theta")
    phi = MultiMorphism(theta, theta, {v: v for v in theta.vertices}, {e: EdgeImage(e, False, 1) for e in theta.edges}, {"e1": 2, "e2": 1, "e3": 1}, None)
    ld = phi.local_degree(X)
    assert ld.value is None and "divide" in ld.report


def test_verify_galois_examples(pi):
    act = action("theta")
    verdict = verify_galois(pi, act)
    assert verdict.ok and verdict.degree == 2
    interior = [k for k in verdict.fibers if k.endswith("@interior")]
    assert all(len(verdict.fibers[k]) == 1 and len(verdict.fibers[k][0]) == 2 for k in interior)
    k4 = model("k4")
    assert verify_galois(identity_morphism(k4), IsometricAction.trivial(k4)).ok
    b4 = model("banana4")
    phi = image_graph(generators(canonical_divisor(b4), b4)).morphism
    bad = verify_galois(phi, IsometricAction.trivial(b4))
    assert not bad.ok and "harmonic" in bad.witness


def test_verify_galois_catches_wrong_group(pi):
    theta = model("theta")
    verdict = verify_galois(pi, IsometricAction.trivial(theta))
    assert not verdict.ok and "degree" in verdict.witness
    swap_fiber = quotient(action("banana4", "swap")).projection
    wrong = verify_galois(swap_fiber, action("banana4", "iota"))
    assert not wrong.ok


def test_factor_through_quotient_of_pi(pi):
    fac = factor_through_quotient(pi, action("theta"))
    assert fac.bijective
    assert set(fac.length_ratio.values()) == {1}
    for v, image in fac.vertex_map.items():
        assert image == Point(vertex=v)


def test_factor_through_relabeling(pi):
    vnames = {v: f"w{i}" for i, v in enumerate(pi.target.vertices)}
    enames = {e: f"s{i}" for i, e in enumerate(pi.target.edges)}
    for reverse in (False, True):
        phi = relabel(pi, vnames, enames, reverse)
        act = action("theta")
        assert verify_galois(phi, act).ok
        fac = factor_through_quotient(phi, act)
        assert fac.bijective and set(fac.length_ratio.values()) == {1}
        for v, image in fac.vertex_map.items():
            assert image == Point(vertex=vnames[v])
        for e, (carrier, s, t) in fac.edge_map.items():
            assert carrier == enames[e]
            assert (s > t) == reverse


def test_dilated_target_is_not_galois(pi):
    big = Model(pi.target.vertices, [(e.id, e.tail, e.head, 2 * e.length) for e in pi.target.edges.values()])
    emap = {k: EdgeImage(v.target, v.reverse, 2) for k, v in pi.edge_map.items()}
    phi = MultiMorphism(pi.source, big, pi.vertex_map, emap, source_sub=pi.source_sub)
    assert phi.is_harmonic() and phi.degree() == 4
    assert not verify_galois(phi, action("theta")).ok


def test_degree_laws_random():
    rng = random.Random(54)
    for phi in (quotient(action("type2_g3")).projection, circle_double_cover()):
        for k in range(4):
            d = random_divisor(phi.base, rng, k)
            assert phi.push_divisor(d).degree == d.degree
            d2 = random_divisor(phi.target, rng, k)
            assert phi.pull_divisor(d2).degree == phi.degree() * d2.degree


def test_fibers_are_orbits():
    rng = random.Random(55)
    act = action("banana4", "iota")
    pi = quotient(act).projection
    for _ in range(10):
        p = random_point(act.model, rng, 8)
        assert set(pi.fiber(pi.apply(p))) == set(act.orbit(p))


def test_symmetrized_functions_descend(pi):
    rng = random.Random(56)
    act = action("theta")
    for _ in range(5):
        g = symmetrize(random_chip_firing(act.model, rng), act)
        pushed = pi.push_function(g)
        assert pi.pull_function(pushed) == g * 2
