"""The twelve acceptance criteria, one test each.

Every test registers a PASS/FAIL line through ``acceptance_log.criterion``;
the lines are printed in the pytest terminal summary.  Run this file alone
with ``pytest tests/test_acceptance.py -v``.
"""

from __future__ import annotations

import random
import time
from fractions import Fraction
from itertools import combinations_with_replacement

from acceptance_log import criterion
from helpers import FIXTURES, action, model, random_divisor, random_invariant_divisor, random_point
from oracles import theta_quarter_lattice

from tropgalois.action import IsometricAction, invariant_generators, quotient, symmetrize
from tropgalois.chipfiring import decompose_into_chip_firings
from tropgalois.divisors import Divisor, canonical_divisor
from tropgalois.graph import Model, Point
from tropgalois.hyperelliptic import (
    canonical_map_analysis,
    iota_invariant_canonical_covering,
    is_hyperelliptic,
)
from tropgalois.linear_systems import generators, rank, reduce, riemann_roch_residual, span_membership
from tropgalois.morphisms import EdgeImage, MultiMorphism, identity_morphism, verify_galois
from tropgalois.projective import (
    TPPoint,
    chart_distances,
    is_K_injective,
    k_ample_witness,
    tp_distance,
)
from tropgalois.tmg import parse_map


def test_ac01_riemann_roch():
    rng = random.Random(101)
    with criterion(1, "Riemann-Roch residual is zero on random divisors (theta, B4, dumbbell)", budget=30):
        checked = 0
        for name in ("theta", "banana4", "dumbbell"):
            m = model(name)
            for i in range(50):
                d = random_divisor(m, rng, i % 7)
                assert riemann_roch_residual(d, m) == 0, (name, str(d))
                checked += 1
        assert checked >= 50


def test_ac02_chart_independence():
    rng = random.Random(202)
    with criterion(2, "tp_distance is chart-independent on 100 integer pairs in TP^3..TP^6", budget=1):
        for i in range(100):
            n = 3 + i % 4
            u = TPPoint(rng.randint(-20, 20) for _ in range(n + 1))
            v = TPPoint(rng.randint(-20, 20) for _ in range(n + 1))
            dists = chart_distances(u, v)
            assert len(dists) == n + 1
            assert len(set(dists)) == 1, (u, v, dists)
            assert tp_distance(u, v) == dists[0]


def test_ac03_theta_quotient():
    with criterion(3, "theta/<iota> is a 3-leg star with legs 1/2; pi harmonic of degree 2; Galois", budget=1):
        act = action("theta")
        q = quotient(act)
        star = q.quotient
        assert star.genus == 0
        assert len(star.edges) == 3
        assert all(e.length == Fraction(1, 2) for e in star.edges.values())
        center = [v for v in star.vertices if star.valence(v) == 3]
        assert len(center) == 1
        assert sorted(star.valence(v) for v in star.vertices) == [1, 1, 1, 3]
        pi = q.projection
        assert pi.is_harmonic()
        assert pi.degree() == 2 == act.order
        assert verify_galois(pi, act).ok


def test_ac04_pull_push_identity():
    rng = random.Random(404)
    with criterion(4, "pi^*(pi_*(D)) = |K| D on 20 invariant divisors (theta, B4)"):
        for name in ("theta", "banana4"):
            act = action(name)
            pi = quotient(act).projection
            for _ in range(20):
                d = random_invariant_divisor(act, rng, rng.randint(1, 3))
                assert act.is_invariant_divisor(d)
                assert pi.pull_divisor(pi.push_divisor(d)) == d * act.order, (name, str(d))


def _circle_double_cover() -> MultiMorphism:
    from tropgalois.graph import refine

    big = Model(["p"], [("e", "p", "p", 2)])
    small = Model(["q"], [("f", "q", "q", 1)])
    sub = refine(big, [big.point("e", 1)])
    work = sub.child
    return MultiMorphism(
        work,
        small,
        {v: "q" for v in work.vertices},
        {eid: EdgeImage("f", False, 1) for eid in work.edges},
        source_sub=sub,
    )


def morphism_fixtures() -> dict[str, MultiMorphism]:
    maps = {"pi.json": parse_map(FIXTURES / "pi.json").morphism}
    for name, act in [("theta", "iota"), ("banana4", "iota"), ("banana4", "swap"), ("dumbbell", "iota"), ("circle", "reflection")]:
        maps[f"{name}/{act}"] = quotient(action(name, act)).projection
    maps["theta canonical cover"] = iota_invariant_canonical_covering(model("theta")).covering.morphism
    maps["circle double cover"] = _circle_double_cover()
    maps["k4 identity"] = identity_morphism(model("k4"))
    return maps


def test_ac05_degree_laws():
    rng = random.Random(505)
    with criterion(5, "deg(phi_* D) = deg D and deg(phi^* D') = deg(phi) deg D' on all morphism fixtures"):
        for name, phi in morphism_fixtures().items():
            assert phi.is_harmonic(), name
            deg = phi.degree()
            for k in range(5):
                d = random_divisor(phi.base, rng, k)
                assert phi.push_divisor(d).degree == d.degree, name
                d2 = random_divisor(phi.target, rng, k)
                assert phi.pull_divisor(d2).degree == deg * d2.degree, name


def _invariant_members(m: Model, act: IsometricAction, d: Divisor, rng: random.Random, count: int):
    """Symmetrized tropical combinations of chip-firing combinations lying in R(D)."""
    pool = []
    for _ in range(16):
        red = reduce(d, random_point(m, rng, 16), m)
        f = decompose_into_chip_firings(red.witness).evaluate(m)
        assert f == red.witness
        pool.append(f)
    out = []
    while len(out) < count:
        picks = rng.sample(pool, rng.randint(2, 4))
        f = picks[0].shift(Fraction(rng.randint(-8, 8), 16))
        for g in picks[1:]:
            f = f.maximum_with(g.shift(Fraction(rng.randint(-8, 8), 16)))
        out.append(symmetrize(f, act))
    return out


def test_ac06_invariant_generation():
    rng = random.Random(606)
    with criterion(6, "invariant generators of R(K_theta)^<iota> span 50 random invariant members"):
        m = model("theta")
        act = action("theta")
        k = canonical_divisor(m)
        gens = invariant_generators(k, act)
        members = _invariant_members(m, act, k, rng, 50)
        for f in members:
            assert act.is_invariant_function(f)
            assert (k + f.div()).is_effective
            res = span_membership(gens, f)
            assert res.member, f


def test_ac07_genus_two_canonical():
    with criterion(7, "theta canonical map: tree image, fibers of size 1 or 2, Z/2-Galois"):
        report = canonical_map_analysis(model("theta"))
        assert report["genus"] == 2
        assert report["image_genus"] == 0
        assert set(report["fiber_sizes"]) <= {1, 2} and 2 in report["fiber_sizes"]
        assert report["galois"] is True
        assert report["degree"] == 2


def test_ac08_banana_non_harmonic():
    with criterion(8, "B4, B5 canonical maps: only x~y identified, non-harmonic exactly at x, y, image genus g+1"):
        for name in ("banana4", "banana5"):
            m = model(name)
            report = canonical_map_analysis(m)
            assert report["injective"] is False
            assert report["identified_points"] == [["x", "y"]]
            assert report["identified_edges"] == []
            assert report["non_harmonic_at"] == ["x", "y"]
            assert report["image_genus"] == m.genus + 1


def test_ac09_hyperelliptic_coverings():
    with criterion(9, "<iota>-invariant canonical covering is a verified double cover of a tree (theta, B4, dumbbell)"):
        for name in ("theta", "banana4", "dumbbell"):
            cov = iota_invariant_canonical_covering(model(name))
            assert cov.image_genus == 0
            assert cov.covering.verdict.ok
            assert cov.covering.verdict.degree == 2
            assert set(cov.fiber_sizes) == {1, 2}


def test_ac10_local_isometry():
    with criterion(10, "K-injective fixture maps send every working edge to an image of equal length"):
        cases = []
        theta = model("theta")
        act = action("theta")
        cases.append(("theta invariant canonical", invariant_generators(canonical_divisor(theta), act), act))
        dumb = action("dumbbell")
        cases.append(("dumbbell invariant canonical", iota_invariant_canonical_covering(dumb.model).functions, dumb))
        k4 = model("k4")
        cases.append(("k4 canonical", generators(canonical_divisor(k4), k4), None))
        circle = model("circle")
        triv = IsometricAction.trivial(circle)
        witness = k_ample_witness(Divisor.of(Point(vertex="p")), triv)
        cases.append(("circle ample", witness.functions, triv))
        amp = k_ample_witness(Divisor.of(Point(vertex="x"), Point(vertex="y")), act)
        cases.append(("theta ample", amp.functions, act))
        for name, funcs, a in cases:
            rep = is_K_injective(funcs, a)
            assert rep.injective, name
            img = rep.image
            for eid, e in img.working.child.edges.items():
                assert img.image_length(eid) == e.length, (name, eid)


def test_ac11_k4_negative_control():
    with criterion(11, "K4 is not hyperelliptic and its canonical map is injective"):
        m = model("k4")
        start = time.perf_counter()
        assert is_hyperelliptic(m) is None
        assert time.perf_counter() - start < 5
        report = canonical_map_analysis(m)
        assert report["injective"] is True
        assert report["witness"] is None


def test_ac12_rank_oracle():
    with criterion(12, "rank agrees with the dollar-game oracle on the 1/4 lattice of theta (degree <= 4)", budget=60):
        m = model("theta")
        lattice = theta_quarter_lattice()
        pts = [m.parse_point(n) for n in lattice.names]
        n = len(pts)
        cases = set()
        for deg in range(5):
            for e in combinations_with_replacement(range(n), deg):
                c = [0] * n
                for v in e:
                    c[v] += 1
                cases.add(tuple(c))
                for j in range(n):
                    cc = list(c)
                    cc[j] -= 1
                    cases.add(tuple(cc))
        assert len(cases) > 10000
        for c in sorted(cases):
            d = Divisor((pts[i], k) for i, k in enumerate(c) if k)
            assert rank(d, m) == lattice.rank(c), str(d)
