"""Shared builders for tests: fixture loading and seeded random objects."""

from __future__ import annotations

import random
from fractions import Fraction
from importlib import resources

from tropgalois.action import IsometricAction
from tropgalois.chipfiring import ClosedSubgraph, chip_firing
from tropgalois.divisors import Divisor
from tropgalois.functions import RationalFunction
from tropgalois.graph import Model, Point
from tropgalois.tmg import TMGDocument, parse

FIXTURES = resources.files("tropgalois") / "fixtures"
FIXTURE_NAMES = ("banana4", "banana5", "circle", "dumbbell", "k4", "theta", "tree", "type1_g3", "type2_g3")


def load(name: str) -> TMGDocument:
    return parse(FIXTURES / f"{name}.tmg.json")


def model(name: str) -> Model:
    return load(name).model


def action(name: str, act: str = "iota") -> IsometricAction:
    return load(name).action(act)


def random_point(m: Model, rng: random.Random, denominator: int = 4) -> Point:
    """A vertex or a lattice point k/denominator inside an edge, uniformly over candidates."""
    pts = [Point(vertex=v) for v in m.vertices]
    for eid, e in m.edges.items():
        n = e.length * denominator
        pts.extend(m.point(eid, Fraction(k, denominator)) for k in range(1, int(n)) if Fraction(k, denominator) < e.length)
    return rng.choice(pts)


def random_effective(m: Model, rng: random.Random, degree: int, denominator: int = 4) -> Divisor:
    return Divisor((random_point(m, rng, denominator), 1) for _ in range(degree))


def random_divisor(m: Model, rng: random.Random, degree: int, denominator: int = 4) -> Divisor:
    """Degree ``degree``; about half the draws also carry a +p - q dipole, so not all are effective."""
    d = random_effective(m, rng, degree, denominator)
    if rng.random() < 0.5:
        d = d + Divisor.of(random_point(m, rng, denominator)) - Divisor.of(random_point(m, rng, denominator))
    return d


def random_invariant_divisor(act: IsometricAction, rng: random.Random, orbits: int) -> Divisor:
    total = Divisor()
    for _ in range(orbits):
        p = random_point(act.model, rng)
        total = total + Divisor((q, 1) for q in act.orbit(p))
    return total


def random_chip_firing(m: Model, rng: random.Random, terms: int = 3) -> RationalFunction:
    """An integer combination of chip-firing moves from random lattice point sets."""
    f = RationalFunction.constant(m, rng.randint(-2, 2))
    for _ in range(terms):
        pts = {random_point(m, rng) for _ in range(rng.randint(1, 3))}
        length = Fraction(rng.randint(1, 8), 4)
        f = f + chip_firing(ClosedSubgraph.from_points(m, pts), length) * rng.choice((-2, -1, 1, 2))
    return f
