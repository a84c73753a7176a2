import random
from fractions import Fraction

import pytest
from helpers import model, random_chip_firing, random_point

from tropgalois.chipfiring import (
    INFINITE,
    ClosedSubgraph,
    can_fire,
    chip_firing,
    decompose_into_chip_firings,
)
from tropgalois.divisors import Divisor, canonical_divisor, parse_divisor
from tropgalois.functions import BOTTOM, RationalFunction, div, ord_at, tropical_add, tropical_scale
from tropgalois.graph import GraphError, Model, Point

HALF = Fraction(1, 2)


@pytest.fixture
def theta():
    return model("theta")


def cf_x(theta, length=HALF):
    return chip_firing(ClosedSubgraph.from_points(theta, [Point(vertex="x")]), length)


def mids(theta):
    return [theta.point(e, HALF) for e in ("e1", "e2", "e3")]


def test_divisor_arithmetic_and_text(theta):
    d = parse_divisor(theta, "2*x - e1@1/2 + y")
    assert d.degree == 2
    assert not d.is_effective
    assert str(d) == "2*x + y - e1@1/2"
    assert parse_divisor(theta, str(d)) == d
    assert (d - d).degree == 0 and not (d - d)
    assert parse_divisor(theta, "0") == Divisor()
    with pytest.raises(ValueError):
        parse_divisor(theta, "x y")


def test_ord_at_examples(theta):
    f = cf_x(theta)
    assert ord_at(f, Point(vertex="x")) == -3
    assert ord_at(RationalFunction.constant(theta, 7), Point(vertex="y")) == 0
    assert ord_at(f, theta.point("e1", HALF)) == 1


def test_div_examples(theta):
    assert div(RationalFunction.constant(theta, 3)) == Divisor()
    f = cf_x(theta)
    assert div(f) == Divisor([(Point(vertex="x"), -3)] + [(m, 1) for m in mids(theta)])
    assert div(tropical_add(f, f)) == div(f)
    with pytest.raises(ValueError):
        div(BOTTOM)


def test_tropical_add_examples():
    seg = Model(["a", "b"], [("s", "a", "b", 2)])
    up = RationalFunction(seg, {"s": [(0, 0), (2, 2)]})
    down = RationalFunction(seg, {"s": [(0, 2), (2, 0)]})
    v = tropical_add(up, down)
    assert v.knots("s") == ((0, 2), (1, 1), (2, 2))
    assert tropical_add(up, up) == up
    assert tropical_add(RationalFunction.constant(seg, 0), RationalFunction.constant(seg, -1)) == RationalFunction.constant(seg, 0)
    assert tropical_add(BOTTOM, up) is up
    assert tropical_add(up, BOTTOM) is up


def test_tropical_scale(theta):
    f = cf_x(theta)
    assert tropical_scale(0, f) == f
    assert tropical_scale(3, tropical_scale(-3, f)) == f
    assert div(tropical_scale(5, f)) == div(f)
    assert tropical_scale(5, BOTTOM) is BOTTOM


def test_chip_firing_examples(theta):
    assert chip_firing(ClosedSubgraph.whole(theta), 3).is_constant()
    f = cf_x(theta)
    assert f.value(Point(vertex="x")) == 0
    assert f.value(theta.point("e2", Fraction(1, 4))) == Fraction(-1, 4)
    assert f.value(Point(vertex="y")) == -HALF
    g = cf_x(theta, 2)
    assert g.value(Point(vertex="y")) == -1
    assert chip_firing(ClosedSubgraph.from_points(theta, [Point(vertex="x")]), INFINITE) == g
    with pytest.raises(ValueError):
        cf_x(theta, 0)


def test_can_fire_examples(theta):
    x = ClosedSubgraph.from_points(theta, [Point(vertex="x")])
    assert can_fire(ClosedSubgraph.whole(theta), parse_divisor(theta, "x"))
    assert can_fire(x, parse_divisor(theta, "3*x"))
    assert not can_fire(x, parse_divisor(theta, "2*x"))


def test_closed_subgraph_validation(theta):
    with pytest.raises(GraphError):
        ClosedSubgraph(theta, [], {"e1": [(0, 2)]})
    with pytest.raises(GraphError):
        ClosedSubgraph(theta)
    s = ClosedSubgraph(theta, [], {"e1": [(0, HALF)]})
    assert s.contains(Point(vertex="x"))
    assert s.boundary() == {Point(vertex="x"): 2, theta.point("e1", HALF): 1}


def test_canonical_divisor_examples(theta):
    assert canonical_divisor(theta) == parse_divisor(theta, "x + y")
    assert canonical_divisor(model("circle")) == Divisor()
    b4 = model("banana4")
    k = canonical_divisor(b4)
    assert k == parse_divisor(b4, "2*x + 2*y")
    for name in ("banana5", "dumbbell", "k4", "type2_g3"):
        m = model(name)
        assert canonical_divisor(m).degree == 2 * m.genus - 2


def test_decompose_examples(theta):
    c = RationalFunction.constant(theta, 4)
    dec = decompose_into_chip_firings(c)
    assert dec.terms == () and dec.constant == 4
    f = cf_x(theta)
    dec = decompose_into_chip_firings(f)
    assert dec.evaluate(theta) == f
    g = f + chip_firing(ClosedSubgraph.from_points(theta, [Point(vertex="y")]), Fraction(1, 4)) * 2
    assert decompose_into_chip_firings(g).evaluate(theta) == g


def test_decompose_round_trip_random():
    rng = random.Random(21)
    for i in range(100):
        m = model(("theta", "dumbbell", "k4", "type2_g3")[i % 4])
        f = random_chip_firing(m, rng, rng.randint(1, 3))
        assert decompose_into_chip_firings(f).evaluate(m) == f


def test_principal_divisors_have_degree_zero():
    rng = random.Random(22)
    for i in range(60):
        m = model(("theta", "banana4", "dumbbell")[i % 3])
        assert div(random_chip_firing(m, rng)).degree == 0


def test_chip_firing_slopes_and_range():
    rng = random.Random(23)
    for _ in range(40):
        m = model("dumbbell")
        pts = {random_point(m, rng) for _ in range(2)}
        length = Fraction(rng.randint(1, 12), 4)
        f = chip_firing(ClosedSubgraph.from_points(m, pts), length)
        for eid in m.edges:
            for _, _, s in f.pieces(eid):
                assert s in (-1, 0, 1)
        assert f.max_value() == 0
        assert f.min_value() >= -length


def test_max_closure_of_R_D():
    rng = random.Random(24)
    m = model("theta")
    for _ in range(100):
        f, g = random_chip_firing(m, rng, 2), random_chip_firing(m, rng, 2)
        # the least D with f, g in R(D)
        d = Divisor() - f.div().minimum_with(g.div())
        assert (d + f.div()).is_effective and (d + g.div()).is_effective
        assert (d + tropical_add(f, g).div()).is_effective


def test_function_json_round_trip():
    rng = random.Random(25)
    for name in ("theta", "dumbbell", "circle"):
        m = model(name)
        f = random_chip_firing(m, rng)
        assert RationalFunction.from_json(m, f.to_json()) == f


def test_function_rejects_bad_data(theta):
    with pytest.raises(GraphError, match="non-integer slope"):
        RationalFunction(theta, {"e1": [(0, 0), (1, HALF)], "e2": [(0, 0), (1, 0)], "e3": [(0, 0), (1, 0)]})
    with pytest.raises(GraphError, match="discontinuous"):
        RationalFunction(theta, {"e1": [(0, 0), (1, 1)], "e2": [(0, 0), (1, 0)], "e3": [(0, 0), (1, 0)]})
