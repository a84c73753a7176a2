import random
from fractions import Fraction

import pytest
from helpers import model, random_divisor, random_effective, random_point

from tropgalois.chipfiring import ClosedSubgraph, chip_firing
from tropgalois.divisors import Divisor, canonical_divisor, parse_divisor
from tropgalois.functions import RationalFunction
from tropgalois.graph import Point
from tropgalois.guard import ScaleGuard, ScaleGuardError
from tropgalois.linear_systems import (
    GeneratingSet,
    generators,
    has_smooth_cut,
    is_extremal,
    is_in_R,
    rank,
    reduce,
    riemann_roch_residual,
    span_membership,
)

X, Y = Point(vertex="x"), Point(vertex="y")


@pytest.fixture(scope="module")
def theta():
    return model("theta")


def cf(m, pts, length):
    return chip_firing(ClosedSubgraph.from_points(m, pts), length)


def test_is_in_R_examples(theta):
    f = cf(theta, [X], Fraction(1, 2))
    assert is_in_R(parse_divisor(theta, "x"), RationalFunction.constant(theta, 2))
    assert not is_in_R(parse_divisor(theta, "x + y"), f)
    assert is_in_R(parse_divisor(theta, "3*x"), f)


def test_reduce_examples(theta):
    red = reduce(parse_divisor(theta, "2*y"), X, theta)
    assert red.divisor == parse_divisor(theta, "2*y")
    assert red.witness.is_constant()
    red = reduce(parse_divisor(theta, "3*y"), X, theta)
    assert red.divisor[X] > 0
    assert red.divisor == parse_divisor(theta, "3*x")
    assert parse_divisor(theta, "3*y") + red.witness.div() == red.divisor


def test_reduce_witness_and_uniqueness():
    rng = random.Random(31)
    for name in ("theta", "dumbbell", "k4"):
        m = model(name)
        for _ in range(15):
            d = random_divisor(m, rng, rng.randint(0, 4))
            q = random_point(m, rng)
            red = reduce(d, q, m)
            assert d + red.witness.div() == red.divisor
            moved = d + cf(m, [random_point(m, rng)], Fraction(1, 4)).div()
            assert reduce(moved, q, m).divisor == red.divisor
            # q-reduced: nonnegative away from q
            assert all(c >= 0 for p, c in red.divisor.items() if p != q)


def test_rank_examples(theta):
    assert rank(parse_divisor(theta, "x - y - y"), theta) == -1
    assert rank(Divisor(), theta) == 0
    assert rank(canonical_divisor(theta), theta) == 1
    assert rank(canonical_divisor(theta), theta, candidates="lattice") == 1
    assert rank(canonical_divisor(model("banana4")), model("banana4")) == 2
    assert rank(parse_divisor(theta, "x"), theta) == 0
    assert rank(parse_divisor(theta, "e1@1/4 + e1@3/4"), theta) == 1
    assert rank(parse_divisor(theta, "e1@1/4 + e2@1/4"), theta) == 0


def test_rank_candidate_sets_agree():
    rng = random.Random(32)
    for name in ("theta", "dumbbell"):
        m = model(name)
        for _ in range(12):
            d = random_effective(m, rng, rng.randint(0, 3), 8)
            assert rank(d, m) == rank(d, m, candidates="lattice")


def test_riemann_roch_examples(theta):
    assert riemann_roch_residual(Divisor(), theta) == 0
    assert riemann_roch_residual(canonical_divisor(theta), theta) == 0
    b4 = model("banana4")
    assert riemann_roch_residual(parse_divisor(b4, "2*x"), b4) == 0


def test_span_membership_examples(theta):
    f1 = cf(theta, [X], Fraction(1, 2))
    f2 = cf(theta, [Y], Fraction(1, 4))
    gens = [f1, f2]
    res = span_membership(gens, f1)
    assert res.member and res.coefficients[0] == 0
    assert span_membership(gens, f1.shift(3).maximum_with(f2)).member
    fresh = cf(theta, [theta.point("e1", Fraction(1, 2))], Fraction(1, 2))
    res = span_membership(gens, fresh)
    assert not res.member
    best = f1.shift(res.coefficients[0]).maximum_with(f2.shift(res.coefficients[1]))
    assert fresh.value(res.witness) > best.value(res.witness)
    assert not span_membership([], f1).member


def test_generators_of_zero(theta):
    gens = generators(Divisor(), theta)
    assert len(gens) == 1 and gens[0] == RationalFunction.constant(theta, 0)


def test_generators_on_circle():
    circle = model("circle")
    p = Point(vertex="p")
    # a single chip cannot move on a circle: only constants
    assert [f.is_constant() for f in generators(Divisor.of(p), circle)] == [True]
    two = generators(Divisor([(p, 2)]), circle)
    assert len(two) == 2
    tent = next(f for f in two if not f.is_constant())
    assert tent.div() + Divisor([(p, 2)]) == Divisor([(circle.point("e", Fraction(1, 2)), 2)])


def test_generators_of_theta_canonical(theta):
    k = canonical_divisor(theta)
    gens = generators(k, theta)
    assert len(gens) == 4
    extremal = [f for f in gens if is_extremal(f, k)]
    assert len(extremal) == 3
    for f in extremal:
        (p,) = (k + f.div()).support
        assert (k + f.div()) == Divisor([(p, 2)]) and p.offset == Fraction(1, 2)


def test_generators_contract():
    """Each generator lies in R(D) with no smooth cut set on its support, and the set spans probe members."""
    rng = random.Random(33)
    cases = [("theta", "x + y"), ("theta", "2*x"), ("dumbbell", "2*u"), ("banana4", "2*x + 2*y"), ("circle", "p + e@1/2")]
    for name, text in cases:
        m = model(name)
        d = parse_divisor(m, text)
        gens = generators(d, m)
        assert isinstance(gens, GeneratingSet) and len(gens) >= 1
        for f in gens:
            assert is_in_R(d, f)
            assert not has_smooth_cut(m, (d + f.div()).support)
        for _ in range(6):
            red = reduce(d, random_point(m, rng, 8), m)
            assert span_membership(gens, red.witness).member, (name, text)


def test_is_extremal_examples(theta):
    zero = RationalFunction.constant(theta, 0)
    assert is_extremal(zero, Divisor())
    assert not is_extremal(zero, parse_divisor(theta, "3*x + 3*y"))


def test_scale_guard_on_degree(theta):
    with pytest.raises(ScaleGuardError):
        generators(parse_divisor(theta, "3*x + 3*y"), theta, ScaleGuard(max_degree=2))


def test_scale_guard_override(theta, monkeypatch):
    monkeypatch.setenv("TROPGALOIS_NO_SCALE_GUARD", "1")
    assert len(generators(parse_divisor(theta, "x + y"), theta, ScaleGuard(max_degree=1))) == 4


def test_generators_on_loops_match_split_loops():
    from tropgalois.graph import loopless_model

    for name, chips in (("circle", {"p": 3}), ("dumbbell", {"u": 2, "v": 1})):
        m = model(name)
        d = Divisor([(Point(vertex=v), c) for v, c in chips.items()])
        sub = loopless_model(m)
        split = generators(Divisor([(sub.to_child(p), c) for p, c in d.items()]), sub.child)
        direct = generators(d, m)
        as_parent = {Divisor([(sub.to_parent(p), c) for p, c in (split.divisor + f.div()).items()]) for f in split}
        assert {d + f.div() for f in direct} == as_parent, name
