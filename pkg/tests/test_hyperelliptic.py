import pytest
from helpers import model
from oracles import LatticeGraph

from tropgalois.graph import GraphError, Model, Point
from tropgalois.hyperelliptic import (
    canonical_generators,
    canonical_map_analysis,
    hyperelliptic_involutions,
    iota_invariant_canonical_covering,
    is_hyperelliptic,
    isometric_automorphisms,
)
from tropgalois.guard import ScaleGuard, ScaleGuardError

HYPERELLIPTIC = ["theta", "banana4", "banana5", "dumbbell", "type1_g3", "type2_g3"]


@pytest.mark.parametrize(
    "name, order",
    [("theta", 12), ("banana4", 48), ("banana5", 240), ("dumbbell", 8), ("k4", 24), ("circle", 2), ("tree", 1), ("type1_g3", 2), ("type2_g3", 2)],
)
def test_automorphism_group_orders(name, order):
    group = isometric_automorphisms(model(name))
    assert group.order == order
    assert group.elements[0].is_identity


def test_automorphisms_preserve_lengths():
    m = model("type2_g3")
    for g in isometric_automorphisms(m).elements:
        for eid, (target, _) in g.edges.items():
            assert m.edge(eid).length == m.edge(target).length


def test_automorphism_scale_guard():
    with pytest.raises(ScaleGuardError):
        isometric_automorphisms(model("banana5"), ScaleGuard(max_group_order=100))


@pytest.mark.parametrize("name", HYPERELLIPTIC)
def test_certificates_are_sound(name):
    m = model(name)
    cert = is_hyperelliptic(m)
    assert cert is not None
    iota = cert.involution
    assert not iota.is_identity and iota.compose(iota).is_identity
    assert cert.quotient.genus == 0
    assert cert.witness.degree == 2 and cert.witness_rank == 1
    assert cert.involutions_found == 1


@pytest.mark.parametrize("name", ["theta", "dumbbell"])
def test_witness_rank_matches_oracle(name):
    m = model(name)
    cert = is_hyperelliptic(m)
    lat = LatticeGraph.subdivide(list(m.vertices), [(e.id, e.tail, e.head, int(2 * e.length)) for e in m.edges.values()])
    assert lat.rank(lat.config({str(p): c for p, c in cert.witness.items()})) == 1


def test_theta_certificate_shape():
    cert = is_hyperelliptic(model("theta"))
    assert cert.involution.vertices == {"x": "y", "y": "x"}
    assert all(rev for _, rev in cert.involution.edges.values())
    assert sorted(cert.quotient.valence(v) for v in cert.quotient.vertices) == [1, 1, 1, 3]
    assert str(cert.witness) == "x + y"


def test_k4_is_not_hyperelliptic():
    k4 = model("k4")
    assert is_hyperelliptic(k4) is None
    assert hyperelliptic_involutions(k4) == []


def test_hypotheses_are_checked():
    with pytest.raises(GraphError, match="genus"):
        is_hyperelliptic(model("circle"))
    lollipop = Model(["a", "b"], [("l", "a", "a", 1), ("s", "a", "b", 1), ("m", "a", "a", 1)])
    with pytest.raises(GraphError, match="valence-1"):
        is_hyperelliptic(lollipop)
    with pytest.raises(GraphError, match="valence-1"):
        canonical_map_analysis(model("tree"))


def test_canonical_analysis_low_genus():
    assert canonical_map_analysis(Model(["p"], []))["verdict"] == "not induced"
    report = canonical_map_analysis(model("circle"))
    assert report["verdict"] == "constant map"
    theta = canonical_map_analysis(model("theta"))
    assert theta["galois"] and theta["degree"] == 2 and theta["image_genus"] == 0


def test_canonical_analysis_type1():
    report = canonical_map_analysis(model("type1_g3"))
    assert not report["injective"]
    assert report["identified_points"] == [["x", "y"]]
    assert report["non_harmonic_at"] == ["x", "y"]
    assert report["image_genus"] == 4


def test_canonical_analysis_type2_reconstruction():
    report = canonical_map_analysis(model("type2_g3"))
    assert not report["injective"]
    assert report["identified_points"] == [["p", "q"], ["x", "y"]]
    assert report["non_harmonic_at"] == ["p", "q", "x", "y"]
    assert report["image_genus"] == 5


def test_k4_canonical_is_an_embedding():
    report = canonical_map_analysis(model("k4"))
    assert report["injective"] and report["harmonic"]
    assert report["image_genus"] == 3


def test_canonical_generators_are_canonical_members():
    m = model("banana4")
    gens = canonical_generators(m)
    assert len(gens) > 0
    for f in gens:
        assert (gens.divisor + f.div()).is_effective


def test_dumbbell_invariant_covering_shape():
    cov = iota_invariant_canonical_covering(model("dumbbell"))
    image = cov.covering.image.model
    assert image.genus == 0
    lengths = sorted(e.length for e in image.edges.values())
    assert lengths == [1, 1, 1]
    assert cov.fiber_sizes == (1, 2)


def test_banana_invariant_covering_shape():
    cov = iota_invariant_canonical_covering(model("banana4"))
    image = cov.covering.image.model
    assert len(image.edges) == 4
    assert sorted(image.valence(v) for v in image.vertices) == [1, 1, 1, 1, 4]
    assert cov.covering.verdict.degree == 2


def test_invariant_covering_needs_hyperelliptic():
    with pytest.raises(ValueError):
        iota_invariant_canonical_covering(model("k4"))


def test_certificate_json():
    data = is_hyperelliptic(model("theta")).to_json()
    assert data["hyperelliptic"] and data["witness_rank"] == 1
    assert data["quotient"]["vertices"]
    assert data["witness"] == str(Point(vertex="x")) + " + y"
