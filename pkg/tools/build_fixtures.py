"""Regenerate the TMG-JSON fixtures shipped in src/tropgalois/fixtures.

Run from the repository root:  python3 tools/build_fixtures.py
"""

from __future__ import annotations

from pathlib import Path

from tropgalois.action import GroupElement, IsometricAction, quotient
from tropgalois.divisors import canonical_divisor
from tropgalois.graph import Model
from tropgalois.tmg import TMGDocument, emit, emit_map

OUT = Path(__file__).resolve().parents[1] / "src" / "tropgalois" / "fixtures"


def reverse_all(model: Model, swap: dict[str, str]) -> GroupElement:
    """The involution swapping vertices per ``swap`` and sending each edge to itself reversed."""
    verts = {v: swap.get(v, v) for v in model.vertices}
    return GroupElement(verts, {e: (e, True) for e in model.edges})


def banana(n: int, lengths=None) -> Model:
    lengths = lengths or [1] * n
    return Model(["x", "y"], [(f"e{i + 1}", "x", "y", lengths[i]) for i in range(n)])


def with_k(model: Model, actions=None, **divisors) -> TMGDocument:
    return TMGDocument(model, actions=actions or {}, divisors={"K": canonical_divisor(model), **divisors})


def build() -> dict[str, TMGDocument]:
    docs = {}
    theta = banana(3)
    docs["theta"] = with_k(theta, {"iota": {"iota": reverse_all(theta, {"x": "y", "y": "x"})}})
    b4 = banana(4)
    swap = GroupElement({"x": "x", "y": "y"}, {"e1": ("e2", False), "e2": ("e1", False), "e3": ("e4", False), "e4": ("e3", False)})
    docs["banana4"] = with_k(b4, {"iota": {"iota": reverse_all(b4, {"x": "y", "y": "x"})}, "swap": {"swap": swap}})
    b5 = banana(5)
    docs["banana5"] = with_k(b5, {"iota": {"iota": reverse_all(b5, {"x": "y", "y": "x"})}})
    t1 = banana(4, [1, 2, 3, 4])
    docs["type1_g3"] = with_k(t1, {"iota": {"iota": reverse_all(t1, {"x": "y", "y": "x"})}})
    # reconstruction: g-1 parallel x-y edges, two p-q edges, equal connectors x-p and y-q
    t2 = Model(
        ["p", "q", "x", "y"],
        [("a1", "x", "y", 1), ("a2", "x", "y", 2), ("b1", "p", "q", 1), ("b2", "p", "q", 3), ("c1", "x", "p", 2), ("c2", "y", "q", 2)],
    )
    t2_iota = GroupElement(
        {"x": "y", "y": "x", "p": "q", "q": "p"},
        {"a1": ("a1", True), "a2": ("a2", True), "b1": ("b1", True), "b2": ("b2", True), "c1": ("c2", False), "c2": ("c1", False)},
    )
    from tropgalois.divisors import parse_divisor

    docs["type2_g3"] = with_k(t2, {"iota": {"iota": t2_iota}}, D=parse_divisor(t2, "2*x + 2*y"))
    dumbbell = Model(["u", "v"], [("l1", "u", "u", 2), ("l2", "v", "v", 2), ("b", "u", "v", 1)])
    d_iota = GroupElement({"u": "u", "v": "v"}, {"l1": ("l1", True), "l2": ("l2", True), "b": ("b", False)})
    docs["dumbbell"] = with_k(dumbbell, {"iota": {"iota": d_iota}})
    k4 = Model(["a", "b", "c", "d"], [(f"{s}{t}", s, t, 1) for s, t in ["ab", "ac", "ad", "bc", "bd", "cd"]])
    docs["k4"] = with_k(k4)
    circle = Model(["p"], [("e", "p", "p", 1)])
    docs["circle"] = TMGDocument(circle, actions={"reflection": {"r": GroupElement({"p": "p"}, {"e": ("e", True)})}})
    tree = Model(["o", "t1", "t2", "t3"], [("s1", "o", "t1", 1), ("s2", "o", "t2", 2), ("s3", "o", "t3", 3)])
    docs["tree"] = TMGDocument(tree)
    return docs


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    docs = build()
    for name, doc in docs.items():
        (OUT / f"{name}.tmg.json").write_bytes(emit(doc))
    theta = docs["theta"]
    q = quotient(IsometricAction(theta.model, theta.actions["iota"]))
    (OUT / "pi.json").write_bytes(emit_map(q.projection, source=theta))
    print(f"wrote {len(docs) + 1} fixtures to {OUT}")


if __name__ == "__main__":
    main()
