"""TMG-JSON: the on-disk format for metric graphs, actions, divisors and maps.

A graph document looks like::

    {
      "format": "tmg",
      "version": 1,
      "vertices": ["x", "y"],
      "edges": [{"id": "e1", "ends": ["x", "y"], "length": "1"}, ...],
      "actions": {"iota": {"generators": {"iota": {"vertices": {...}, "edges": {"e1": ["e1", true]}}}}},
      "divisors": {"K": {"x": 1, "y": 1}},
      "functions": {"f": {"anchor": {...}, "edges": {...}}}
    }

Only ``vertices`` and ``edges`` are required.  Lengths are exact rational
strings.  :func:`emit` writes keys sorted with two-space indentation and
canonical rationals, so ``emit(parse(text))`` reproduces any file that was
itself produced by :func:`emit`.

A map document (``"format": "tmg-map"``) is self-contained: it embeds the
source graph, lists the points of the source at which the working model is
refined, embeds the target graph, and gives the vertex and edge maps on the
working model plus optional edge multiplicities.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from .action import GroupElement, IsometricAction, validate_action
from .divisors import Divisor
from .functions import RationalFunction
from .graph import Edge, GraphError, Model, Point, refine
from .morphisms import EdgeImage, MultiMorphism
from .rational import as_rational, format_rational

__all__ = [
    "TMGError",
    "TMGDocument",
    "MapDocument",
    "parse",
    "parse_text",
    "emit",
    "model_to_json",
    "parse_map",
    "parse_map_text",
    "map_to_json",
    "emit_map",
    "to_dot",
    "FORMAT_VERSION",
]

FORMAT_VERSION = 1

# names must survive divisor text such as "2*x - e1@1/2"
_NAME = re.compile(r"[^\s+*-]+")


class TMGError(ValueError):
    """A document failed to parse; ``pointer`` is an RFC 6901 JSON pointer."""

    def __init__(self, pointer: str, message: str):
        self.pointer = pointer
        self.message = message
        super().__init__(f"{pointer or '/'}: {message}")

    def to_json(self) -> dict:
        return {"error": self.message, "pointer": self.pointer}


def _ptr(*parts: Any) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in parts)


def _expect(value: Any, kind: type, where: str, what: str):
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise TMGError(where, f"expected {what}")
    return value


def _rational(value: Any, where: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise TMGError(where, "expected an exact rational (string \"p/q\" or integer)")
    try:
        return as_rational(value)
    except (ValueError, TypeError) as exc:
        raise TMGError(where, str(exc)) from None


@dataclass
class TMGDocument:
    model: Model
    actions: dict[str, dict[str, GroupElement]] = field(default_factory=dict)
    divisors: dict[str, Divisor] = field(default_factory=dict)
    functions: dict[str, RationalFunction] = field(default_factory=dict)
    version: int = FORMAT_VERSION

    def action(self, name: str) -> IsometricAction:
        if name not in self.actions:
            known = ", ".join(sorted(self.actions)) or "none"
            raise TMGError(_ptr("actions", name), f"no action named {name!r} (known: {known})")
        return IsometricAction(self.model, self.actions[name])

    def divisor(self, text: str) -> Divisor:
        """A named divisor block, or else divisor text like ``"x + y"``."""
        if text in self.divisors:
            return self.divisors[text]
        from .divisors import parse_divisor

        try:
            return parse_divisor(self.model, text)
        except (ValueError, GraphError) as exc:
            raise TMGError("", f"bad divisor {text!r}: {exc}") from None


# -- graphs ----------------------------------------------------------------


def _parse_model(data: Mapping, base: tuple = ()) -> Model:
    verts = _expect(data.get("vertices"), list, _ptr(*base, "vertices"), "a list of vertex names")
    names = []
    for i, v in enumerate(verts):
        names.append(_expect(v, str, _ptr(*base, "vertices", i), "a vertex name string"))
        if not _NAME.fullmatch(v):
            raise TMGError(_ptr(*base, "vertices", i), f"vertex name {v!r} must be nonempty without '+', '-', '*' or spaces")
    if len(set(names)) != len(names):
        raise TMGError(_ptr(*base, "vertices"), "duplicate vertex names")
    raw_edges = _expect(data.get("edges"), list, _ptr(*base, "edges"), "a list of edges")
    edges = []
    seen: set[str] = set()
    for i, block in enumerate(raw_edges):
        where = (*base, "edges", i)
        _expect(block, dict, _ptr(*where), "an edge object")
        eid = _expect(block.get("id"), str, _ptr(*where, "id"), "an edge id string")
        if not _NAME.fullmatch(eid):
            raise TMGError(_ptr(*where, "id"), f"edge id {eid!r} must be nonempty without '+', '-', '*' or spaces")
        if eid in seen or eid in names:
            raise TMGError(_ptr(*where, "id"), f"edge id {eid!r} is already used")
        seen.add(eid)
        ends = _expect(block.get("ends"), list, _ptr(*where, "ends"), "a [tail, head] pair")
        if len(ends) != 2:
            raise TMGError(_ptr(*where, "ends"), "expected a [tail, head] pair")
        for j, end in enumerate(ends):
            if end not in names:
                raise TMGError(_ptr(*where, "ends", j), f"unknown vertex {end!r}")
        length = _rational(block.get("length"), _ptr(*where, "length"))
        if length <= 0:
            raise TMGError(_ptr(*where, "length"), f"edge length must be positive, got {format_rational(length)}")
        edges.append(Edge(eid, ends[0], ends[1], length))
    try:
        return Model(names, edges)
    except GraphError as exc:
        raise TMGError(_ptr(*base) if base else "", str(exc)) from None


def model_to_json(model: Model) -> dict:
    return {
        "vertices": list(model.vertices),
        "edges": [
            {"id": e.id, "ends": [e.tail, e.head], "length": format_rational(e.length)} for e in model.edges.values()
        ],
    }


def _parse_element(model: Model, data: Any, where: tuple) -> GroupElement:
    _expect(data, dict, _ptr(*where), "a group element object")
    verts = _expect(data.get("vertices"), dict, _ptr(*where, "vertices"), "a vertex permutation object")
    edges = _expect(data.get("edges"), dict, _ptr(*where, "edges"), "an edge permutation object")
    for v, w in verts.items():
        if v not in model.vertices or w not in model.vertices:
            raise TMGError(_ptr(*where, "vertices", v), f"unknown vertex in {v!r} -> {w!r}")
    emap = {}
    for e, img in edges.items():
        if e not in model.edges:
            raise TMGError(_ptr(*where, "edges", e), f"unknown edge {e!r}")
        if not (isinstance(img, list) and len(img) == 2 and img[0] in model.edges and isinstance(img[1], bool)):
            raise TMGError(_ptr(*where, "edges", e), "expected [target edge, reversed flag]")
        emap[e] = (img[0], img[1])
    try:
        return GroupElement(verts, emap)
    except (KeyError, ValueError) as exc:
        raise TMGError(_ptr(*where), str(exc)) from None


def _parse_divisor(model: Model, data: Any, where: tuple) -> Divisor:
    _expect(data, dict, _ptr(*where), "an object from points to integer coefficients")
    coeffs = []
    for key, c in data.items():
        if isinstance(c, bool) or not isinstance(c, int):
            raise TMGError(_ptr(*where, key), "coefficient must be an integer")
        try:
            coeffs.append((model.parse_point(key), c))
        except (GraphError, ValueError) as exc:
            raise TMGError(_ptr(*where, key), str(exc)) from None
    return Divisor(coeffs)


def divisor_to_json(divisor: Divisor) -> dict:
    return {str(p): c for p, c in sorted(divisor.items())}


def parse_text(text: str | bytes) -> TMGDocument:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TMGError("", f"not UTF-8: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TMGError("", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return from_json(data)


def from_json(data: Any) -> TMGDocument:
    _expect(data, dict, "", "a JSON object")
    fmt = data.get("format", "tmg")
    if fmt != "tmg":
        raise TMGError(_ptr("format"), f"expected format 'tmg', got {fmt!r}")
    version = data.get("version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise TMGError(_ptr("version"), f"unsupported version {version!r}")
    known = {"format", "version", "vertices", "edges", "actions", "divisors", "functions"}
    for key in data:
        if key not in known:
            raise TMGError(_ptr(key), "unknown top-level key")
    model = _parse_model(data)
    doc = TMGDocument(model, version=version)
    for name, block in _expect(data.get("actions", {}), dict, _ptr("actions"), "an object").items():
        _expect(block, dict, _ptr("actions", name), "an action object")
        gens = _expect(block.get("generators"), dict, _ptr("actions", name, "generators"), "an object of named generators")
        parsed = {g: _parse_element(model, el, ("actions", name, "generators", g)) for g, el in gens.items()}
        report = validate_action(model, parsed)
        if not report.ok:
            raise TMGError(_ptr("actions", name), "; ".join(report.violations))
        doc.actions[name] = parsed
    for name, block in _expect(data.get("divisors", {}), dict, _ptr("divisors"), "an object").items():
        doc.divisors[name] = _parse_divisor(model, block, ("divisors", name))
    for name, block in _expect(data.get("functions", {}), dict, _ptr("functions"), "an object").items():
        try:
            doc.functions[name] = RationalFunction.from_json(model, block)
        except (KeyError, TypeError, ValueError) as exc:
            raise TMGError(_ptr("functions", name), f"bad function: {exc}") from None
    return doc


def parse(path: str | Path) -> TMGDocument:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise TMGError("", f"cannot read {path}: {exc.strerror}") from None
    return parse_text(raw)


def to_json(doc: TMGDocument) -> dict:
    out: dict[str, Any] = {"format": "tmg", "version": doc.version, **model_to_json(doc.model)}
    if doc.actions:
        out["actions"] = {
            name: {"generators": {g: el.to_json() for g, el in gens.items()}} for name, gens in doc.actions.items()
        }
    if doc.divisors:
        out["divisors"] = {name: divisor_to_json(d) for name, d in doc.divisors.items()}
    if doc.functions:
        out["functions"] = {name: f.to_json() for name, f in doc.functions.items()}
    return out


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def emit(doc: TMGDocument) -> bytes:
    return dumps(to_json(doc)).encode("utf-8")


# -- maps ------------------------------------------------------------------


@dataclass
class MapDocument:
    morphism: MultiMorphism
    source: TMGDocument
    target: TMGDocument
    refinement: tuple[Point, ...]


def map_from_json(data: Any) -> MapDocument:
    _expect(data, dict, "", "a JSON object")
    if data.get("format") != "tmg-map":
        raise TMGError(_ptr("format"), "expected format 'tmg-map'")
    if data.get("version", FORMAT_VERSION) != FORMAT_VERSION:
        raise TMGError(_ptr("version"), f"unsupported version {data.get('version')!r}")
    source = _nested(data, "source")
    target = _nested(data, "target")
    points = []
    for i, text in enumerate(_expect(data.get("refine", []), list, _ptr("refine"), "a list of points")):
        _expect(text, str, _ptr("refine", i), "a point string")
        try:
            points.append(source.model.parse_point(text))
        except (GraphError, ValueError) as exc:
            raise TMGError(_ptr("refine", i), str(exc)) from None
    sub = refine(source.model, points)
    work = sub.child
    vmap = _expect(data.get("vertex_map"), dict, _ptr("vertex_map"), "an object")
    raw_emap = _expect(data.get("edge_map"), dict, _ptr("edge_map"), "an object")
    emap = {}
    for eid, block in raw_emap.items():
        where = ("edge_map", eid)
        if eid not in work.edges:
            raise TMGError(_ptr(*where), f"unknown working edge {eid!r}")
        _expect(block, dict, _ptr(*where), "an edge image object")
        t = block.get("target")
        if t is not None and t not in target.model.edges:
            raise TMGError(_ptr(*where, "target"), f"unknown target edge {t!r}")
        rev = _expect(block.get("reverse", False), bool, _ptr(*where, "reverse"), "a boolean")
        dil = block.get("dilation")
        if isinstance(dil, bool) or not isinstance(dil, int) or dil < 0:
            raise TMGError(_ptr(*where, "dilation"), "dilation must be a nonnegative integer")
        emap[eid] = EdgeImage(t, rev, dil)
    mults = []
    for key in ("source_multiplicity", "target_multiplicity"):
        block = _expect(data.get(key, {}), dict, _ptr(key), "an object")
        for eid, m in block.items():
            if isinstance(m, bool) or not isinstance(m, int):
                raise TMGError(_ptr(key, eid), "multiplicity must be an integer")
        mults.append(dict(block) or None)
    try:
        phi = MultiMorphism(work, target.model, vmap, emap, mults[0], mults[1], source_sub=sub)
    except (GraphError, KeyError, ValueError) as exc:
        raise TMGError("", f"inconsistent map: {exc}") from None
    return MapDocument(phi, source, target, tuple(sorted(points)))


def _nested(data: Mapping, key: str) -> TMGDocument:
    block = _expect(data.get(key), dict, _ptr(key), "an embedded tmg document")
    try:
        return from_json(block)
    except TMGError as exc:
        raise TMGError(_ptr(key) + exc.pointer, exc.message) from None


def parse_map_text(text: str | bytes) -> MapDocument:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TMGError("", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return map_from_json(data)


def parse_map(path: str | Path) -> MapDocument:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise TMGError("", f"cannot read {path}: {exc.strerror}") from None
    return parse_map_text(raw)


def map_to_json(phi: MultiMorphism, source: TMGDocument | None = None, target: TMGDocument | None = None) -> dict:
    """Serialize ``phi``; its working source must come from one refine of its base."""
    source = source or TMGDocument(phi.base)
    target = target or TMGDocument(phi.target)
    body = phi.to_json()
    if all(m == 1 for m in body["source_multiplicity"].values()):
        del body["source_multiplicity"]
    if all(m == 1 for m in body["target_multiplicity"].values()):
        del body["target_multiplicity"]
    return {
        "format": "tmg-map",
        "version": FORMAT_VERSION,
        "source": to_json(source),
        "refine": [str(p) for p in sorted(phi.source_sub.new_vertices.values())],
        "target": to_json(target),
        **body,
    }


def emit_map(phi: MultiMorphism, source: TMGDocument | None = None, target: TMGDocument | None = None) -> bytes:
    return dumps(map_to_json(phi, source, target)).encode("utf-8")


# -- DOT -------------------------------------------------------------------


def _q(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(model: Model, name: str = "G", divisor: Divisor | None = None) -> str:
    """Undirected DOT; edges labelled ``id: length``, vertices with a nonzero divisor coefficient annotated."""
    lines = [f"graph {_q(name)} {{"]
    for v in model.vertices:
        c = divisor[Point(vertex=v)] if divisor is not None else 0
        label = f"{v} ({c:+d})" if c else v
        lines.append(f"  {_q(v)} [label={_q(label)}];")
    for e in model.edges.values():
        lines.append(f"  {_q(e.tail)} -- {_q(e.head)} [label={_q(f'{e.id}: {format_rational(e.length)}')}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
