"""Command-line front end: ``tropgalois <subcommand> [options] FILE``.

Exit codes: 0 success, 1 property refuted, 2 input error, 3 scale guard.
Every report is exact; rationals print as ``p/q`` strings.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from typing import Callable

from .action import ActionError, invariant_generators, quotient
from .divisors import canonical_divisor
from .graph import GraphError, Point, canonical_model
from .guard import DEFAULT_GUARD, OVERRIDE_ENV, ScaleGuard, ScaleGuardError
from .hyperelliptic import canonical_map_analysis, is_hyperelliptic
from .linear_systems import generators, is_extremal, rank, reduce, riemann_roch_residual
from .morphisms import verify_galois
from .projective import is_K_injective, k_ample_witness
from .rational import format_rational
from .tmg import TMGDocument, TMGError, map_to_json, model_to_json, parse, parse_map, to_dot

OK, REFUTED, INPUT_ERROR, SCALE_GUARD = 0, 1, 2, 3


class Outcome:
    def __init__(self, report: dict, code: int = OK, text: str | None = None):
        self.report = report
        self.code = code
        self.text = text


def _guard(args) -> ScaleGuard:
    g = DEFAULT_GUARD
    for flag in ("max_edges", "max_group_order", "max_degree"):
        value = getattr(args, flag, None)
        if value is not None:
            g = replace(g, **{flag: value})
    return g


def _funcs_json(funcs) -> list[dict]:
    return [f.to_json() for f in funcs]


# -- subcommands -----------------------------------------------------------


def cmd_info(doc: TMGDocument, args) -> Outcome:
    m = doc.model
    canon = canonical_model(m)
    return Outcome(
        {
            "vertices": len(m.vertices),
            "edges": len(m.edges),
            "genus": m.genus,
            "total_length": format_rational(sum(e.length for e in m.edges.values())),
            "canonical_model": {"vertices": len(canon.vertices), "edges": len(canon.edges)},
            "canonical_divisor": str(canonical_divisor(m)),
            "action_orders": {name: doc.action(name).order for name in sorted(doc.actions)},
            "divisors": {name: str(d) for name, d in sorted(doc.divisors.items())},
        }
    )


def cmd_rank(doc: TMGDocument, args) -> Outcome:
    d = doc.divisor(args.divisor)
    return Outcome(
        {
            "divisor": str(d),
            "degree": d.degree,
            "genus": doc.model.genus,
            "rank": rank(d, doc.model),
            "riemann_roch_residual": riemann_roch_residual(d, doc.model),
        }
    )


def cmd_reduce(doc: TMGDocument, args) -> Outcome:
    d = doc.divisor(args.divisor)
    base = doc.model.parse_point(args.base) if args.base else Point(vertex=doc.model.vertices[0])
    red = reduce(d, base, doc.model)
    return Outcome({"divisor": str(d), "base": str(base), "reduced": str(red.divisor), "witness": red.witness.to_json()})


def cmd_generators(doc: TMGDocument, args) -> Outcome:
    d = doc.divisor(args.divisor)
    g = _guard(args)
    gens = generators(d, doc.model, g)
    flags = [is_extremal(f, d, None, g) for f in gens]
    return Outcome(
        {
            "divisor": str(d),
            "count": len(gens),
            "extremal": sum(flags),
            "functions": [{"extremal": x, **f.to_json()} for f, x in zip(gens, flags)],
        }
    )


def cmd_invariant_generators(doc: TMGDocument, args) -> Outcome:
    d = doc.divisor(args.divisor)
    action = doc.action(args.action)
    gens = invariant_generators(d, action, _guard(args))
    return Outcome({"divisor": str(d), "action": args.action, "group_order": action.order, "count": len(gens), "functions": _funcs_json(gens)})


def cmd_quotient(doc: TMGDocument, args) -> Outcome:
    action = doc.action(args.action)
    q = quotient(action)
    return Outcome(
        {
            "action": args.action,
            "group_order": action.order,
            "quotient": {"format": "tmg", "version": 1, **model_to_json(q.quotient)},
            "genus": q.quotient.genus,
            "stabilizers": dict(sorted(q.stabilizers.items())),
            "projection": map_to_json(q.projection, source=doc),
        }
    )


def cmd_map(doc: TMGDocument, args) -> Outcome:
    d = doc.divisor(args.divisor)
    g = _guard(args)
    if args.action:
        action = doc.action(args.action)
        funcs = invariant_generators(d, action, g)
    else:
        action = None
        funcs = generators(d, doc.model, g)
    rep = is_K_injective(funcs, action, d)
    img = rep.image
    return Outcome(
        {
            "divisor": str(d),
            "action": args.action,
            "functions": len(funcs),
            "injective": rep.injective,
            "witness": [str(p) for p in rep.witness] if rep.witness else None,
            "image": img.to_json(),
            "harmonic": img.morphism.is_harmonic(),
            "morphism": img.morphism.to_json(),
        }
    )


def cmd_galois_check(doc: TMGDocument, args) -> Outcome:
    if not args.map:
        raise TMGError("", "galois-check needs --map")
    mdoc = parse_map(args.map)
    if not mdoc.source.model.same_as(doc.model):
        raise TMGError("/source", "map source does not match the graph file")
    verdict = verify_galois(mdoc.morphism, doc.action(args.action))
    return Outcome({"action": args.action, **verdict.to_json()}, OK if verdict.ok else REFUTED)


def cmd_hyperelliptic(doc: TMGDocument, args) -> Outcome:
    cert = is_hyperelliptic(doc.model, _guard(args))
    if cert is None:
        return Outcome({"hyperelliptic": False, "genus": canonical_model(doc.model).genus}, REFUTED)
    return Outcome(cert.to_json())


def cmd_canonical(doc: TMGDocument, args) -> Outcome:
    report = canonical_map_analysis(doc.model, _guard(args))
    refuted = report["genus"] >= 3 and not report["injective"]
    if refuted and report.get("witness"):
        a, b = report["witness"]
        report["message"] = f"phi({a}) = phi({b})"
    return Outcome(report, REFUTED if refuted else OK)


def cmd_ample_witness(doc: TMGDocument, args) -> Outcome:
    d = doc.divisor(args.divisor)
    action = doc.action(args.action) if args.action else None
    if action is None:
        from .action import IsometricAction

        action = IsometricAction.trivial(doc.model)
    try:
        w = k_ample_witness(d, action, args.max_k, _guard(args))
    except ArithmeticError as exc:
        return Outcome({"divisor": str(d), "k": None, "max_k": args.max_k, "reason": str(exc)}, REFUTED)
    return Outcome({"divisor": str(d), "k": w.k, "functions": len(w.functions), "image": w.report.image.to_json()})


def cmd_export_dot(doc: TMGDocument, args) -> Outcome:
    d = doc.divisor(args.divisor) if args.divisor else None
    dot = to_dot(doc.model, args.name, d)
    return Outcome({"dot": dot}, text=dot)


COMMANDS: dict[str, tuple[Callable, tuple[str, ...], str]] = {
    "info": (cmd_info, (), "summarize a graph file"),
    "rank": (cmd_rank, ("divisor",), "Baker-Norine rank of a divisor"),
    "reduce": (cmd_reduce, ("divisor", "base"), "q-reduced representative with its witness function"),
    "generators": (cmd_generators, ("divisor", "guard"), "finite generating set of R(D)"),
    "invariant-generators": (cmd_invariant_generators, ("divisor", "action", "guard"), "generating set of R(D)^K"),
    "quotient": (cmd_quotient, ("action",), "quotient graph and projection"),
    "map": (cmd_map, ("divisor", "optaction", "guard"), "image of the map induced by R(D) or R(D)^K"),
    "galois-check": (cmd_galois_check, ("action", "map"), "verify a map file is a K-Galois covering"),
    "hyperelliptic": (cmd_hyperelliptic, ("guard",), "search for a hyperelliptic involution"),
    "canonical": (cmd_canonical, ("guard",), "analyze the canonical map"),
    "ample-witness": (cmd_ample_witness, ("divisor", "optaction", "guard", "maxk"), "least k with k*D K-very ample"),
    "export-dot": (cmd_export_dot, ("optdivisor", "name"), "Graphviz DOT export"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tropgalois",
        description="Exact divisor theory and Galois coverings on metric graphs.",
        epilog=f"Exit codes: 0 ok, 1 refuted, 2 input error, 3 scale guard. Set {OVERRIDE_ENV}=1 to disable scale guards.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, opts, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("file", help="TMG-JSON graph file")
        p.add_argument("--format", choices=("json", "text"), default="json")
        if "divisor" in opts:
            p.add_argument("--divisor", "-d", required=True, help='divisor text such as "x + y", or a divisor name from the file')
        if "optdivisor" in opts:
            p.add_argument("--divisor", "-d", help="annotate vertices with this divisor")
        if "base" in opts:
            p.add_argument("--base", help="base point (default: least vertex)")
        if "action" in opts:
            p.add_argument("--action", "-a", required=True, help="action name from the file")
        if "optaction" in opts:
            p.add_argument("--action", "-a", help="action name from the file")
        if "map" in opts:
            p.add_argument("--map", "-m", help="TMG map file")
        if "maxk" in opts:
            p.add_argument("--max-k", type=int, default=8)
        if "name" in opts:
            p.add_argument("--name", default="G")
        if "guard" in opts:
            p.add_argument("--max-edges", type=int)
            p.add_argument("--max-group-order", type=int)
            p.add_argument("--max-degree", type=int)
    return parser


def _text(value, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    if isinstance(value, dict):
        for k, v in value.items():
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.extend(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
    elif isinstance(value, list):
        for v in value:
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}-")
                lines.extend(_text(v, indent + 1))
            else:
                lines.append(f"{pad}- {_scalar(v)}")
    else:
        lines.append(pad + _scalar(value))
    return lines


def _scalar(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, (dict, list)):
        return json.dumps(v)
    return str(v)


def render(outcome: Outcome, fmt: str) -> str:
    if fmt == "text":
        return outcome.text if outcome.text is not None else "\n".join(_text(outcome.report)) + "\n"
    return json.dumps(outcome.report, indent=2, sort_keys=True, default=_default) + "\n"


def _default(obj):
    from fractions import Fraction

    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def run_command(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return OK if exc.code == 0 else INPUT_ERROR
    fmt = args.format
    try:
        doc = parse(args.file)
        outcome = COMMANDS[args.command][0](doc, args)
    except ScaleGuardError as exc:
        _fail(err, fmt, "scale_guard", str(exc))
        return SCALE_GUARD
    except TMGError as exc:
        _fail(err, fmt, "input", exc.message, exc.pointer)
        return INPUT_ERROR
    except (GraphError, ActionError, ValueError) as exc:
        _fail(err, fmt, "input", str(exc))
        return INPUT_ERROR
    out.write(render(outcome, fmt))
    return outcome.code


def _fail(err, fmt: str, kind: str, message: str, pointer: str | None = None) -> None:
    if fmt == "json":
        body = {"error": kind, "message": message}
        if pointer is not None:
            body["pointer"] = pointer
        err.write(json.dumps(body, sort_keys=True) + "\n")
    else:
        where = f" at {pointer or '/'}" if pointer is not None else ""
        err.write(f"error ({kind}){where}: {message}\n")


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
