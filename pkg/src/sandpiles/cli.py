"""Command-line interface.

Every result document embeds the manifest (command, parameters, seed,
package version) that produced it, so runs can be reproduced exactly.
Exact values are printed as fraction strings alongside decimals.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .bijection import sandpile_to_tree, tree_to_sandpile
from .currents import prob_edges_absent, prob_edges_present, spanning_tree_count, transfer_current
from .dynamics import dhar_recurrence_test, sample_stationary, stabilize, two_phase_burn
from .errors import FileFormatError
from .graphs import GraphError
from .io import (dumps_sandpile, dumps_tree, loads_graph, loads_sandpile,
                 loads_tree, validate_files)
from .lattice import (decay_experiment, height_prob_series, potential_kernel,
                      shared_kernel, zero_height_probability)
from .minimal import edge_set_E, is_generalized_minimal, minimal_probability
from .oracles import (brute_force_marginal, enumerate_recurrent,
                      enumerate_spanning_trees, enumerate_stable, exact_stationary)


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _vertex(tok: str):
    tok = tok.strip()
    if "," in tok and not tok.startswith("("):
        x, y = tok.split(",")
        return (int(x), int(y))
    return tok


def _vertex_list(arg: str):
    return [_vertex(t) for t in arg.split(";")] if ";" in arg \
        else [_vertex(t) for t in arg.split("/")] if "/" in arg \
        else [_vertex(arg)]


def _scalar(x):
    if isinstance(x, Fraction):
        return {"fraction": f"{x.numerator}/{x.denominator}", "decimal": float(x)}
    return {"decimal": float(x)}


def _emit(args, result: dict) -> None:
    doc = {
        "manifest": {
            "command": args._command_line,
            "version": __version__,
            "seed": getattr(args, "seed", None),
        },
        "result": result,
    }
    text = json.dumps(doc, indent=2, default=str)
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _heights_arg(g, arg: str, w):
    vals = [int(t) for t in arg.split(",")]
    if len(vals) != len(w):
        raise GraphError(f"{len(w)} heights expected, got {len(vals)}")
    return dict(zip(w, vals))


def cmd_oracle(args):
    g = loads_graph(_read(args.graph))
    if args.what == "trees":
        trees = enumerate_spanning_trees(g)
        _emit(args, {"count": len(trees),
                     "trees": [sorted(t) for t in trees]})
    elif args.what == "stable":
        _emit(args, {"count": len(enumerate_stable(g))})
    elif args.what == "recurrent":
        rec = enumerate_recurrent(g)
        _emit(args, {"count": len(rec)})
    elif args.what == "stationary":
        states, pi = exact_stationary(g)
        _emit(args, {"states": len(states),
                     "probabilities": [_scalar(p) for p in pi]})
    else:
        raise GraphError(f"unknown oracle {args.what!r}")


def cmd_marginal(args):
    g = loads_graph(_read(args.graph))
    w = _vertex_list(args.w)
    xi = _heights_arg(g, args.xi, w)
    p = brute_force_marginal(g, w, xi)
    _emit(args, {"w": [str(v) for v in w], "probability": _scalar(p)})


def cmd_stabilize(args):
    g = loads_graph(_read(args.graph))
    h = loads_sandpile(_read(args.sandpile), g)
    out, report = stabilize(g, h)
    _emit(args, {
        "stable": json.loads(dumps_sandpile(out)),
        "topplings": report.total_topplings(),
        "lost_to_sink": report.lost_to_sink,
    })


def cmd_burn_test(args):
    g = loads_graph(_read(args.graph))
    h = loads_sandpile(_read(args.sandpile), g)
    protected = _vertex_list(args.q) if args.q else []
    record = two_phase_burn(g, h, protected)
    recurrent = dhar_recurrence_test(g, h)
    _emit(args, {
        "recurrent": recurrent,
        "rounds_phase1": [sorted(map(str, r)) for r in record.rounds1],
        "rounds_phase2": [sorted(map(str, r)) for r in record.rounds2],
        "unburnt_after_phase1": sorted(map(str, record.unburnt_mid)),
    })


def cmd_sample(args):
    g = loads_graph(_read(args.graph))
    states = list(sample_stationary(g, seed=args.seed, burn_in=args.burn_in,
                                    thin=args.thin, count=args.count))
    _emit(args, {"count": len(states),
                 "states": [json.loads(dumps_sandpile(s))["heights"]
                            for s in states]})


def cmd_bijection(args):
    g = loads_graph(_read(args.graph))
    protected = _vertex_list(args.q) if args.q else []
    if args.to == "tree":
        h = loads_sandpile(_read(args.input), g)
        tree = sandpile_to_tree(g, h, protected)
        text = dumps_tree(tree, graph_ref=args.graph)
    else:
        tree = loads_tree(_read(args.input), g)
        h = tree_to_sandpile(g, tree, protected)
        text = dumps_sandpile(h, graph_ref=args.graph)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_transfer_current(args):
    g = loads_graph(_read(args.graph))
    y = transfer_current(g, backend=args.backend)
    rows = [[_scalar(y.entry(i, j)) for j in range(len(y))] for i in range(len(y))]
    _emit(args, {
        "edges": [{"id": oe.id, "tail": str(oe.tail), "head": str(oe.head)}
                  for oe in y.edges],
        "matrix": rows,
        "spanning_trees": spanning_tree_count(g),
    })


def cmd_minimal_prob(args):
    g = loads_graph(_read(args.graph))
    w = _vertex_list(args.w)
    xi = _heights_arg(g, args.xi, w)
    witness, _ = is_generalized_minimal(g, xi, w)
    result = {"verdict": witness.verdict}
    if witness.failed_condition:
        result["failed_condition"] = witness.failed_condition
    if witness.is_minimal:
        ids = sorted(edge_set_E(g, xi, w))
        p = minimal_probability(g, xi, w, backend=args.backend)
        result["edge_set"] = ids
        result["probability"] = _scalar(p)
        if args.check:
            result["oracle"] = _scalar(brute_force_marginal(g, w, xi))
    _emit(args, result)


def cmd_z2(args):
    if args.z2what == "p0":
        p0 = zero_height_probability()
        _emit(args, {"p0": _scalar(p0)})
    elif args.z2what == "kernel":
        table = potential_kernel(args.radius)
        rows = [(x, y, table.value((x, y)))
                for x in range(args.radius + 1) for y in range(x + 1)]
        if args.csv:
            _write_csv(args.csv, ["x", "y", "a"], rows)
        _emit(args, {"radius": args.radius,
                     "values": {f"{x},{y}": a for x, y, a in rows[:28]},
                     "csv": args.csv})
    elif args.z2what == "decay":
        distances = [d for d in (4, 6, 8, 12, 16, 24, 32) if d <= args.dmax]
        rows, slope = decay_experiment(distances)
        if args.csv:
            _write_csv(args.csv, ["distance", "correlation"], rows)
        _emit(args, {"rows": [{"distance": r, "correlation": c} for r, c in rows],
                     "fitted_exponent": slope, "csv": args.csv})
    elif args.z2what == "series":
        anchors = [(0, 0)]
        res = height_prob_series(anchors, {(0, 0): args.height},
                                 max_size=args.max_w, box=args.box,
                                 seed=args.seed, samples=args.samples)
        if args.csv:
            _write_csv(args.csv,
                       ["w", "event_frequency", "event_ci", "factor", "contribution"],
                       [(";".join(f"{p[0]},{p[1]}" for p in sorted(t.w)),
                         t.event_frequency, t.event_ci, str(t.factor),
                         t.contribution) for t in res.terms])
        _emit(args, {
            "height": args.height,
            "partial_sums": {str(k): v for k, v in res.partial_sums.items()},
            "estimate": res.estimate,
            "ci99": res.ci,
            "covered_mass": res.covered_mass,
            "truncation_gap": res.truncation_gap,
            "sensitivity": res.sensitivity,
            "csv": args.csv,
        })
    else:
        raise GraphError(f"unknown z2 command {args.z2what!r}")


def cmd_validate(args):
    diags = validate_files(
        _read(args.graph),
        _read(args.sandpile) if args.sandpile else None,
        _read(args.tree) if args.tree else None)
    _emit(args, {"diagnostics": diags,
                 "ok": not any(d.startswith("error") for d in diags)})


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sandpiles",
        description="Abelian sandpiles, burning bijections and "
                    "transfer-current determinants")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="write the result document here")

    sp = sub.add_parser("oracle", help="brute-force enumerations")
    sp.add_argument("what", choices=["trees", "stable", "recurrent", "stationary"])
    sp.add_argument("--graph", required=True)
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("marginal", help="exact stationary marginal by enumeration")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--w", required=True, help="vertices, ';'-separated")
    sp.add_argument("--xi", required=True, help="heights, ','-separated")
    common(sp)
    sp.set_defaults(func=cmd_marginal)

    sp = sub.add_parser("stabilize", help="topple a sandpile until stable")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--sandpile", required=True)
    common(sp)
    sp.set_defaults(func=cmd_stabilize)

    sp = sub.add_parser("burn-test", help="recurrence test and burn record")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--sandpile", required=True)
    sp.add_argument("--q", help="protected vertices for the first phase")
    common(sp)
    sp.set_defaults(func=cmd_burn_test)

    sp = sub.add_parser("sample", help="stationary chain sampler")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--burn-in", type=int, default=None)
    sp.add_argument("--thin", type=int, default=1)
    sp.add_argument("--count", type=int, default=10)
    common(sp)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("bijection", help="convert sandpile <-> spanning tree")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--to", choices=["tree", "sandpile"], required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--q", help="protected vertices")
    common(sp)
    sp.set_defaults(func=cmd_bijection)

    sp = sub.add_parser("transfer-current", help="edge-pair current matrix")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--backend", choices=["exact", "float"], default=None)
    common(sp)
    sp.set_defaults(func=cmd_transfer_current)

    sp = sub.add_parser("minimal-prob", help="determinantal probability of a "
                                             "minimal configuration")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--w", required=True, help="vertices, ';'-separated")
    sp.add_argument("--xi", required=True, help="heights, ','-separated")
    sp.add_argument("--backend", choices=["exact", "float"], default=None)
    sp.add_argument("--check", action="store_true",
                    help="also run the enumeration oracle")
    common(sp)
    sp.set_defaults(func=cmd_minimal_prob)

    spz = sub.add_parser("z2", help="square-lattice computations")
    zsub = spz.add_subparsers(dest="z2what", required=True)

    sp = zsub.add_parser("p0", help="probability of height 0 at the origin")
    common(sp)
    sp.set_defaults(func=cmd_z2)

    sp = zsub.add_parser("kernel", help="potential kernel table")
    sp.add_argument("--radius", type=int, default=8)
    sp.add_argument("--csv")
    common(sp)
    sp.set_defaults(func=cmd_z2)

    sp = zsub.add_parser("decay", help="zero-height pair correlation decay")
    sp.add_argument("--dmax", type=int, default=32)
    sp.add_argument("--csv")
    common(sp)
    sp.set_defaults(func=cmd_z2)

    sp = zsub.add_parser("series", help="height probability series at the origin")
    sp.add_argument("--height", type=int, required=True)
    sp.add_argument("--max-w", type=int, default=5)
    sp.add_argument("--box", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--samples", type=int, default=10000)
    sp.add_argument("--csv")
    common(sp)
    sp.set_defaults(func=cmd_z2)

    sp = sub.add_parser("validate", help="schema-check graph/sandpile/tree files")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--sandpile")
    sp.add_argument("--tree")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args._command_line = ["sandpiles"] + argv
    try:
        args.func(args)
    except (GraphError, FileFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
