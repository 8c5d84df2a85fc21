"""Graph, sandpile and tree files (JSON), with validating readers.

Graph:    {"vertices": [...], "sink": id, "edges": [{"u":..,"v":..,"mult":n}]}
Sandpile: {"graph": ref, "heights": [{"vertex": id, "h": n}, ...]}
Tree:     {"graph": ref, "parents": [{"vertex": id, "edge": edge_id}, ...]}

Lattice vertices may be written as two-element arrays; they are read back
as (x, y) tuples. Validation failures raise FileFormatError carrying
every diagnostic, with line numbers where the parser provides them.
"""

from __future__ import annotations

import json
from typing import Any

from .bijection import RootedSpanningTree
from .errors import FileFormatError
from .graphs import GraphError, Multigraph, OrientedEdge, build_graph


def _vertex_in(v):
    if isinstance(v, list):
        if len(v) != 2 or not all(isinstance(c, int) for c in v):
            raise FileFormatError(f"vertex {v!r} is not a coordinate pair")
        return tuple(v)
    return v


def _vertex_out(v):
    return list(v) if isinstance(v, tuple) else v


def _load_json(text: str, what: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(
            f"{what}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc


def loads_graph(text: str) -> Multigraph:
    doc = _load_json(text, "graph file")
    problems = []
    if not isinstance(doc, dict):
        raise FileFormatError("graph file: top level must be an object")
    for key in ("vertices", "sink", "edges"):
        if key not in doc:
            problems.append(f"missing field {key!r}")
    if problems:
        raise FileFormatError("graph file: " + "; ".join(problems))
    vertices = [_vertex_in(v) for v in doc["vertices"]]
    sink = _vertex_in(doc["sink"])
    edges = []
    for i, e in enumerate(doc["edges"]):
        if not isinstance(e, dict) or "u" not in e or "v" not in e:
            problems.append(f"edges[{i}]: must be an object with u and v")
            continue
        mult = e.get("mult", 1)
        if not isinstance(mult, int) or mult < 1:
            problems.append(f"edges[{i}]: mult must be a positive integer")
            continue
        edges.append((_vertex_in(e["u"]), _vertex_in(e["v"]), mult))
    if problems:
        raise FileFormatError("graph file: " + "; ".join(problems))
    try:
        return build_graph(vertices, sink, edges)
    except GraphError as exc:
        raise FileFormatError(f"graph file: {exc}") from exc


def dumps_graph(g: Multigraph) -> str:
    pairs: dict = {}
    for e in g.edges:
        pairs[(e.tail, e.head)] = pairs.get((e.tail, e.head), 0) + 1
    return json.dumps({
        "vertices": [_vertex_out(v) for v in g.vertices],
        "sink": _vertex_out(g.sink),
        "edges": [{"u": _vertex_out(u), "v": _vertex_out(v), "mult": m}
                  for (u, v), m in pairs.items()],
    }, indent=2)


def loads_sandpile(text: str, g: Multigraph) -> dict:
    doc = _load_json(text, "sandpile file")
    problems = []
    heights = {}
    for i, item in enumerate(doc.get("heights", ())):
        v = _vertex_in(item.get("vertex"))
        h = item.get("h")
        if v not in set(g.sites):
            problems.append(f"heights[{i}]: unknown vertex {v!r}")
        elif not isinstance(h, int) or h < 0:
            problems.append(f"heights[{i}]: height must be a nonnegative integer")
        else:
            heights[v] = h
    missing = set(g.sites) - set(heights)
    if missing:
        problems.append(f"missing heights for {sorted(map(repr, missing))}")
    if problems:
        raise FileFormatError("sandpile file: " + "; ".join(problems))
    return heights


def dumps_sandpile(heights: dict, graph_ref: str = "") -> str:
    return json.dumps({
        "graph": graph_ref,
        "heights": [{"vertex": _vertex_out(v), "h": int(h)}
                    for v, h in sorted(heights.items(), key=lambda kv: repr(kv[0]))],
    }, indent=2)


def loads_tree(text: str, g: Multigraph) -> RootedSpanningTree:
    doc = _load_json(text, "tree file")
    problems = []
    parents = {}
    for i, item in enumerate(doc.get("parents", ())):
        v = _vertex_in(item.get("vertex"))
        eid = item.get("edge")
        if v not in set(g.sites):
            problems.append(f"parents[{i}]: unknown vertex {v!r}")
            continue
        if not isinstance(eid, int) or not 0 <= eid < len(g.edges):
            problems.append(f"parents[{i}]: unknown edge id {eid!r}")
            continue
        e = g.edges[eid]
        if v not in (e.tail, e.head):
            problems.append(f"parents[{i}]: edge {eid} is not incident to {v!r}")
            continue
        parents[v] = OrientedEdge(e, e.tail == v)
    if problems:
        raise FileFormatError("tree file: " + "; ".join(problems))
    tree = RootedSpanningTree(parents)
    try:
        tree.validate(g)
    except GraphError as exc:
        raise FileFormatError(f"tree file: {exc}") from exc
    return tree


def dumps_tree(tree: RootedSpanningTree, graph_ref: str = "") -> str:
    return json.dumps({
        "graph": graph_ref,
        "parents": [{"vertex": _vertex_out(v), "edge": oe.id}
                    for v, oe in sorted(tree.parents.items(),
                                        key=lambda kv: repr(kv[0]))],
    }, indent=2)


def validate_files(graph_text: str, sandpile_text: str | None = None,
                   tree_text: str | None = None) -> list[str]:
    """Schema-check a graph file and optionally a sandpile/tree against it.

    Returns diagnostics; an empty list means everything validates. Stable
    sandpiles are fine; unstable ones produce a warning, not an error.
    """
    out: list[str] = []
    try:
        g = loads_graph(graph_text)
    except FileFormatError as exc:
        return [f"error: {exc}"]
    out.append(f"ok: graph with {len(g.sites)} sites and {len(g.edges)} edges")
    if sandpile_text is not None:
        try:
            h = loads_sandpile(sandpile_text, g)
            unstable = [v for v in g.sites if h[v] >= g.degree(v)]
            if unstable:
                out.append("warning: sandpile is unstable at "
                           f"{sorted(map(repr, unstable))}")
            else:
                out.append("ok: stable sandpile")
        except FileFormatError as exc:
            out.append(f"error: {exc}")
    if tree_text is not None:
        try:
            loads_tree(tree_text, g)
            out.append("ok: rooted spanning tree")
        except FileFormatError as exc:
            out.append(f"error: {exc}")
    return out
