"""The burning bijection between recurrent sandpiles and spanning trees.

Each vertex receives a parent edge pointing at a vertex burnt exactly one
round earlier; which of the candidate edges is taken is read off the
height. Burning may avoid a protected set in its first phase, which makes
the map compatible with conditioning on "no tree edge enters the set".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .dynamics import BurnRecord, two_phase_burn
from .errors import NotRecurrentError
from .graphs import GraphError, Multigraph, OrientedEdge, Vertex


class StaticEdgeOrdering:
    """A fixed total order on the edges incident to each vertex.

    ``edges_from(x)`` lists every incident edge copy oriented with tail x,
    smallest first. Custom orderings can wrap any per-vertex ranking; the
    default sorts by (head position in the canonical vertex order, copy).
    """

    def __init__(self, g: Multigraph, orders: Mapping[Vertex, tuple] | None = None):
        self.graph = g
        if orders is None:
            orders = {
                v: tuple(sorted(g.oriented_from(v),
                                key=lambda oe: (g.index(oe.head), oe.edge.copy)))
                for v in g.sites
            }
        else:
            orders = {v: tuple(orders[v]) for v in orders}
            for v in g.sites:
                got = {oe.id for oe in orders.get(v, ())}
                want = {e.id for e in g.incident_edges(v)}
                if got != want:
                    raise GraphError(f"ordering at {v!r} does not cover the incident edges")
        self._orders = orders

    def edges_from(self, v: Vertex) -> tuple[OrientedEdge, ...]:
        return self._orders[v]


def default_ordering(g: Multigraph) -> StaticEdgeOrdering:
    return StaticEdgeOrdering(g)


@dataclass(frozen=True)
class RootedSpanningTree:
    """One parent edge per non-sink vertex, oriented toward the sink."""

    parents: dict  # vertex -> OrientedEdge with tail == vertex

    def parent_vertex(self, v: Vertex) -> Vertex:
        return self.parents[v].head

    def edge_ids(self) -> frozenset:
        return frozenset(oe.id for oe in self.parents.values())

    def path_to_sink(self, g: Multigraph, v: Vertex) -> list:
        path = [v]
        while path[-1] != g.sink:
            path.append(self.parent_vertex(path[-1]))
        return path

    def validate(self, g: Multigraph) -> None:
        if set(self.parents) != set(g.sites):
            raise GraphError("tree must assign a parent to every non-sink vertex")
        for v, oe in self.parents.items():
            if oe.tail != v:
                raise GraphError(f"parent edge of {v!r} is not oriented away from it")
        seen_ok: set = {g.sink}
        for v in g.sites:
            trail = []
            x = v
            while x not in seen_ok:
                trail.append(x)
                x = self.parent_vertex(x)
                if x in trail:
                    cyc = trail[trail.index(x):]
                    raise GraphError(f"parent edges contain a cycle through {cyc!r}")
            seen_ok.update(trail)

    def depths(self, g: Multigraph) -> dict:
        out = {g.sink: 0}
        for v in g.sites:
            trail = []
            x = v
            while x not in out:
                trail.append(x)
                x = self.parent_vertex(x)
            base = out[x]
            for i, y in enumerate(reversed(trail), start=1):
                out[y] = base + i
        del out[g.sink]
        return out


def descendants_in_tree(g: Multigraph, tree: RootedSpanningTree,
                        among: Iterable[Vertex]) -> frozenset:
    """Vertices whose parent path to the sink meets ``among``."""
    among = frozenset(among)
    memo: dict = {g.sink: False}
    for v in g.sites:
        trail = []
        x = v
        while x not in memo:
            if x in among:
                memo[x] = True
                break
            trail.append(x)
            x = tree.parent_vertex(x)
        val = memo[x]
        for y in trail:
            memo[y] = val
    return frozenset(v for v in g.sites if memo[v])


def _burnt_before_key(time):
    # phase-1 rounds precede every phase-2 round; the sink is round 0
    return time


def _assign_parents(g, heights, times, round_targets, ordering):
    parents = {}
    for x in g.sites:
        phase, rnd = times[x]
        targets = round_targets[(phase, rnd)]
        candidates = [oe for oe in ordering.edges_from(x) if oe.head in targets]
        n_x = 0
        tx = (phase, rnd)
        for y, mult in g.neighbors(x):
            ty = (0, 0) if y == g.sink else times.get(y)
            if ty is not None and ty < tx:
                n_x += mult
        k = heights[x] - (g.degree(x) - n_x)
        if not 0 <= k < len(candidates):
            raise NotRecurrentError(
                f"burning index {k} out of range at {x!r}; heights are inconsistent")
        parents[x] = candidates[k]
    return parents


def _round_targets(g, record: BurnRecord):
    """(phase, round) -> set of vertices burnt exactly one round earlier."""
    targets = {}
    prev = {g.sink}
    for i, rd in enumerate(record.rounds1, start=1):
        targets[(1, i)] = prev
        prev = rd
    phase1_all = {g.sink}
    for rd in record.rounds1:
        phase1_all |= rd
    prev = phase1_all
    for i, rd in enumerate(record.rounds2, start=1):
        targets[(2, i)] = prev
        prev = rd
    return targets


def sandpile_to_tree(g: Multigraph, heights: Mapping,
                     protected: Iterable[Vertex] = (),
                     ordering: StaticEdgeOrdering | None = None) -> RootedSpanningTree:
    """Map a recurrent sandpile to its spanning tree under the burning
    rule that avoids ``protected`` in the first phase."""
    if ordering is None:
        ordering = default_ordering(g)
    record = two_phase_burn(g, heights, protected)
    if not record.complete:
        raise NotRecurrentError("sandpile is not recurrent; burning stalls")
    times = record.burn_times()
    targets = _round_targets(g, record)
    parents = _assign_parents(g, heights, times, targets, ordering)
    return RootedSpanningTree(parents)


def tree_to_sandpile(g: Multigraph, tree: RootedSpanningTree,
                     protected: Iterable[Vertex] = (),
                     ordering: StaticEdgeOrdering | None = None) -> dict:
    """Invert the burning bijection.

    Burn times are forced by the tree: outside the descendant set of the
    protected vertices, the round is the tree depth; inside it, the round
    counts parent steps since the path left the set.
    """
    if ordering is None:
        ordering = default_ordering(g)
    tree.validate(g)
    protected = frozenset(protected)
    core = descendants_in_tree(g, tree, protected)

    times: dict = {}
    depth1: dict = {g.sink: 0}

    def d1(v):
        trail = []
        while v not in depth1:
            trail.append(v)
            v = tree.parent_vertex(v)
        base = depth1[v]
        for i, y in enumerate(reversed(trail), start=1):
            depth1[y] = base + i
        return depth1[trail[0]] if trail else base

    depth2: dict = {}

    def d2(v):
        trail = []
        while v in core and v not in depth2:
            trail.append(v)
            v = tree.parent_vertex(v)
        base = depth2[v] if v in core else 0
        for i, y in enumerate(reversed(trail), start=1):
            depth2[y] = base + i
        return depth2[trail[0]] if trail else base

    rounds1: dict = {}
    rounds2: dict = {}
    for x in g.sites:
        if x in core:
            times[x] = (2, d2(x))
            rounds2.setdefault(times[x][1], set()).add(x)
        else:
            times[x] = (1, d1(x))
            rounds1.setdefault(times[x][1], set()).add(x)

    record = BurnRecord(
        protected,
        tuple(frozenset(rounds1[i]) for i in sorted(rounds1)),
        tuple(frozenset(rounds2[i]) for i in sorted(rounds2)),
        frozenset(core),
        frozenset(),
    )
    targets = _round_targets(g, record)

    heights = {}
    for x in g.sites:
        phase, rnd = times[x]
        candidates = [oe for oe in ordering.edges_from(x) if oe.head in targets[(phase, rnd)]]
        oe_x = tree.parents[x]
        pos = None
        for i, oe in enumerate(candidates):
            if oe.id == oe_x.id:
                pos = i
                break
        if pos is None:
            raise GraphError(
                f"parent edge of {x!r} does not point one round back; not a burning tree")
        n_x = 0
        tx = (phase, rnd)
        for y, mult in g.neighbors(x):
            ty = (0, 0) if y == g.sink else times[y]
            if ty < tx:
                n_x += mult
        heights[x] = g.degree(x) - n_x + pos
    return heights


def tree_event_no_entry(g: Multigraph, tree: RootedSpanningTree,
                        protected: Iterable[Vertex]) -> bool:
    """True iff no tree edge points from outside ``protected`` into it."""
    protected = frozenset(protected)
    return not any(v not in protected and tree.parent_vertex(v) in protected
                   for v in g.sites)
