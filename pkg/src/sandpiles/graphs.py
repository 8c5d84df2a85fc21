"""Finite multigraphs with a distinguished sink vertex.

Vertices are arbitrary hashable labels: strings for hand-built graphs,
``(x, y)`` integer pairs for lattice boxes. Parallel edges are kept as
distinct copies with a canonical orientation so that edge-indexed
matrices and tree bijections can refer to individual copies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Iterator, Sequence

Vertex = Hashable
Point = tuple  # (x, y) lattice point

#: Sink label used by the lattice constructors.
SINK = "s"


class GraphError(ValueError):
    """Invalid graph construction or query."""


@dataclass(frozen=True)
class EdgeRef:
    """A single edge copy; the canonical orientation is tail -> head."""

    id: int
    tail: Vertex
    head: Vertex
    copy: int
    label: Any = None

    def other(self, v: Vertex) -> Vertex:
        if v == self.tail:
            return self.head
        if v == self.head:
            return self.tail
        raise GraphError(f"vertex {v!r} is not an endpoint of edge {self.id}")

    def key(self) -> Any:
        """Provenance key: the label when set, otherwise the edge id."""
        return self.label if self.label is not None else self.id


@dataclass(frozen=True)
class OrientedEdge:
    """An edge copy viewed with a chosen direction."""

    edge: EdgeRef
    forward: bool = True

    @property
    def id(self) -> int:
        return self.edge.id

    @property
    def tail(self) -> Vertex:
        return self.edge.tail if self.forward else self.edge.head

    @property
    def head(self) -> Vertex:
        return self.edge.head if self.forward else self.edge.tail

    def reversed(self) -> "OrientedEdge":
        return OrientedEdge(self.edge, not self.forward)


class Multigraph:
    """Immutable connected multigraph with a sink, no loops anywhere.

    The vertex order is canonical: non-sink vertices sorted by label when
    comparable (insertion order otherwise), sink last. Canonical edge
    orientation points from the earlier vertex to the later one; parallel
    copies are numbered in construction order.
    """

    __slots__ = (
        "sites",
        "sink",
        "vertices",
        "edges",
        "_index",
        "_adj",
        "_incident",
        "_pair",
        "_degree",
        "is_connected",
        "_hash",
        "_csr",
    )

    def __init__(
        self,
        vertices: Iterable[Vertex],
        sink: Vertex,
        edge_specs: Iterable[Sequence],
        *,
        require_connected: bool = True,
    ):
        vs = list(dict.fromkeys(vertices))
        if sink not in vs:
            raise GraphError(f"sink {sink!r} is not among the declared vertices")
        sites = [v for v in vs if v != sink]
        try:
            sites.sort()
        except TypeError:
            pass  # mixed/unorderable labels keep declaration order
        self.sites: tuple = tuple(sites)
        self.sink = sink
        self.vertices: tuple = self.sites + (sink,)
        self._index = {v: i for i, v in enumerate(self.vertices)}

        adj: dict = {v: {} for v in self.vertices}
        incident: dict = {v: [] for v in self.vertices}
        pair: dict = {}
        edges: list[EdgeRef] = []
        for spec in edge_specs:
            u, v = spec[0], spec[1]
            label = spec[2] if len(spec) > 2 else None
            if u not in self._index:
                raise GraphError(f"edge references undeclared vertex {u!r}")
            if v not in self._index:
                raise GraphError(f"edge references undeclared vertex {v!r}")
            if u == v:
                raise GraphError(f"loop edge at {u!r} is not allowed")
            if self._index[u] > self._index[v]:
                u, v = v, u
            copies = pair.setdefault((u, v), [])
            e = EdgeRef(len(edges), u, v, len(copies), label)
            edges.append(e)
            copies.append(e)
            incident[u].append(e)
            incident[v].append(e)
            adj[u][v] = adj[u].get(v, 0) + 1
            adj[v][u] = adj[v].get(u, 0) + 1
        self.edges: tuple[EdgeRef, ...] = tuple(edges)
        self._adj = adj
        self._incident = {v: tuple(es) for v, es in incident.items()}
        self._pair = {p: tuple(es) for p, es in pair.items()}
        self._degree = {v: sum(adj[v].values()) for v in self.vertices}
        self.is_connected = self._check_connected()
        if require_connected and not self.is_connected:
            raise GraphError("graph is not connected")
        self._hash = None
        self._csr = None

    def _check_connected(self) -> bool:
        if not self.edges and len(self.vertices) > 1:
            return False
        seen = {self.sink}
        stack = [self.sink]
        while stack:
            v = stack.pop()
            for u in self._adj[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == len(self.vertices)

    # -- queries ----------------------------------------------------------

    def degree(self, v: Vertex) -> int:
        return self._degree[v]

    def multiplicity(self, u: Vertex, v: Vertex) -> int:
        return self._adj[u].get(v, 0)

    def neighbors(self, v: Vertex) -> Iterator[tuple[Vertex, int]]:
        """Yield (neighbor, multiplicity) pairs."""
        return iter(self._adj[v].items())

    def incident_edges(self, v: Vertex) -> tuple[EdgeRef, ...]:
        return self._incident[v]

    def edges_between(self, u: Vertex, v: Vertex) -> tuple[EdgeRef, ...]:
        if self._index[u] > self._index[v]:
            u, v = v, u
        return self._pair.get((u, v), ())

    def oriented_from(self, v: Vertex) -> tuple[OrientedEdge, ...]:
        """All incident edge copies viewed with tail at v."""
        return tuple(OrientedEdge(e, e.tail == v) for e in self._incident[v])

    def index(self, v: Vertex) -> int:
        return self._index[v]

    def internal_degree(self, v: Vertex, subset) -> int:
        """Number of edge copies from v into ``subset`` (v excluded)."""
        return sum(m for u, m in self._adj[v].items() if u in subset and u != v)

    def edge_by_key(self) -> dict:
        """Map provenance key -> edge; keys must be unique."""
        out: dict = {}
        for e in self.edges:
            k = e.key()
            if k in out:
                raise GraphError(f"duplicate edge provenance key {k!r}")
            out[k] = e
        return out

    # -- equality is structural, labels included ---------------------------

    def _signature(self):
        return (
            self.vertices,
            self.sink,
            tuple(sorted(((e.tail, e.head, e.copy, e.label) for e in self.edges),
                         key=lambda t: (self._index[t[0]], self._index[t[1]], t[2]))),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Multigraph):
            return NotImplemented
        return self._signature() == other._signature()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._signature())
        return self._hash

    def __repr__(self) -> str:
        return (f"Multigraph({len(self.sites)} sites + sink {self.sink!r}, "
                f"{len(self.edges)} edges)")


def build_graph(
    vertices: Iterable[Vertex],
    sink: Vertex,
    weighted_edges: Iterable[Sequence],
) -> Multigraph:
    """Build a validated multigraph from (u, v, multiplicity) triples.

    Plain (u, v) pairs mean multiplicity 1. Raises GraphError on loops,
    undeclared vertices, nonpositive multiplicities or a disconnected
    result.
    """
    specs = []
    for w in weighted_edges:
        if len(w) == 2:
            u, v, mult = w[0], w[1], 1
        else:
            u, v, mult = w[0], w[1], w[2]
        if mult < 1:
            raise GraphError(f"edge {u!r}-{v!r} has multiplicity {mult} < 1")
        specs.extend((u, v) for _ in range(mult))
    return Multigraph(vertices, sink, specs)


def wire(g: Multigraph, keep: Iterable[Vertex]) -> Multigraph:
    """Identify everything outside ``keep`` with the sink, dropping loops.

    Edges of the result carry the provenance key of the edge they came
    from, so wiring twice keeps pointing at the original graph.
    """
    keep = frozenset(keep)
    if not keep:
        raise GraphError("keep set is empty")
    if g.sink in keep:
        raise GraphError("keep set must not contain the sink")
    unknown = keep - set(g.sites)
    if unknown:
        raise GraphError(f"keep set contains unknown vertices {sorted(map(repr, unknown))}")
    s = g.sink
    specs = []
    for e in g.edges:
        u = e.tail if e.tail in keep else s
        v = e.head if e.head in keep else s
        if u == s and v == s:
            continue
        specs.append((u, v, e.key()))
    return Multigraph(list(keep) + [s], s, specs)


def laplacian(g: Multigraph) -> tuple[list[list[int]], tuple]:
    """Full integer Laplacian (degree on the diagonal, minus multiplicity
    off it) over the canonical vertex order, sink included."""
    order = g.vertices
    n = len(order)
    idx = {v: i for i, v in enumerate(order)}
    m = [[0] * n for _ in range(n)]
    for v in order:
        i = idx[v]
        m[i][i] = g.degree(v)
        for u, mult in g.neighbors(v):
            m[i][idx[u]] = -mult
    return m, order


def reduced_laplacian(g: Multigraph) -> tuple[list[list[int]], tuple]:
    """Laplacian with the sink row and column deleted, over g.sites."""
    full, order = laplacian(g)
    n = len(order) - 1  # sink is last
    return [row[:n] for row in full[:n]], g.sites


@dataclass(frozen=True)
class LatticeBoxSpec:
    """Axis-aligned rectangle of Z^2 with wired boundary, bounds inclusive."""

    xmin: int
    xmax: int
    ymin: int
    ymax: int

    def __post_init__(self):
        if self.xmax < self.xmin or self.ymax < self.ymin:
            raise GraphError("empty lattice rectangle")

    @property
    def width(self) -> int:
        return self.xmax - self.xmin + 1

    @property
    def height(self) -> int:
        return self.ymax - self.ymin + 1

    @property
    def center(self) -> Point:
        return ((self.xmin + self.xmax) // 2, (self.ymin + self.ymax) // 2)

    def __contains__(self, p) -> bool:
        x, y = p
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def points(self) -> Iterator[Point]:
        for x in range(self.xmin, self.xmax + 1):
            for y in range(self.ymin, self.ymax + 1):
                yield (x, y)


def lattice_neighbors(p: Point) -> tuple[Point, Point, Point, Point]:
    x, y = p
    return ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1))


def lattice_edge(p: Point, q: Point) -> tuple[Point, Point]:
    """Canonical (sorted) endpoint pair naming one lattice edge."""
    return (p, q) if p <= q else (q, p)


def lattice_box(spec, ny: int | None = None) -> Multigraph:
    """Wired box of the square lattice: every vertex has degree 4, with
    boundary vertices picking up edges to the sink, one per missing
    neighbor. ``lattice_box(n)`` and ``lattice_box(nx, ny)`` build boxes
    anchored at the origin. Edge labels are canonical lattice edges.
    """
    if isinstance(spec, int):
        spec = LatticeBoxSpec(0, spec - 1, 0, (ny if ny is not None else spec) - 1)
    specs = []
    for p in spec.points():
        for q in lattice_neighbors(p):
            if q in spec:
                if q > p:
                    specs.append((p, q, lattice_edge(p, q)))
            else:
                specs.append((p, SINK, lattice_edge(p, q)))
    return Multigraph(list(spec.points()) + [SINK], SINK, specs)
