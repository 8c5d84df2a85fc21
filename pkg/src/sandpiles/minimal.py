"""Minimal and generalized-minimal subconfigurations.

A stable configuration xi on a vertex set W is minimal when it extends to
a recurrent sandpile but removing any single particle on W makes that
impossible. With a connected complement the test is a recursive peeling
of entry points; when W encloses holes (finite complement components away
from the sink) the verdict comes from removal tests on the maximal
extension, and the holes turn out to carry forced maximal heights.

The stationary probability of a (generalized) minimal configuration is a
determinant: wire the complement of W and its holes, take the burning
bijection tree of the forced extension there, and evaluate the
edge-absence matrix over the remaining edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .bijection import default_ordering, sandpile_to_tree
from .currents import transfer_current
from .dynamics import dhar_recurrence_test, two_phase_burn
from .errors import NotMinimalError, NotStableError
from .graphs import GraphError, Multigraph, Vertex, wire


@dataclass(frozen=True)
class MinimalWitness:
    """Outcome of a minimality test.

    For minimal configurations ``peeling`` lists the entry-point sets
    consumed level by level. Failures carry the violated condition:
    "i" (adjacent entry points), "ii" (an entry point above its internal
    degree), "iii" (a deeper peeling level fails), "removable" (a single
    particle can be removed), or a phase reason for configurations with
    holes ("phase-one", "multi-entry", "stall").
    """

    verdict: str  # "minimal" | "not-minimal" | "not-recurrent"
    peeling: tuple[frozenset, ...] = ()
    failed_condition: str | None = None
    detail: str | None = None

    @property
    def is_minimal(self) -> bool:
        return self.verdict == "minimal"


@dataclass(frozen=True)
class HoleDecomposition:
    """Connected components of the complement of W that miss the sink,
    with the vertex of W through which the phased burning first enters
    each, and how many entries appeared simultaneously (above 1 only for
    non-minimal configurations)."""

    holes: tuple[frozenset, ...]
    entries: tuple
    multiplicities: tuple[int, ...]

    @property
    def count(self) -> int:
        return len(self.holes)

    @property
    def hole_vertices(self) -> frozenset:
        out: set = set()
        for h in self.holes:
            out |= h
        return frozenset(out)


def complement_holes(g: Multigraph, w) -> tuple[frozenset, ...]:
    """Components of the graph minus W that do not contain the sink."""
    w = frozenset(w)
    rest = (set(g.sites) - w) | {g.sink}
    seen: set = set()
    holes = []
    for start in [g.sink] + sorted(rest - {g.sink}, key=g.index):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for u, _ in g.neighbors(v):
                if u in rest and u not in comp:
                    comp.add(u)
                    stack.append(u)
        seen |= comp
        if g.sink not in comp:
            holes.append(frozenset(comp))
    return tuple(holes)


def _check_w(g: Multigraph, w) -> frozenset:
    w = frozenset(w)
    if not w:
        raise GraphError("W is empty")
    bad = w - set(g.sites)
    if bad:
        raise GraphError(f"W contains non-site vertices {sorted(map(repr, bad))}")
    return w


def _check_xi(g: Multigraph, xi: Mapping, w: frozenset) -> None:
    for v in w:
        h = xi[v]
        if h < 0 or h >= g.degree(v):
            raise NotStableError(f"height {h} at {v!r} is not stable")


def entry_points(g: Multigraph, xi: Mapping, w: Iterable[Vertex]) -> frozenset:
    """Vertices of W burnable at the very first round of burning on the
    wired graph: height at least the multiplicity-weighted degree into W."""
    w = _check_w(g, w)
    return frozenset(v for v in w if xi[v] >= g.internal_degree(v, w))


def maximal_extension(g: Multigraph, xi: Mapping, w: Iterable[Vertex]) -> dict:
    """Extend xi by height deg-1 off W (the canonical recurrent candidate)."""
    w = frozenset(w)
    return {v: (xi[v] if v in w else g.degree(v) - 1) for v in g.sites}


def _peel(g: Multigraph, xi: Mapping, w: frozenset) -> MinimalWitness:
    """Entry-point peeling; assumes xi is recurrent on the wired graph.

    At each level the entry points must be pairwise non-adjacent and sit
    exactly at their internal degree; then they are removed and the test
    recurses on the remainder.
    """
    remaining = set(w)
    peeling: list[frozenset] = []
    depth = 0
    while remaining:
        entries = frozenset(v for v in remaining
                            if xi[v] >= g.internal_degree(v, remaining))
        if not entries:
            return MinimalWitness("not-recurrent", tuple(peeling),
                                  "stall", f"no entry points at depth {depth}")
        for v in sorted(entries, key=g.index):
            for u, _ in g.neighbors(v):
                if u in entries and u != v:
                    cond = "i" if depth == 0 else "iii"
                    return MinimalWitness(
                        "not-minimal", tuple(peeling), cond,
                        f"adjacent entry points {v!r}, {u!r} at depth {depth}")
            if xi[v] != g.internal_degree(v, remaining):
                cond = "ii" if depth == 0 else "iii"
                return MinimalWitness(
                    "not-minimal", tuple(peeling), cond,
                    f"entry point {v!r} at depth {depth} holds "
                    f"{xi[v]} > internal degree {g.internal_degree(v, remaining)}")
        peeling.append(entries)
        remaining -= entries
        depth += 1
    return MinimalWitness("minimal", tuple(peeling))


def is_minimal(g: Multigraph, xi: Mapping, w: Iterable[Vertex]) -> MinimalWitness:
    """Minimality test for W whose complement (sink included) is connected."""
    w = _check_w(g, w)
    _check_xi(g, xi, w)
    if complement_holes(g, w):
        raise GraphError("complement of W is disconnected; "
                         "use is_generalized_minimal")
    gw = wire(g, w)
    if not dhar_recurrence_test(gw, {v: xi[v] for v in w}):
        return MinimalWitness("not-recurrent")
    return _peel(g, xi, w)


def minimal_total_particles(g: Multigraph, w: Iterable[Vertex]) -> int:
    """The particle total shared by every minimal configuration on W.

    With a connected complement this is the edge count of the wired graph
    minus its sink degree (the number of W-internal edges); holes, whose
    heights are forced maximal, have their contribution subtracted.
    """
    w = _check_w(g, w)
    holes = complement_holes(g, w)
    hole_vs = [v for h in holes for v in h]
    wp = w | frozenset(hole_vs)
    gw = wire(g, wp)
    return (len(gw.edges) - gw.degree(gw.sink)
            - sum(g.degree(v) - 1 for v in hole_vs))


def _phased_decomposition(g: Multigraph, xi: Mapping, w: frozenset,
                          holes: tuple[frozenset, ...]):
    """Run the phased burning that locates one entry vertex per hole.

    Rounds over W (holes held at maximal height, complement of W and
    holes pre-burnt) halt whenever a neighbour of an unopened hole becomes
    burnable; that vertex opens the hole, which is then consumed before
    burning resumes. Returns (decomposition, failure-reason-or-None).
    """
    entries: list = [None] * len(holes)
    mults = [0] * len(holes)
    hole_of = {v: j for j, hole in enumerate(holes) for v in hole}

    def result(reason=None):
        return HoleDecomposition(holes, tuple(entries), tuple(mults)), reason

    eta = maximal_extension(g, xi, w)
    w_prime = w | frozenset(hole_of)
    record = two_phase_burn(g, eta, protected=w_prime)
    if record.unburnt_mid != w_prime:
        return result("phase-one")

    unburnt = set(w_prime)
    udeg = {x: g.internal_degree(x, unburnt) for x in unburnt}
    opened = [False] * len(holes)

    def burn(vertices):
        for x in vertices:
            unburnt.discard(x)
        for x in vertices:
            for u, mult in g.neighbors(x):
                if u in unburnt:
                    udeg[u] -= mult

    while unburnt & w:
        burnable = [x for x in sorted(unburnt & w, key=g.index)
                    if xi[x] >= udeg[x]]
        if not burnable:
            return result("stall")
        touched: dict[int, list] = {}
        for x in burnable:
            for u, _ in g.neighbors(x):
                j = hole_of.get(u)
                if j is not None and not opened[j]:
                    xs = touched.setdefault(j, [])
                    if x not in xs:
                        xs.append(x)
        if not touched:
            burn(burnable)
            continue
        bad = None
        for j, xs in sorted(touched.items()):
            entries[j] = xs[0]
            mults[j] = len(xs)
            if len(xs) > 1:
                bad = j
        if bad is not None:
            return result("multi-entry")
        burn(sorted({xs[0] for xs in touched.values()}, key=g.index))
        for j in sorted(touched):
            opened[j] = True
            # maximal hole heights burn as soon as one neighbour has
            burn([v for v in sorted(holes[j], key=g.index) if v in unburnt])
    return result(None)


def is_generalized_minimal(
    g: Multigraph, xi: Mapping, w: Iterable[Vertex]
) -> tuple[MinimalWitness, HoleDecomposition]:
    """Minimality test allowing holes in W.

    The verdict is the removal test on the maximal extension: recurrent,
    and no single particle on W can be removed without losing recurrence.
    The phased burning supplies the hole decomposition; for minimal
    configurations the forced extension also passes the peeling test over
    W and the holes, which provides the witness peeling.
    """
    w = _check_w(g, w)
    _check_xi(g, xi, w)
    holes = complement_holes(g, w)
    decomp, reason = _phased_decomposition(g, xi, w, holes)

    eta = maximal_extension(g, xi, w)
    if not dhar_recurrence_test(g, eta):
        return MinimalWitness("not-recurrent"), decomp
    removable = None
    for v in sorted(w, key=g.index):
        if eta[v] >= 1:
            down = dict(eta)
            down[v] -= 1
            if dhar_recurrence_test(g, down):
                removable = v
                break
    if removable is not None:
        return (MinimalWitness("not-minimal", (), reason or "removable",
                               f"a particle at {removable!r} can be removed"),
                decomp)

    wp = w | decomp.hole_vertices
    witness = _peel(g, {v: eta[v] for v in wp}, wp)
    if not witness.is_minimal:
        # should not happen: the peeling over W and the forced holes
        # characterizes the removal test on every family we can enumerate
        raise RuntimeError("peeling disagrees with the removal test; "
                           f"{witness!r}")
    return witness, decomp


def hole_collapsed_graph(g: Multigraph, w: Iterable[Vertex],
                         decomposition: HoleDecomposition) -> Multigraph:
    """Wire the complement of W and its holes, then collapse every hole
    onto its entry vertex, dropping loops. Edge provenance keys survive.

    This is a structural reduction only; burning on the result is not
    equivalent to burning on the original graph (the collapse inflates
    the entry vertex's degree), so probability computations use
    ``edge_set_E`` instead, which wires the holes at their forced heights.
    """
    w = _check_w(g, w)
    for j, r in enumerate(decomposition.multiplicities):
        if r >= 2:
            raise NotMinimalError(
                f"hole {sorted(decomposition.holes[j])!r} has {r} entry vertices")
    target = {}
    for j, hole in enumerate(decomposition.holes):
        y = decomposition.entries[j]
        if y is None:
            raise NotMinimalError(
                f"hole {sorted(hole)!r} was never opened; no entry vertex")
        for v in hole:
            target[v] = y
    s = g.sink

    def image(v):
        if v in w:
            return v
        return target.get(v, s)

    specs = []
    for e in g.edges:
        u, v = image(e.tail), image(e.head)
        if u == v:
            continue
        specs.append((u, v, e.key()))
    return Multigraph(sorted(w, key=g.index) + [s], s, specs)


def _certificate(g: Multigraph, xi: Mapping, w: frozenset):
    """(witness, wired graph over W and holes, forced heights there)."""
    holes = complement_holes(g, w)
    if not holes:
        witness = is_minimal(g, xi, w)
        return witness, wire(g, w), {v: xi[v] for v in w}
    witness, _ = is_generalized_minimal(g, xi, w)
    if not witness.is_minimal:
        return witness, None, None
    wp = w | frozenset(v for h in holes for v in h)
    eta = maximal_extension(g, xi, w)
    return witness, wire(g, wp), {v: eta[v] for v in wp}


def edge_set_E(g: Multigraph, xi: Mapping, w: Iterable[Vertex]) -> frozenset:
    """Edge ids of g whose joint absence from the spanning tree is the
    event "the heights on W equal xi".

    The edges all touch W or one of its holes: wire the complement of W
    and the holes, take the burning-bijection tree of xi (holes at their
    forced maximal heights), and keep everything outside that tree.
    """
    w = _check_w(g, w)
    witness, wired, heights = _certificate(g, xi, w)
    if not witness.is_minimal:
        raise NotMinimalError(f"configuration is {witness.verdict}"
                              + (f" ({witness.failed_condition})"
                                 if witness.failed_condition else ""))
    tree = sandpile_to_tree(wired, heights)
    tree_keys = {oe.edge.key() for oe in tree.parents.values()}
    by_key = g.edge_by_key()
    return frozenset(by_key[e.key()].id for e in wired.edges
                     if e.key() not in tree_keys)


def minimal_probability(g: Multigraph, xi: Mapping, w: Iterable[Vertex],
                        backend: str | None = None):
    """Stationary probability of seeing xi on W, for (generalized)
    minimal xi, as an edge-absence determinant.

    Exact Fraction under the rational backend, float otherwise.
    """
    ids = sorted(edge_set_E(g, xi, w))
    y = transfer_current(g, ids, backend=backend)
    return y.to_absence_matrix().principal_minor(range(len(ids)))
