"""Toppling, stabilization, the add-and-stabilize chain, and burning.

Sandpiles are plain ``{vertex: height}`` dicts over the non-sink
vertices. Burning is round-synchronous: at each round every vertex whose
height is at least its number of edges into the unburnt set burns, and a
protected set can be excluded from the first phase.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import NotRecurrentError, NotStableError
from .graphs import Multigraph, Vertex

Sandpile = dict


def zero_sandpile(g: Multigraph) -> Sandpile:
    return {v: 0 for v in g.sites}


def maximal_sandpile(g: Multigraph) -> Sandpile:
    """The all-maximal stable sandpile, height deg-1 everywhere."""
    return {v: g.degree(v) - 1 for v in g.sites}


def is_stable(g: Multigraph, heights: Mapping) -> bool:
    return all(heights[v] < g.degree(v) for v in g.sites)


def require_stable(g: Multigraph, heights: Mapping) -> None:
    for v in g.sites:
        h = heights[v]
        if h < 0:
            raise NotStableError(f"negative height {h} at {v!r}")
        if h >= g.degree(v):
            raise NotStableError(
                f"height {h} at {v!r} is not below the degree {g.degree(v)}")


@dataclass(frozen=True)
class TopplingReport:
    """Bookkeeping for one stabilization."""

    odometer: dict
    lost_to_sink: int

    def total_topplings(self) -> int:
        return sum(self.odometer.values())


def stabilize(g: Multigraph, heights: Mapping) -> tuple[Sandpile, TopplingReport]:
    """Topple until stable; FIFO order over unstable vertices.

    The result does not depend on the order. Each toppling step fires a
    vertex as many times as its height allows at once.
    """
    h = {v: int(heights[v]) for v in g.sites}
    for v, x in h.items():
        if x < 0:
            raise NotStableError(f"negative height {x} at {v!r}")
    odometer = {v: 0 for v in g.sites}
    lost = 0
    sink = g.sink
    from collections import deque

    queue = deque(v for v in g.sites if h[v] >= g.degree(v))
    queued = set(queue)
    while queue:
        v = queue.popleft()
        queued.discard(v)
        d = g.degree(v)
        if h[v] < d:
            continue
        times = h[v] // d
        h[v] -= times * d
        odometer[v] += times
        for u, mult in g.neighbors(v):
            if u == sink:
                lost += times * mult
            else:
                h[u] += times * mult
                if h[u] >= g.degree(u) and u not in queued:
                    queue.append(u)
                    queued.add(u)
    return h, TopplingReport(odometer, lost)


def add_particle(heights: Mapping, v: Vertex, amount: int = 1) -> Sandpile:
    out = dict(heights)
    out[v] = out.get(v, 0) + amount
    return out


def chain_step(g: Multigraph, heights: Mapping, rng: np.random.Generator) -> Sandpile:
    """One step of the chain: drop a particle at a uniform vertex, stabilize."""
    require_stable(g, heights)
    v = g.sites[int(rng.integers(len(g.sites)))]
    out, _ = stabilize(g, add_particle(heights, v))
    return out


# -- burning ---------------------------------------------------------------


@dataclass(frozen=True)
class BurnRecord:
    """Round-by-round burning of a stable sandpile, in two phases.

    Phase 1 burns greedily while never touching ``protected``; phase 2
    burns whatever is left without restriction. Round 0 of phase 1 is the
    sink alone and round 0 of phase 2 is everything burnt in phase 1; only
    rounds >= 1 are stored.
    """

    protected: frozenset
    rounds1: tuple[frozenset, ...]
    rounds2: tuple[frozenset, ...]
    unburnt_mid: frozenset
    unburnt_final: frozenset

    @property
    def complete(self) -> bool:
        return not self.unburnt_final

    @property
    def fixed_point_round(self) -> int:
        """Index after which phase 1 makes no further progress."""
        return len(self.rounds1)

    def burn_times(self) -> dict:
        """vertex -> (phase, round) with rounds starting at 1."""
        out = {}
        for i, rd in enumerate(self.rounds1, start=1):
            for v in rd:
                out[v] = (1, i)
        for i, rd in enumerate(self.rounds2, start=1):
            for v in rd:
                out[v] = (2, i)
        return out

    def all_rounds(self) -> tuple[frozenset, ...]:
        return self.rounds1 + self.rounds2


def _burn_rounds(g, heights, unburnt, excluded, udeg):
    """Run rounds until no progress; mutates unburnt/udeg, returns rounds."""
    rounds = []
    while True:
        burnable = [x for x in unburnt
                    if x not in excluded and heights[x] >= udeg[x]]
        if not burnable:
            return rounds
        rounds.append(frozenset(burnable))
        for x in burnable:
            unburnt.discard(x)
        for x in burnable:
            for y, mult in g.neighbors(x):
                if y in unburnt:
                    udeg[y] -= mult


def two_phase_burn(g: Multigraph, heights: Mapping,
                   protected: Iterable[Vertex] = ()) -> BurnRecord:
    """Burn a stable sandpile, avoiding ``protected`` in the first phase."""
    require_stable(g, heights)
    protected = frozenset(protected)
    unknown = protected - set(g.sites)
    if unknown:
        raise NotStableError(f"protected set contains non-vertices {unknown!r}")
    unburnt = set(g.sites)
    udeg = {x: g.degree(x) - g.multiplicity(x, g.sink) for x in g.sites}
    rounds1 = _burn_rounds(g, heights, unburnt, protected, udeg)
    unburnt_mid = frozenset(unburnt)
    rounds2 = _burn_rounds(g, heights, unburnt, frozenset(), udeg)
    return BurnRecord(protected, tuple(rounds1), tuple(rounds2),
                      unburnt_mid, frozenset(unburnt))


def dhar_recurrence_test(g: Multigraph, heights: Mapping,
                         with_witness: bool = False):
    """True iff the stable sandpile is recurrent (everything burns).

    With ``with_witness`` also returns a burning sequence (vertices in a
    valid burn order, lexicographic within rounds), or None.
    """
    record = two_phase_burn(g, heights)
    if not with_witness:
        return record.complete
    if not record.complete:
        return False, None
    return True, burning_sequence(g, record)


def burning_sequence(g: Multigraph, record: BurnRecord) -> list:
    """Linearize a burn record, breaking ties within a round by the
    canonical vertex order."""
    seq = []
    for rd in record.all_rounds():
        seq.extend(sorted(rd, key=g.index))
    return seq


def unburnt_after_first_phase(g: Multigraph, heights: Mapping,
                              protected: Iterable[Vertex]) -> frozenset:
    """Vertices that survive the first (protected-avoiding) phase of a
    recurrent sandpile; always a superset of the protected set."""
    record = two_phase_burn(g, heights, protected)
    if not record.complete:
        raise NotRecurrentError("sandpile is not recurrent")
    return record.unburnt_mid


def first_phase_burns_rest(g: Multigraph, heights: Mapping,
                           protected: Iterable[Vertex]) -> bool:
    """True when the first phase burns everything outside the protected set."""
    return unburnt_after_first_phase(g, heights, protected) == frozenset(protected)


# -- sampling ---------------------------------------------------------------


def graph_csr(g: Multigraph):
    """Flat neighbor arrays for the jit kernels: one entry per edge copy,
    -1 standing for the sink."""
    if g._csr is not None:
        return g._csr
    n = len(g.sites)
    idx = {v: i for i, v in enumerate(g.sites)}
    indptr = np.zeros(n + 1, dtype=np.int64)
    nbrs = []
    for i, v in enumerate(g.sites):
        for e in g.incident_edges(v):
            u = e.other(v)
            nbrs.append(-1 if u == g.sink else idx[u])
        indptr[i + 1] = len(nbrs)
    csr = (indptr, np.asarray(nbrs, dtype=np.int64),
           np.asarray([g.degree(v) for v in g.sites], dtype=np.int64))
    g._csr = csr
    return csr


def default_burn_in(g: Multigraph) -> int:
    """Conservative default: 2 * |V| * max degree chain steps."""
    return 2 * len(g.sites) * max(g.degree(v) for v in g.sites)


def chain_heights(
    g: Multigraph,
    watch_sites,
    seed: int,
    burn_in: int | None = None,
    thin: int = 1,
    count: int = 1000,
    start: Mapping | None = None,
) -> np.ndarray:
    """Heights at the watched sites along the stationary chain, one row
    per retained state; shape (count, len(watch_sites))."""
    from ._kernels import chain_run

    if burn_in is None:
        burn_in = default_burn_in(g)
    if thin < 1:
        raise ValueError("thin must be >= 1")
    indptr, nbrs, deg = graph_csr(g)
    h0 = maximal_sandpile(g) if start is None else dict(start)
    require_stable(g, h0)
    h = np.asarray([h0[v] for v in g.sites], dtype=np.int64)
    idx = {v: i for i, v in enumerate(g.sites)}
    watch = np.asarray([idx[v] for v in watch_sites], dtype=np.int64)
    return chain_run(h, indptr, nbrs, deg, np.uint64(seed),
                     burn_in, thin, count, watch)


def sample_stationary(
    g: Multigraph,
    seed: int,
    burn_in: int | None = None,
    thin: int = 1,
    count: int = 1000,
    start: Mapping | None = None,
) -> Iterator[Sandpile]:
    """Stream `count` chain states, `thin` steps apart after `burn_in`.

    Deterministic for a fixed seed. The walk starts from the all-maximal
    sandpile unless ``start`` is given.
    """
    states = chain_heights(g, g.sites, seed, burn_in, thin, count, start)
    for row in states:
        yield {v: int(row[i]) for i, v in enumerate(g.sites)}
