"""Shared test utilities: random graph generation, reference
implementations used as independent checks, and small conveniences."""

from __future__ import annotations

import random
from fractions import Fraction

from sandpiles import (Multigraph, build_graph, dhar_recurrence_test,
                       maximal_extension)


def random_connected_multigraph(rng: random.Random, max_vertices=5, max_edges=8):
    """One random connected multigraph with a random sink; retries until
    connected (deterministic for a given rng state)."""
    while True:
        n = rng.randint(2, max_vertices)
        names = [f"v{i}" for i in range(n)]
        m = rng.randint(n - 1, max_edges)
        edges = []
        # a random spanning skeleton first, then extra copies anywhere
        order = names[:]
        rng.shuffle(order)
        for i in range(1, n):
            edges.append((order[i], rng.choice(order[:i])))
        while len(edges) < m:
            u, v = rng.sample(names, 2)
            edges.append((u, v))
        try:
            return build_graph(names, rng.choice(names), [(u, v, 1) for u, v in edges])
        except Exception:
            continue


def graph_suite(count=60, seed=20240817):
    rng = random.Random(seed)
    return [random_connected_multigraph(rng) for _ in range(count)]


def stabilize_random_order(g: Multigraph, heights, rng: random.Random):
    """Reference stabilization toppling one unstable vertex at a time in a
    random order; single topplings only."""
    h = {v: int(heights[v]) for v in g.sites}
    lost = 0
    while True:
        unstable = [v for v in g.sites if h[v] >= g.degree(v)]
        if not unstable:
            return h, lost
        v = rng.choice(unstable)
        h[v] -= g.degree(v)
        for u, mult in g.neighbors(v):
            if u == g.sink:
                lost += mult
            else:
                h[u] += mult


def definitional_minimal(g: Multigraph, xi, w) -> str:
    """Minimality straight from the definition: the maximal extension is
    recurrent and no single particle on W can be removed."""
    w = frozenset(w)
    eta = maximal_extension(g, xi, w)
    if not dhar_recurrence_test(g, eta):
        return "not-recurrent"
    for v in w:
        if eta[v] >= 1:
            down = dict(eta)
            down[v] -= 1
            if dhar_recurrence_test(g, down):
                return "not-minimal"
    return "minimal"


def definitional_minimal_all_extensions(g: Multigraph, xi, w) -> str:
    """Same, but quantifying over every recurrent extension (exponential;
    validates the maximal-extension reduction on tiny graphs)."""
    from sandpiles import enumerate_recurrent

    w = frozenset(w)
    extensions = [h for h in enumerate_recurrent(g)
                  if all(h[v] == xi[v] for v in w)]
    if not extensions:
        return "not-recurrent"
    for h in extensions:
        for v in w:
            if h[v] >= 1:
                down = dict(h)
                down[v] -= 1
                if dhar_recurrence_test(g, down):
                    return "not-minimal"
    return "minimal"


def oriented_tree_parents(g: Multigraph, tree_edge_ids):
    """Orient an (unrooted) spanning tree edge set toward the sink;
    returns {vertex: parent_vertex}."""
    adj = {v: [] for v in g.vertices}
    for eid in tree_edge_ids:
        e = g.edges[eid]
        adj[e.tail].append((e.head, eid))
        adj[e.head].append((e.tail, eid))
    parent = {}
    stack = [g.sink]
    seen = {g.sink}
    while stack:
        v = stack.pop()
        for u, eid in adj[v]:
            if u not in seen:
                seen.add(u)
                parent[u] = v
                stack.append(u)
    return parent


def tree_fraction(trees, predicate) -> Fraction:
    return Fraction(sum(1 for t in trees if predicate(t)), len(trees))
