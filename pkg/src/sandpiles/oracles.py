"""Brute-force reference computations for small graphs.

Everything here is exact (ints and Fractions, no floats) and deliberately
naive; these are the ground truth the fast paths are tested against, not
production code. Budgets guard against accidentally enormous inputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping

from .dynamics import Sandpile, add_particle, stabilize
from .errors import BudgetExceededError
from .graphs import Multigraph


@dataclass(frozen=True)
class EnumerationBudget:
    max_edges: int = 24
    max_stable: int = 1 << 21

    def check_edges(self, g: Multigraph) -> None:
        if len(g.edges) > self.max_edges:
            raise BudgetExceededError(
                f"{len(g.edges)} edges exceeds the enumeration cap {self.max_edges}")

    def check_stable(self, count: int) -> None:
        if count > self.max_stable:
            raise BudgetExceededError(
                f"{count} stable configurations exceed the cap {self.max_stable}")


DEFAULT_BUDGET = EnumerationBudget()


def enumerate_spanning_trees(g: Multigraph,
                             budget: EnumerationBudget = DEFAULT_BUDGET) -> list[frozenset]:
    """All spanning trees as frozensets of edge ids, by deletion/contraction.

    The deletion branch is taken only when the remaining edges still
    connect the graph (bridge detection), so every leaf of the recursion
    emits exactly one tree.
    """
    budget.check_edges(g)
    n = len(g.vertices)
    idx = g.index
    edges = [(e.id, idx(e.tail), idx(e.head)) for e in g.edges]
    out: list[frozenset] = []

    def find(parent, v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    def connects(parent, rest):
        # can the contracted components still be joined by `rest`?
        p = list(parent)
        comp = len({find(p, v) for v in range(n)})
        for _, u, v in rest:
            ru, rv = find(p, u), find(p, v)
            if ru != rv:
                p[ru] = rv
                comp -= 1
                if comp == 1:
                    return True
        return comp == 1

    def rec(parent, rest, chosen):
        if len({find(parent, v) for v in range(n)}) == 1:
            out.append(frozenset(chosen))
            return
        if not rest:
            return
        eid, u, v = rest[0]
        tail = rest[1:]
        ru, rv = find(parent, u), find(parent, v)
        if ru == rv:
            rec(parent, tail, chosen)  # would close a cycle, skip it
            return
        contracted = list(parent)
        contracted[ru] = rv
        rec(contracted, tail, chosen + [eid])
        if connects(parent, tail):
            rec(parent, tail, chosen)

    rec(list(range(n)), edges, [])
    return out


def _burns_completely(g: Multigraph, heights) -> bool:
    """Plain burning test used as the recurrence filter (no records)."""
    unburnt = set(g.sites)
    udeg = {x: g.degree(x) - g.multiplicity(x, g.sink) for x in g.sites}
    changed = True
    while changed and unburnt:
        changed = False
        for x in list(unburnt):
            if heights[x] >= udeg[x]:
                unburnt.discard(x)
                for y, mult in g.neighbors(x):
                    if y in udeg and y in unburnt:
                        udeg[y] -= mult
                changed = True
    return not unburnt


def ample_for_all_subsets(g: Multigraph, heights) -> bool:
    """Recurrence by the raw criterion: every nonempty subset F of sites
    contains a vertex with height >= its edge count into F. Exponential;
    only for cross-checking the burning test on tiny graphs."""
    sites = g.sites
    for r in range(1, len(sites) + 1):
        for f in itertools.combinations(sites, r):
            fs = set(f)
            if not any(heights[x] >= g.internal_degree(x, fs) for x in f):
                return False
    return True


def iter_stable(g: Multigraph,
                budget: EnumerationBudget = DEFAULT_BUDGET) -> Iterator[Sandpile]:
    degs = [g.degree(v) for v in g.sites]
    total = 1
    for d in degs:
        total *= d
    budget.check_stable(total)
    for combo in itertools.product(*(range(d) for d in degs)):
        yield dict(zip(g.sites, combo))


def enumerate_stable(g: Multigraph,
                     budget: EnumerationBudget = DEFAULT_BUDGET) -> list[Sandpile]:
    return list(iter_stable(g, budget))


def enumerate_recurrent(g: Multigraph,
                        budget: EnumerationBudget = DEFAULT_BUDGET) -> list[Sandpile]:
    return [h for h in iter_stable(g, budget) if _burns_completely(g, h)]


def exact_stationary(g: Multigraph,
                     budget: EnumerationBudget = DEFAULT_BUDGET
                     ) -> tuple[list[Sandpile], list[Fraction]]:
    """Stationary distribution of the add-and-stabilize chain on the
    recurrent states, solved exactly from the transition matrix."""
    states = enumerate_recurrent(g, budget)
    key = {tuple(h[v] for v in g.sites): i for i, h in enumerate(states)}
    n = len(states)
    if n == 0:
        raise ValueError("no recurrent states")
    p = [[Fraction(0)] * n for _ in range(n)]
    step = Fraction(1, len(g.sites))
    for i, h in enumerate(states):
        for v in g.sites:
            nxt, _ = stabilize(g, add_particle(h, v))
            j = key[tuple(nxt[u] for u in g.sites)]
            p[i][j] += step

    # solve pi P = pi, sum pi = 1 by Gaussian elimination over Fractions
    a = [[p[j][i] - (1 if i == j else 0) for j in range(n)] for i in range(n)]
    a[n - 1] = [Fraction(1)] * n
    b = [Fraction(0)] * (n - 1) + [Fraction(1)]
    from ._linalg import solve_rational

    pi = solve_rational(a, [b])[0]
    return states, pi


def brute_force_marginal(g: Multigraph, w, xi: Mapping,
                         budget: EnumerationBudget = DEFAULT_BUDGET) -> Fraction:
    """Exact stationary probability that the heights on `w` equal `xi`,
    by enumerating the recurrent set."""
    w = tuple(w)
    rec = enumerate_recurrent(g, budget)
    if not rec:
        raise ValueError("no recurrent states")
    hits = sum(1 for h in rec if all(h[v] == xi[v] for v in w))
    return Fraction(hits, len(rec))
