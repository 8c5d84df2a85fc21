"""Transfer currents and determinantal edge probabilities.

Driving a unit current across an edge e induces a current through every
other edge f; the matrix of these currents, indexed by edge pairs, gives
the probability that a set of edges all lie in a uniform spanning tree as
a principal minor. The complementary matrix (identity minus it) does the
same for the probability that the edges are all absent.

Two scalar backends: exact Fractions (grounded solves by Gaussian
elimination, determinants fraction-free) and float64 (dense or sparse
factorized solves for large graphs).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ._linalg import bareiss_determinant, float_determinant, integer_determinant, solve_rational
from .graphs import EdgeRef, GraphError, Multigraph, OrientedEdge, reduced_laplacian

#: graphs with fewer edges than this default to the exact backend
EXACT_EDGE_LIMIT = 64


def _as_oriented(g: Multigraph, item) -> OrientedEdge:
    if isinstance(item, OrientedEdge):
        return item
    if isinstance(item, EdgeRef):
        return OrientedEdge(item, True)
    return OrientedEdge(g.edges[int(item)], True)


class _EdgeMatrix:
    """Symmetric edge-indexed matrix over an exact or float backend."""

    def __init__(self, edges: tuple, rows, backend: str):
        self.edges = edges
        self.rows = rows
        self.backend = backend

    def entry(self, i: int, j: int):
        return self.rows[i][j]

    def __len__(self) -> int:
        return len(self.edges)

    def submatrix(self, indices: Sequence[int]):
        idx = list(indices)
        return [[self.rows[i][j] for j in idx] for i in idx]

    def principal_minor(self, indices: Sequence[int]):
        sub = self.submatrix(indices)
        if self.backend == "exact":
            return bareiss_determinant(sub)
        return float_determinant(sub)

    def index_of(self, edge_id: int) -> int:
        for i, oe in enumerate(self.edges):
            if getattr(oe, "id", None) == edge_id:
                return i
        raise GraphError(f"edge {edge_id} is not indexed by this matrix")


class AbsenceMatrix(_EdgeMatrix):
    """Identity minus the transfer current; principal minors give the
    probabilities that edge sets avoid the uniform spanning tree."""


class TransferCurrentMatrix(_EdgeMatrix):
    def to_absence_matrix(self) -> AbsenceMatrix:
        n = len(self.edges)
        if self.backend == "exact":
            rows = tuple(
                tuple((1 if i == j else 0) - self.rows[i][j] for j in range(n))
                for i in range(n))
        else:
            rows = np.eye(n) - self.rows
        return AbsenceMatrix(self.edges, rows, self.backend)


def _exact_potentials(g: Multigraph, oriented: list[OrientedEdge]):
    lap, sites = reduced_laplacian(g)
    idx = {v: i for i, v in enumerate(sites)}
    n = len(sites)
    cols = []
    for oe in oriented:
        col = [Fraction(0)] * n
        if oe.tail != g.sink:
            col[idx[oe.tail]] += 1
        if oe.head != g.sink:
            col[idx[oe.head]] -= 1
        cols.append(col)
    sols = solve_rational(lap, cols)
    pots = []
    for sol in sols:
        phi = {v: sol[i] for v, i in idx.items()}
        phi[g.sink] = Fraction(0)
        pots.append(phi)
    return pots


def _float_potentials(g: Multigraph, oriented: list[OrientedEdge]):
    sites = g.sites
    idx = {v: i for i, v in enumerate(sites)}
    n = len(sites)
    rhs = np.zeros((n, len(oriented)))
    for c, oe in enumerate(oriented):
        if oe.tail != g.sink:
            rhs[idx[oe.tail], c] += 1.0
        if oe.head != g.sink:
            rhs[idx[oe.head], c] -= 1.0
    if n <= 600:
        lap, _ = reduced_laplacian(g)
        sol = np.linalg.solve(np.asarray(lap, dtype=float), rhs)
    else:
        from scipy.sparse import coo_matrix
        from scipy.sparse.linalg import splu

        data, ri, ci = [], [], []
        for v in sites:
            i = idx[v]
            ri.append(i)
            ci.append(i)
            data.append(float(g.degree(v)))
            for u, mult in g.neighbors(v):
                if u != g.sink:
                    ri.append(i)
                    ci.append(idx[u])
                    data.append(-float(mult))
        lu = splu(coo_matrix((data, (ri, ci)), shape=(n, n)).tocsc())
        sol = lu.solve(rhs)
    pots = []
    for c, oe in enumerate(oriented):
        phi = {v: sol[idx[v], c] for v in sites}
        phi[g.sink] = 0.0
        pots.append(phi)
    return pots


def transfer_current(g: Multigraph, edges: Iterable | None = None,
                     backend: str | None = None) -> TransferCurrentMatrix:
    """Transfer currents between the given oriented edges (defaults to all
    edges in canonical orientation).

    Entry (e, f) is the current through f, signed along f's orientation,
    when a unit current is driven from the tail of e to its head. Parallel
    edge copies produce identical rows; that is expected.
    """
    if edges is None:
        oriented = [OrientedEdge(e, True) for e in g.edges]
    else:
        oriented = [_as_oriented(g, item) for item in edges]
    seen = set()
    for oe in oriented:
        if oe.id in seen:
            raise GraphError(f"edge {oe.id} listed twice")
        seen.add(oe.id)
    if backend is None:
        backend = "exact" if len(g.edges) < EXACT_EDGE_LIMIT else "float"
    if backend not in ("exact", "float"):
        raise ValueError(f"unknown backend {backend!r}")

    if backend == "exact":
        pots = _exact_potentials(g, oriented)
        rows = tuple(
            tuple(phi[oe.tail] - phi[oe.head] for oe in oriented)
            for phi in pots)
    else:
        pots = _float_potentials(g, oriented)
        rows = np.array([[phi[oe.tail] - phi[oe.head] for oe in oriented]
                         for phi in pots])
    return TransferCurrentMatrix(tuple(oriented), rows, backend)


def prob_edges_present(y: TransferCurrentMatrix, subset: Iterable[int]):
    """Probability that all the indexed edges lie in the uniform spanning
    tree: principal minor of the transfer current matrix."""
    return y.principal_minor(list(subset))


def prob_edges_absent(k: AbsenceMatrix, subset: Iterable[int]):
    """Probability that none of the indexed edges lies in the tree:
    principal minor of the complementary matrix."""
    return k.principal_minor(list(subset))


def spanning_tree_count(g: Multigraph) -> int:
    """Number of spanning trees: determinant of the reduced Laplacian."""
    lap, _ = reduced_laplacian(g)
    return integer_determinant(lap)


def determinant(matrix, backend: str | None = None):
    """Determinant under either backend. Exact input (ints/Fractions)
    defaults to fraction-free elimination, arrays to pivoted float."""
    if backend is None:
        backend = "float" if isinstance(matrix, np.ndarray) else "exact"
    if backend == "exact":
        return bareiss_determinant([list(row) for row in matrix])
    return float_determinant(matrix)
