"""Square-lattice limits: potential kernel, limiting transfer current,
height probabilities at the origin, wired spanning-tree sampling, and the
series decomposition of stationary height probabilities.

The potential kernel is computed exactly. Every value has the form
alpha + beta/pi with rational alpha, beta: the two seeds a(0,0)=0 and
a(1,0)=1 are forced by symmetry and the unit defect at the origin, the
diagonal carries the closed form a(n,n) = (4/pi) * sum_{k<=n} 1/(2k-1),
and the harmonic relation marches column by column across the octant with
integer coefficients. Floats are produced at the end by high-precision
evaluation, so the notorious instability of the outward recurrence never
appears.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import mpmath
import numpy as np

from .bijection import sandpile_to_tree
from .currents import TransferCurrentMatrix, spanning_tree_count
from .dynamics import Sandpile
from .errors import NotMinimalError
from .graphs import (SINK, GraphError, LatticeBoxSpec, Multigraph, Point,
                     lattice_box, lattice_edge, lattice_neighbors)
from .minimal import is_minimal
from .oracles import EnumerationBudget, enumerate_recurrent

ORIGIN: Point = (0, 0)


# -- potential kernel --------------------------------------------------------


@dataclass(frozen=True)
class PotentialKernelTable:
    """Potential kernel values a(x) for max(|x1|,|x2|) <= radius.

    ``exact(p)`` returns the (alpha, beta) pair with a(p) = alpha + beta/pi;
    ``value(p)`` the float64 evaluation. Eightfold symmetry is exact.
    """

    radius: int
    precision: float
    _exact: dict = field(repr=False)
    _float: dict = field(repr=False)

    def _fold(self, p: Point) -> Point:
        x, y = abs(p[0]), abs(p[1])
        if y > x:
            x, y = y, x
        if x > self.radius:
            raise GraphError(f"point {p!r} is outside the kernel radius {self.radius}")
        return (x, y)

    def exact(self, p: Point) -> tuple[Fraction, Fraction]:
        return self._exact[self._fold(p)]

    def value(self, p: Point) -> float:
        return self._float[self._fold(p)]

    def covers(self, p: Point) -> bool:
        return max(abs(p[0]), abs(p[1])) <= self.radius


def _evaluate_pair(alpha: Fraction, beta: Fraction) -> float:
    digits = max(
        len(str(abs(alpha.numerator))), len(str(alpha.denominator)),
        len(str(abs(beta.numerator))), len(str(beta.denominator)))
    with mpmath.workdps(digits + 25):
        val = (mpmath.mpf(alpha.numerator) / alpha.denominator
               + (mpmath.mpf(beta.numerator) / beta.denominator) / mpmath.pi)
        return float(val)


def potential_kernel(radius: int, precision: float = 1e-12) -> PotentialKernelTable:
    """Exact potential kernel out to the given radius.

    ``precision`` is the guaranteed absolute accuracy of the float values;
    the exact pairs are error-free, so anything down to float64 rounding
    (about 1e-14 at this magnitude) is achievable.
    """
    if radius < 1:
        raise GraphError("radius must be >= 1")
    if precision < 1e-14:
        raise GraphError("precision beyond float64 rounding is not achievable")

    zero = Fraction(0)
    exact: dict = {(0, 0): (zero, zero), (1, 0): (Fraction(1), zero)}
    if radius >= 1:
        exact[(1, 1)] = (zero, Fraction(4))
    diag = Fraction(1)
    for n in range(2, radius + 1):
        diag += Fraction(1, 2 * n - 1)
        exact[(n, n)] = (zero, 4 * diag)

    def add(p, q):
        return (p[0] + q[0], p[1] + q[1])

    def scale(k, p):
        return (k * p[0], k * p[1])

    for x in range(1, radius):
        # a(x+1, x) from harmonicity at (x, x) and diagonal symmetry
        exact[(x + 1, x)] = add(scale(2, exact[(x, x)]),
                                scale(-1, exact[(x, x - 1)]))
        for y in range(x - 1, -1, -1):
            if y == 0:
                val = add(add(scale(4, exact[(x, 0)]), scale(-1, exact[(x - 1, 0)])),
                          scale(-2, exact[(x, 1)]))
            else:
                val = add(add(scale(4, exact[(x, y)]), scale(-1, exact[(x - 1, y)])),
                          add(scale(-1, exact[(x, y + 1)]), scale(-1, exact[(x, y - 1)])))
            exact[(x + 1, y)] = val

    floats = {p: _evaluate_pair(a, b) for p, (a, b) in exact.items()}
    return PotentialKernelTable(radius, precision, exact, floats)


_TABLE_CACHE: dict[int, PotentialKernelTable] = {}


def shared_kernel(radius: int) -> PotentialKernelTable:
    """Process-wide cache; tables are immutable and cheap to share."""
    best = max((r for r in _TABLE_CACHE if r >= radius), default=None)
    if best is not None:
        return _TABLE_CACHE[best]
    table = potential_kernel(radius)
    _TABLE_CACHE[radius] = table
    return table


# -- limiting transfer current ----------------------------------------------

LatticeEdge = tuple  # ((x1, y1), (x2, y2)), endpoints adjacent


def _check_lattice_edge(e) -> LatticeEdge:
    (a, b) = e
    if (abs(a[0] - b[0]) + abs(a[1] - b[1])) != 1:
        raise GraphError(f"{e!r} is not a lattice edge")
    return (tuple(a), tuple(b))


def z2_transfer_current(edges: Sequence, table: PotentialKernelTable | None = None
                        ) -> TransferCurrentMatrix:
    """Transfer current matrix of the infinite lattice between the given
    oriented lattice edges ((tail, head) point pairs).

    Entries come from second differences of the potential kernel,
    evaluated from the exact pairs: for e = (x -> y), f = (u -> w),
        Y(e, f) = [a(u-y) - a(u-x) - a(w-y) + a(w-x)] / 4.
    The sign and normalization are pinned by the finite-box limit (one
    calibration test compares against wired boxes).
    """
    oriented = [_check_lattice_edge(e) for e in edges]
    span = 1
    for (x, y) in oriented:
        for (u, w) in oriented:
            for p, q in ((u, y), (u, x), (w, y), (w, x)):
                d = (p[0] - q[0], p[1] - q[1])
                span = max(span, abs(d[0]), abs(d[1]))
    if table is None:
        table = shared_kernel(span)
    elif table.radius < span:
        raise GraphError(f"kernel radius {table.radius} < required span {span}")

    def diff(p, q):
        return table.exact((p[0] - q[0], p[1] - q[1]))

    n = len(oriented)
    rows = np.empty((n, n))
    for i, (x, y) in enumerate(oriented):
        for j, (u, w) in enumerate(oriented):
            if j < i:
                rows[i, j] = rows[j, i]
                continue
            alpha = Fraction(0)
            beta = Fraction(0)
            for sgn, (p, q) in ((1, (u, y)), (-1, (u, x)), (-1, (w, y)), (1, (w, x))):
                a, b = diff(p, q)
                alpha += sgn * a
                beta += sgn * b
            rows[i, j] = _evaluate_pair(alpha / 4, beta / 4)
    return TransferCurrentMatrix(tuple(oriented), rows, "float")


# -- wiring a finite window of the lattice ------------------------------------


def z2_wire(w: Iterable[Point]) -> Multigraph:
    """Wire the complement of a finite lattice set: every edge leaving W
    becomes a sink edge. Edge labels are canonical lattice edges."""
    w = frozenset(tuple(p) for p in w)
    if not w:
        raise GraphError("W is empty")
    specs = []
    for p in sorted(w):
        for q in lattice_neighbors(p):
            if q in w:
                if q > p:
                    specs.append((p, q, lattice_edge(p, q)))
            else:
                specs.append((p, SINK, lattice_edge(p, q)))
    return Multigraph(sorted(w) + [SINK], SINK, specs)


def wired_shell_graph(w: Iterable[Point], anchors: Iterable[Point]) -> Multigraph:
    """The wired shell used by the series decomposition: keep all edges
    inside W; an edge from an anchor to the outside becomes a sink edge;
    edges from the rest of W to the outside are dropped.

    The result can be disconnected from the sink, in which case it has no
    recurrent configurations and its term contributes zero.
    """
    w = frozenset(tuple(p) for p in w)
    anchors = frozenset(tuple(p) for p in anchors)
    if not anchors <= w:
        raise GraphError("anchors must lie inside W")
    specs = []
    for p in sorted(w):
        for q in lattice_neighbors(p):
            if q in w:
                if q > p:
                    specs.append((p, q, lattice_edge(p, q)))
            elif p in anchors:
                specs.append((p, SINK, lattice_edge(p, q)))
    return Multigraph(sorted(w) + [SINK], SINK, specs, require_connected=False)


def _holes_of(w: frozenset) -> list:
    """Finite components of the lattice complement of W (flood fill in a
    one-cell margin around W's bounding box)."""
    xs = [p[0] for p in w]
    ys = [p[1] for p in w]
    spec = LatticeBoxSpec(min(xs) - 1, max(xs) + 1, min(ys) - 1, max(ys) + 1)
    outside = {p for p in spec.points() if p not in w}
    border = {p for p in outside
              if p[0] in (spec.xmin, spec.xmax) or p[1] in (spec.ymin, spec.ymax)}
    seen: set = set()
    holes = []
    for start in sorted(outside):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        infinite = start in border
        while stack:
            v = stack.pop()
            for q in lattice_neighbors(v):
                if q in outside and q not in comp:
                    comp.add(q)
                    stack.append(q)
                    if q in border:
                        infinite = True
        seen |= comp
        if not infinite:
            holes.append(frozenset(comp))
    return holes


# -- height probabilities via determinants ------------------------------------


def z2_minimal_probability(xi: Mapping[Point, int],
                           table: PotentialKernelTable | None = None) -> float:
    """Stationary probability (infinite-volume limit) of a minimal
    configuration on the finite set W = keys of xi.

    W must not enclose holes. Minimality is checked on a wired box with a
    margin of two cells; the verdict is box-independent.
    """
    w = frozenset(tuple(p) for p in xi)
    if _holes_of(w):
        raise GraphError("W encloses holes; only hole-free sets are supported "
                         "on the infinite lattice")
    xs = [p[0] for p in w]
    ys = [p[1] for p in w]
    spec = LatticeBoxSpec(min(xs) - 2, max(xs) + 2, min(ys) - 2, max(ys) + 2)
    box = lattice_box(spec)
    witness = is_minimal(box, {p: xi[p] for p in w}, w)
    if not witness.is_minimal:
        raise NotMinimalError(f"configuration is {witness.verdict}"
                              + (f" ({witness.failed_condition})"
                                 if witness.failed_condition else ""))
    gw = z2_wire(w)
    tree = sandpile_to_tree(gw, {p: xi[p] for p in gw.sites})
    tree_labels = {oe.edge.label for oe in tree.parents.values()}
    absent = sorted(e.label for e in gw.edges if e.label not in tree_labels)
    y = z2_transfer_current(absent, table)
    return float(y.to_absence_matrix().principal_minor(range(len(absent))))


def zero_height_probability(table: PotentialKernelTable | None = None) -> float:
    """Probability that the origin carries no particle: the three-edge
    absence determinant; equals 2/pi^2 - 4/pi^3."""
    return z2_minimal_probability({ORIGIN: 0}, table)


def pair_correlation_zero_height(x: Point, y: Point,
                                 table: PotentialKernelTable | None = None) -> float:
    """Covariance of the zero-height events at x and y:
    P[h(x)=0, h(y)=0] - P[h=0]^2 (degenerate x == y gives p0 - p0^2)."""
    x, y = tuple(x), tuple(y)
    p0 = zero_height_probability(table)
    if x == y:
        return p0 - p0 * p0
    joint = z2_minimal_probability({x: 0, y: 0}, table)
    return joint - p0 * p0


def decay_experiment(distances: Sequence[int],
                     table: PotentialKernelTable | None = None):
    """Zero-height pair correlations along the axis with a log-log fit.

    Returns (rows, slope): rows of (distance, correlation), and the
    fitted exponent of |correlation| against distance.
    """
    if table is None:
        table = shared_kernel(max(distances) + 4)
    rows = []
    for r in distances:
        corr = pair_correlation_zero_height(ORIGIN, (int(r), 0), table)
        rows.append((int(r), corr))
    logs = np.log([abs(c) for _, c in rows])
    slope = float(np.polyfit(np.log([r for r, _ in rows]), logs, 1)[0])
    return rows, slope


# -- wired uniform spanning trees ---------------------------------------------


@dataclass(frozen=True)
class WiredForestSample:
    """One uniform spanning tree of a wired box, as parent directions.

    ``parent_dirs[x - xmin, y - ymin]`` is 0..3 for +x, -x, +y, -y; a step
    leaving the box means the parent is the sink.
    """

    spec: LatticeBoxSpec
    parent_dirs: np.ndarray
    seed: int

    def parent_of(self, p: Point):
        q = _apply_dir(p, int(self.parent_dirs[p[0] - self.spec.xmin,
                                                p[1] - self.spec.ymin]))
        return q if q in self.spec else SINK

    def parent_edge(self, p: Point) -> LatticeEdge:
        d = int(self.parent_dirs[p[0] - self.spec.xmin, p[1] - self.spec.ymin])
        return lattice_edge(p, _apply_dir(p, d))

    def to_tree(self, box_graph: Multigraph):
        from .bijection import RootedSpanningTree
        from .graphs import OrientedEdge

        by_key = box_graph.edge_by_key()
        parents = {}
        for p in self.spec.points():
            e = by_key[self.parent_edge(p)]
            parents[p] = OrientedEdge(e, e.tail == p)
        return RootedSpanningTree(parents)

    def validate(self) -> None:
        seen: dict = {}
        for p in self.spec.points():
            trail = []
            x = p
            while x != SINK and x not in seen:
                trail.append(x)
                x = self.parent_of(x)
            if x != SINK and x in trail:
                raise GraphError(f"parent directions contain a cycle at {x!r}")
            for t in trail:
                seen[t] = True


_DIRS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def _apply_dir(p: Point, d: int) -> Point:
    dx, dy = _DIRS[d]
    return (p[0] + dx, p[1] + dy)


def _box_spec(box) -> LatticeBoxSpec:
    if isinstance(box, LatticeBoxSpec):
        return box
    if isinstance(box, int):
        return LatticeBoxSpec(0, box - 1, 0, box - 1)
    raise GraphError(f"cannot interpret {box!r} as a box")


def _sample_seed(master: int, index: int) -> int:
    ss = np.random.SeedSequence(entropy=int(master) & (2**64 - 1),
                                spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def wilson_wired_ust(box, seed: int, index: int = 0) -> WiredForestSample:
    """One exactly-uniform spanning tree of the wired box, by loop-erased
    random walks. ``index`` selects a derived stream for batching."""
    from ._kernels import wilson_box

    spec = _box_spec(box)
    s = _sample_seed(seed, index)
    dirs = np.asarray(wilson_box(spec.width, spec.height, np.uint64(s)))
    return WiredForestSample(spec, dirs.reshape(spec.width, spec.height), s)


def sample_wired_ust(box, seed: int, count: int) -> Iterator[WiredForestSample]:
    for i in range(count):
        yield wilson_wired_ust(box, seed, i)


def descendants(sample: WiredForestSample, anchors: Iterable[Point]) -> frozenset:
    """Vertices whose parent path (toward the sink) meets the anchor set."""
    anchors = frozenset(tuple(p) for p in anchors)
    memo: dict = {SINK: False}
    for p in sample.spec.points():
        trail = []
        x = p
        while x not in memo:
            if x in anchors:
                memo[x] = True
                break
            trail.append(x)
            x = sample.parent_of(x)
        val = memo[x]
        for t in trail:
            memo[t] = val
    return frozenset(p for p in sample.spec.points() if memo[p])


# -- the series over candidate unburnt cores -----------------------------------


def connected_candidates(anchors: Iterable[Point], max_size: int) -> list[frozenset]:
    """All finite lattice sets W with anchors inside, |W| <= max_size, and
    every connected component of W meeting the anchor set."""
    anchors = sorted({tuple(p) for p in anchors})
    if not anchors:
        return []

    def component_sets(p: Point, cap: int) -> set[frozenset]:
        level = {frozenset({p})}
        out = set(level)
        for _ in range(cap - 1):
            nxt = set()
            for s in level:
                for q in {n for v in s for n in lattice_neighbors(v)} - s:
                    grown = s | {q}
                    if grown not in out:
                        out.add(grown)
                        nxt.add(grown)
            level = nxt
        return out

    results: set[frozenset] = set()

    def cover(i: int, current: frozenset):
        if len(current) > max_size:
            return
        if i == len(anchors):
            results.add(current)
            return
        q = anchors[i]
        if q in current:
            cover(i + 1, current)
            return
        for s in component_sets(q, max_size - len(current)):
            cover(i + 1, current | s)

    cover(0, frozenset())
    return sorted(results, key=lambda s: (len(s), sorted(s)))


@dataclass(frozen=True)
class SeriesTerm:
    """One candidate core W of the series: the tree-event frequency, its
    normal-approximation 99% half-width, and the exact per-core factor
    #{recurrent shell states matching xi} / #spanning trees of the wiring."""

    w: frozenset
    event_frequency: float
    event_ci: float
    factor: Fraction
    shell_recurrent: int
    shell_matching: int
    wired_trees: int

    @property
    def contribution(self) -> float:
        return self.event_frequency * float(self.factor)

    @property
    def mass_factor(self) -> Fraction:
        return Fraction(self.shell_recurrent, self.wired_trees)


@dataclass(frozen=True)
class SeriesResult:
    anchors: frozenset
    xi: dict
    max_size: int
    box: LatticeBoxSpec
    samples: int
    seed: int
    terms: tuple[SeriesTerm, ...]
    partial_sums: dict
    ci: float
    covered_mass: float
    covered_mass_ci: float
    sensitivity: dict

    @property
    def estimate(self) -> float:
        return self.partial_sums[self.max_size]

    @property
    def truncation_gap(self) -> float:
        return max(0.0, 1.0 - self.covered_mass)


_Z99 = 2.5758293035489004


def _series_pass(spec, seed, samples, ws, weights, mass_weights, pair_arrays):
    from ._kernels import wilson_batch_events

    pair_u, pair_w, offsets = pair_arrays
    hits, sz, sz2, sm, sm2 = wilson_batch_events(
        spec.width, spec.height, np.uint64(seed), samples,
        pair_u, pair_w, offsets,
        np.asarray(weights, dtype=np.float64),
        np.asarray(mass_weights, dtype=np.float64))
    mean_z = sz / samples
    var_z = max(0.0, sz2 / samples - mean_z**2) / samples
    mean_m = sm / samples
    var_m = max(0.0, sm2 / samples - mean_m**2) / samples
    return np.asarray(hits), mean_z, _Z99 * var_z**0.5, mean_m, _Z99 * var_m**0.5


def _event_pairs(ws, spec):
    """Flatten, per candidate W, the boundary pairs (outside cell, inside
    cell) whose parent pointer would break the no-entry event."""
    pair_u, pair_w, offsets = [], [], [0]
    for w in ws:
        for p in sorted(w):
            for q in lattice_neighbors(p):
                if q in w:
                    continue
                if q not in spec:
                    raise GraphError(f"candidate {sorted(w)!r} touches the box "
                                     "boundary; enlarge the box")
                pair_u.append((q[0] - spec.xmin) * spec.height + (q[1] - spec.ymin))
                pair_w.append((p[0] - spec.xmin) * spec.height + (p[1] - spec.ymin))
        offsets.append(len(pair_u))
    return (np.asarray(pair_u, dtype=np.int64),
            np.asarray(pair_w, dtype=np.int64),
            np.asarray(offsets, dtype=np.int64))


def _centered_spec(anchors, side: int) -> LatticeBoxSpec:
    xs = [p[0] for p in anchors]
    ys = [p[1] for p in anchors]
    cx = (min(xs) + max(xs)) // 2
    cy = (min(ys) + max(ys)) // 2
    half = side // 2
    return LatticeBoxSpec(cx - half, cx + side - half - 1,
                          cy - half, cy + side - half - 1)


def estimate_core_probability(w: Iterable[Point], seed: int,
                              samples: int = 10000, box: int | None = None,
                              sensitivity: bool = True):
    """Monte Carlo estimate of the limiting probability that no spanning
    tree edge points into W (frequency over wired-box samples).

    Returns a dict with the estimate, a 99% CI half-width, and a
    half-size-box rerun when ``sensitivity`` is set.
    """
    w = frozenset(tuple(p) for p in w)
    diam = max(max(abs(p[0] - q[0]), abs(p[1] - q[1])) for p in w for q in w) + 1
    side = box if box is not None else max(32, 8 * diam)
    spec = _centered_spec(w, side)
    pairs = _event_pairs([w], spec)
    hits, _, _, _, _ = _series_pass(spec, seed, samples, [w], [1.0], [1.0], pairs)
    p = hits[0] / samples
    out = {
        "w": sorted(w), "samples": samples, "box": side,
        "estimate": p, "ci99": _Z99 * (p * (1 - p) / samples) ** 0.5,
    }
    if sensitivity:
        half_side = max(16, side // 2)
        hspec = _centered_spec(w, half_side)
        hpairs = _event_pairs([w], hspec)
        hhits, _, _, _, _ = _series_pass(hspec, seed + 1, max(1000, samples // 4),
                                         [w], [1.0], [1.0], hpairs)
        out["sensitivity"] = {"box": half_side,
                              "estimate": hhits[0] / max(1000, samples // 4)}
    return out


def height_prob_series(anchors: Iterable[Point], xi: Mapping[Point, int],
                       max_size: int = 5, box: int = 64,
                       seed: int = 0, samples: int = 10000,
                       sensitivity: bool = True,
                       budget: EnumerationBudget | None = None) -> SeriesResult:
    """Series decomposition of the limiting probability that the heights
    on the anchor set equal xi.

    Every candidate core W (anchors inside, components meeting the
    anchors, |W| <= max_size) contributes

        P[no tree edge points into W] *
        #{recurrent shell states matching xi} / #spanning trees of the
        wiring of W.

    The tree-event probabilities are estimated from one batch of wired-box
    samples; the per-core factors are exact. Partial sums by core size are
    nondecreasing; the covered mass (same sum with the matching-count
    replaced by the full shell-recurrent count) reports how much
    probability the truncation has reached.
    """
    anchors = frozenset(tuple(p) for p in anchors)
    xi = {tuple(p): int(h) for p, h in xi.items()}
    if set(xi) != anchors:
        raise GraphError("xi must assign a height to every anchor")
    budget = budget or EnumerationBudget()

    ws = connected_candidates(anchors, max_size)
    terms = []
    weights, mass_weights = [], []
    for w in ws:
        shell = wired_shell_graph(w, anchors)
        if shell.is_connected:
            rec = enumerate_recurrent(shell, budget)
        else:
            rec = []
        match = sum(1 for h in rec if all(h[p] == xi[p] for p in anchors))
        trees = spanning_tree_count(z2_wire(w))
        weights.append(Fraction(match, trees))
        mass_weights.append(Fraction(len(rec), trees))
        terms.append((w, match, len(rec), trees))

    spec = _centered_spec(anchors, box)
    pairs = _event_pairs(ws, spec)
    hits, mean_z, ci_z, mean_m, ci_m = _series_pass(
        spec, seed, samples, ws,
        [float(x) for x in weights], [float(x) for x in mass_weights], pairs)

    out_terms = []
    for (w, match, nrec, trees), h, wt in zip(terms, hits, weights):
        p = h / samples
        out_terms.append(SeriesTerm(
            w, p, _Z99 * (p * (1 - p) / samples) ** 0.5,
            wt, nrec, match, trees))

    partial = {}
    run = 0.0
    for size in range(1, max_size + 1):
        run += sum(t.contribution for t in out_terms if len(t.w) == size)
        partial[size] = run

    sens = {}
    if sensitivity:
        half = max(16, box // 2)
        hspec = _centered_spec(anchors, half)
        hpairs = _event_pairs(ws, hspec)
        _, hz, hci, _, _ = _series_pass(
            hspec, seed + 1, max(1000, samples // 4), ws,
            [float(x) for x in weights], [float(x) for x in mass_weights], hpairs)
        sens = {"box": half, "estimate": hz, "ci": hci}

    return SeriesResult(anchors, xi, max_size, spec, samples, seed,
                        tuple(out_terms), partial, ci_z, mean_m, ci_m, sens)
