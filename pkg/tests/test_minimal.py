import itertools
import random
from fractions import Fraction

import pytest

from sandpiles import (GraphError, NotMinimalError, brute_force_marginal,
                       build_graph, dhar_recurrence_test, edge_set_E,
                       entry_points, enumerate_recurrent, first_phase_burns_rest,
                       hole_collapsed_graph, is_generalized_minimal, is_minimal,
                       lattice_box, maximal_extension, minimal_probability,
                       minimal_total_particles, wire)
from sandpiles.minimal import complement_holes
from sandpiles.oracles import iter_stable

from helpers import definitional_minimal, definitional_minimal_all_extensions


def test_entry_points_examples(pair_graph):
    g = lattice_box(3)
    assert entry_points(g, {(1, 1): 0}, [(1, 1)]) == {(1, 1)}
    assert entry_points(pair_graph, {"x": 1, "y": 0}, ["x", "y"]) == {"x"}
    assert entry_points(pair_graph, {"x": 0, "y": 0}, ["x", "y"]) == frozenset()


def test_single_zero_site_always_minimal(theta_graph, box2):
    for g in (theta_graph, box2):
        v = g.sites[0]
        assert is_minimal(g, {v: 0}, [v]).is_minimal


def test_pair_graph_verdicts(pair_graph):
    w = ["x", "y"]
    assert is_minimal(pair_graph, {"x": 1, "y": 0}, w).is_minimal
    assert is_minimal(pair_graph, {"x": 0, "y": 1}, w).is_minimal
    assert is_minimal(pair_graph, {"x": 0, "y": 0}, w).verdict == "not-recurrent"
    wit = is_minimal(pair_graph, {"x": 1, "y": 1}, w)
    assert wit.verdict == "not-minimal"


def test_pair_graph_brute_force_all_16(pair_graph):
    w = frozenset(["x", "y"])
    for hx, hy in itertools.product(range(4), repeat=2):
        xi = {"x": hx, "y": hy}
        assert is_minimal(pair_graph, xi, w).verdict == \
            definitional_minimal(pair_graph, xi, w)


def test_adjacent_entry_points_fail_condition_i(pair_graph):
    wit = is_minimal(pair_graph, {"x": 1, "y": 1}, ["x", "y"])
    assert wit.failed_condition == "i"


def test_peeling_partitions_w(box2):
    w = [(0, 0), (1, 1)]
    xi = {(0, 0): 0, (1, 1): 0}
    wit = is_minimal(box2, xi, w)
    assert wit.is_minimal
    assert frozenset().union(*wit.peeling) == frozenset(w)


def test_definitional_reductions_agree(suite):
    # the maximal-extension reduction equals the all-extensions definition
    rng = random.Random(4)
    for g in suite[:6]:
        sites = list(g.sites)
        w = frozenset(rng.sample(sites, min(2, len(sites))))
        if complement_holes(g, w):
            continue
        for combo in itertools.product(*(range(g.degree(v)) for v in sorted(w))):
            xi = dict(zip(sorted(w), combo))
            assert definitional_minimal(g, xi, w) == \
                definitional_minimal_all_extensions(g, xi, w)


def test_peel_matches_definition_across_suite(suite):
    checked = 0
    for g in suite:
        sites = list(g.sites)
        for r in (1, 2):
            if len(sites) < r:
                continue
            for w in itertools.combinations(sites, r):
                w = frozenset(w)
                if complement_holes(g, w):
                    continue
                for combo in itertools.product(
                        *(range(g.degree(v)) for v in sorted(w))):
                    xi = dict(zip(sorted(w), combo))
                    assert is_minimal(g, xi, w).verdict == \
                        definitional_minimal(g, xi, w)
                    checked += 1
        if checked > 4000:
            break
    assert checked > 1000


def test_minimal_total_particles_examples(pair_graph):
    g1 = lattice_box(3)
    assert minimal_total_particles(g1, [(1, 1)]) == 0
    assert minimal_total_particles(pair_graph, ["x", "y"]) == 1
    box = lattice_box(4)
    w = [(1, 1), (1, 2), (2, 1), (2, 2)]
    # number of internal edges of the 2x2 block
    assert minimal_total_particles(box, w) == 4


def test_every_minimal_has_shared_total(suite):
    for g in suite[:15]:
        sites = list(g.sites)
        for w in itertools.combinations(sites, min(2, len(sites))):
            w = frozenset(w)
            if complement_holes(g, w):
                continue
            expect = minimal_total_particles(g, w)
            for combo in itertools.product(
                    *(range(g.degree(v)) for v in sorted(w))):
                xi = dict(zip(sorted(w), combo))
                if is_minimal(g, xi, w).is_minimal:
                    assert sum(xi.values()) == expect


def test_minimal_requires_connected_complement(box3):
    ring = [p for p in box3.sites if p != (1, 1)]
    with pytest.raises(GraphError):
        is_minimal(box3, {p: 0 for p in ring}, ring)


def test_generalized_matches_plain_when_no_holes(pair_graph):
    w = ["x", "y"]
    for hx, hy in itertools.product(range(4), repeat=2):
        xi = {"x": hx, "y": hy}
        wit, decomp = is_generalized_minimal(pair_graph, xi, w)
        assert decomp.count == 0
        assert wit.verdict == is_minimal(pair_graph, xi, w).verdict


def test_ring_hole_decomposition(box3):
    ring = frozenset(p for p in box3.sites if p != (1, 1))
    holes = complement_holes(box3, ring)
    assert holes == (frozenset({(1, 1)}),)
    # one known minimal configuration: corners 0, mids at internal degree
    xi = {(0, 0): 0, (0, 2): 0, (2, 0): 0, (2, 2): 0,
          (0, 1): 2, (1, 0): 2, (1, 2): 2, (2, 1): 3}
    assert sum(xi.values()) == minimal_total_particles(box3, ring)
    wit, decomp = is_generalized_minimal(box3, xi, ring)
    assert wit.verdict == definitional_minimal(box3, xi, ring)
    if wit.is_minimal:
        assert decomp.multiplicities.count(1) == 1


def test_ring_hole_exhaustive_at_total(box3):
    ring = sorted(p for p in box3.sites if p != (1, 1))
    total = minimal_total_particles(box3, ring)
    n_min = 0
    for combo in itertools.product(range(4), repeat=8):
        if sum(combo) != total:
            continue
        xi = dict(zip(ring, combo))
        wit, decomp = is_generalized_minimal(box3, xi, ring)
        assert wit.verdict == definitional_minimal(box3, xi, frozenset(ring))
        if wit.is_minimal:
            n_min += 1
            assert all(r == 1 for r in decomp.multiplicities)
            assert all(e is not None for e in decomp.entries)
    assert n_min == 576


def test_hole_heights_are_forced(box3):
    ring = sorted(p for p in box3.sites if p != (1, 1))
    rng = random.Random(12)
    found = 0
    while found < 12:
        combo = [0] * 8
        left = minimal_total_particles(box3, ring)
        idx = list(range(8))
        rng.shuffle(idx)
        for i in idx[:-1]:
            c = rng.randint(0, min(3, left))
            combo[i] = c
            left -= c
        if not 0 <= left <= 3:
            continue
        combo[idx[-1]] = left
        xi = dict(zip(ring, combo))
        wit, _ = is_generalized_minimal(box3, xi, ring)
        if not wit.is_minimal:
            continue
        found += 1
        exts = [c for c in range(4)
                if dhar_recurrence_test(box3, {**xi, (1, 1): c})]
        assert exts == [3]


def test_hole_collapsed_graph_structure(box3):
    ring = sorted(p for p in box3.sites if p != (1, 1))
    xi = {(0, 0): 0, (0, 2): 0, (2, 0): 0, (2, 2): 0,
          (0, 1): 2, (1, 0): 2, (1, 2): 2, (2, 1): 3}
    wit, decomp = is_generalized_minimal(box3, xi, ring)
    assert wit.is_minimal
    h = hole_collapsed_graph(box3, ring, decomp)
    assert set(h.sites) == set(ring)
    y = decomp.entries[0]
    # the hole's four edges collapse onto y, one becoming a loop
    assert h.degree(y) == box3.degree(y) + 3 - 1
    assert len(h.edges) == len(box3.edges) - 1


def test_hole_collapse_requires_single_entry(box3):
    ring = sorted(p for p in box3.sites if p != (1, 1))
    from sandpiles import HoleDecomposition

    bad = HoleDecomposition((frozenset({(1, 1)}),), ((0, 1),), (2,))
    with pytest.raises(NotMinimalError):
        hole_collapsed_graph(box3, ring, bad)


def test_edge_set_examples(pair_graph):
    g1 = lattice_box(3)
    e = edge_set_E(g1, {(1, 1): 0}, [(1, 1)])
    assert len(e) == 3  # all but the tree's single parent edge
    e2 = edge_set_E(pair_graph, {"x": 1, "y": 0}, ["x", "y"])
    assert len(e2) == 5  # 7 wired edges minus a 2-edge spanning tree


def test_edge_set_covers_w_touching_edges(pair_graph):
    w = ["x", "y"]
    e = edge_set_E(pair_graph, {"x": 1, "y": 0}, w)
    gw = wire(pair_graph, w)
    touching = {en.key() for en in gw.edges}
    tree_part = touching - {pair_graph.edges[i].key() for i in e}
    assert len(tree_part) == 2  # a spanning tree of the wired pair
    assert all(i in range(len(pair_graph.edges)) for i in e)


def test_edge_set_rejects_non_minimal(pair_graph):
    with pytest.raises(NotMinimalError):
        edge_set_E(pair_graph, {"x": 1, "y": 1}, ["x", "y"])
    with pytest.raises(NotMinimalError):
        minimal_probability(pair_graph, {"x": 0, "y": 0}, ["x", "y"])


def test_minimal_probability_exact_vs_oracle(pair_graph, theta_graph):
    assert minimal_probability(pair_graph, {"x": 1, "y": 0}, ["x", "y"]) \
        == brute_force_marginal(pair_graph, ["x", "y"], {"x": 1, "y": 0})
    v = theta_graph.sites[0]
    for hv in range(theta_graph.degree(v)):
        xi = {v: hv}
        if is_minimal(theta_graph, xi, [v]).is_minimal:
            assert minimal_probability(theta_graph, xi, [v]) \
                == brute_force_marginal(theta_graph, [v], xi)


def test_theta_double_edge_absence(theta_graph):
    # both copies of the double edge absent <-> the two-path tree: 1 of 5
    from sandpiles import prob_edges_absent, transfer_current

    e1, e2 = (e.id for e in theta_graph.edges_between("a", "b"))
    y = transfer_current(theta_graph)
    k = y.to_absence_matrix()
    assert prob_edges_absent(k, [y.index_of(e1), y.index_of(e2)]) \
        == Fraction(1, 5)


def test_minimal_implies_first_phase_covers(suite):
    # every recurrent extension of a minimal configuration burns the
    # complement of W before touching W
    for g in suite[:8]:
        rec = enumerate_recurrent(g)
        sites = list(g.sites)
        for w in itertools.combinations(sites, min(2, len(sites))):
            w = frozenset(w)
            if complement_holes(g, w):
                continue
            for combo in itertools.product(
                    *(range(g.degree(v)) for v in sorted(w))):
                xi = dict(zip(sorted(w), combo))
                if not is_minimal(g, xi, w).is_minimal:
                    continue
                for h in rec:
                    if all(h[v] == xi[v] for v in w):
                        assert first_phase_burns_rest(g, h, w)


def test_minimal_probability_independent_of_tree_choice(pair_graph):
    # any spanning tree of the wired graph gives the same determinant
    from sandpiles import prob_edges_absent, transfer_current
    from sandpiles.oracles import enumerate_spanning_trees

    w = ["x", "y"]
    xi = {"x": 1, "y": 0}
    gw = wire(pair_graph, w)
    by_key = pair_graph.edge_by_key()
    y = transfer_current(pair_graph)
    k = y.to_absence_matrix()
    expect = minimal_probability(pair_graph, xi, w)
    for t in enumerate_spanning_trees(gw):
        keys = {gw.edges[i].key() for i in t}
        ids = [by_key[e.key()].id for e in gw.edges if e.key() not in keys]
        got = prob_edges_absent(k, [y.index_of(i) for i in ids])
        assert got == expect
