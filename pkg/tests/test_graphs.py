import pytest

from sandpiles import (GraphError, LatticeBoxSpec, Multigraph, build_graph,
                       laplacian, lattice_box, reduced_laplacian, wire)
from sandpiles.currents import spanning_tree_count


def test_smallest_sink_graph():
    g = build_graph(["v", "s"], "s", [("v", "s", 1)])
    assert g.degree("v") == 1
    assert g.sites == ("v",)


def test_theta_graph_has_four_edge_ids(theta_graph):
    assert len(theta_graph.edges) == 4
    assert theta_graph.multiplicity("a", "b") == 2
    e1, e2 = theta_graph.edges_between("a", "b")
    assert (e1.copy, e2.copy) == (0, 1)


def test_undeclared_vertex_rejected():
    with pytest.raises(GraphError):
        build_graph(["a", "s"], "s", [("a", "q", 1)])


def test_loop_rejected():
    with pytest.raises(GraphError):
        build_graph(["a", "s"], "s", [("a", "a", 1), ("a", "s", 1)])


def test_disconnected_rejected():
    with pytest.raises(GraphError):
        build_graph(["a", "b", "c", "s"], "s", [("a", "s", 1), ("b", "c", 1)])


def test_nonpositive_multiplicity_rejected():
    with pytest.raises(GraphError):
        build_graph(["a", "s"], "s", [("a", "s", 0)])


def test_canonical_orientation_tail_before_head():
    g = build_graph(["b", "a", "s"], "s", [("b", "a", 1), ("s", "a", 1)])
    e = g.edges_between("a", "b")[0]
    assert (e.tail, e.head) == ("a", "b")
    e2 = g.edges_between("a", "s")[0]
    assert (e2.tail, e2.head) == ("a", "s")  # sink is always last


def test_wire_single_lattice_cell():
    g = lattice_box(3)
    w = wire(g, [(1, 1)])
    assert set(w.sites) == {(1, 1)}
    assert w.multiplicity((1, 1), "s") == 4


def test_wire_theta_graph_on_double_edge(theta_graph):
    w = wire(theta_graph, ["a", "b"])
    assert w.multiplicity("a", "b") == 2
    assert w.multiplicity("a", "c") == 1
    assert w.multiplicity("b", "c") == 1
    assert set(w.vertices) == {"a", "b", "c"}  # c is the sink here


def test_wire_requires_nonempty_keep(theta_graph):
    with pytest.raises(GraphError):
        wire(theta_graph, [])
    with pytest.raises(GraphError):
        wire(theta_graph, ["a", "c"])  # contains the sink


def test_wire_idempotent_on_nested_sets():
    g = lattice_box(3)
    w1 = [(0, 0), (0, 1), (1, 0), (1, 1)]
    w2 = [(0, 0), (1, 0)]
    assert wire(wire(g, w1), w2) == wire(g, w2)


def test_wire_preserves_total_edge_count_degrees():
    g = lattice_box(3)
    w = wire(g, [(0, 0), (1, 1)])
    # every original edge at a kept vertex survives
    for v in w.sites:
        assert w.degree(v) == 4
    assert sum(w.degree(v) for v in w.vertices) == 2 * len(w.edges)


def test_reduced_laplacian_single_vertex():
    g = build_graph(["v", "s"], "s", [("v", "s", 4)])
    m, order = reduced_laplacian(g)
    assert m == [[4]] and order == ("v",)


def test_laplacian_row_sums_give_sink_edges(theta_graph):
    m, order = laplacian(theta_graph)
    for i, v in enumerate(order):
        assert sum(m[i]) == 0  # full Laplacian rows sum to zero
    r, sites = reduced_laplacian(theta_graph)
    for i, v in enumerate(sites):
        assert sum(r[i]) == theta_graph.multiplicity(v, theta_graph.sink)


def test_reduced_determinants(theta_graph, box2):
    assert spanning_tree_count(theta_graph) == 5
    assert spanning_tree_count(box2) == 192
    m, _ = reduced_laplacian(box2)
    assert [row[i] for i, row in enumerate(m)] == [4] * 4
    off = sorted(x for row in m for x in row if x < 0)
    assert off == [-1] * 8


def test_lattice_box_degrees_and_labels():
    g = lattice_box(1)
    assert g.multiplicity((0, 0), "s") == 4
    g2 = lattice_box(2)
    internal = [e for e in g2.edges if e.head != "s"]
    assert len(internal) == 4
    for p in g2.sites:
        assert g2.degree(p) == 4
        assert g2.multiplicity(p, "s") == 2
    labels = [e.label for e in g2.edges]
    assert len(set(labels)) == len(labels)


def test_lattice_box_handshake():
    for n in (1, 2, 4):
        g = lattice_box(n)
        assert len(g.sites) == n * n
        assert sum(g.degree(v) for v in g.sites) == 4 * n * n
        assert sum(g.degree(v) for v in g.vertices) == 2 * len(g.edges)


def test_empty_rectangle_rejected():
    with pytest.raises(GraphError):
        LatticeBoxSpec(0, -1, 0, 0)


def test_graph_equality_includes_multiplicity():
    a = build_graph(["x", "s"], "s", [("x", "s", 2)])
    b = build_graph(["x", "s"], "s", [("x", "s", 2)])
    c = build_graph(["x", "s"], "s", [("x", "s", 3)])
    assert a == b
    assert a != c


def test_disconnected_allowed_when_requested():
    g = Multigraph(["a", "b", "s"], "s", [("a", "b")], require_connected=False)
    assert not g.is_connected
