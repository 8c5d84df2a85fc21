import pytest

from sandpiles import build_graph, lattice_box

from helpers import graph_suite


@pytest.fixture(scope="session")
def theta_graph():
    """Two vertices joined by a double edge plus a two-edge path: the
    smallest multigraph whose current matrix has all entry types."""
    return build_graph(["a", "b", "c"], "c",
                       [("a", "b", 2), ("a", "c", 1), ("b", "c", 1)])


@pytest.fixture(scope="session")
def pair_graph():
    """Two adjacent cells of the square lattice, wired: one internal edge,
    three sink edges each."""
    return build_graph(["x", "y", "s"], "s",
                       [("x", "y", 1), ("x", "s", 3), ("y", "s", 3)])


@pytest.fixture(scope="session")
def box2():
    return lattice_box(2)


@pytest.fixture(scope="session")
def box3():
    return lattice_box(3)


@pytest.fixture(scope="session")
def suite():
    """Sixty random connected multigraphs, <= 5 vertices, <= 8 edges."""
    return graph_suite()


@pytest.fixture(scope="session")
def kernel40():
    from sandpiles import potential_kernel

    return potential_kernel(40)
