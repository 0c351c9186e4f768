import pytest
from fractions import Fraction

from loopsoup import (Domain, complete_graph, cycle_graph, enumerate_loops,
                      pair_reversals, unoriented_view)


@pytest.fixture(scope="session")
def k5():
    """Complete graph on 5 vertices (g = 4) with its reversal involution."""
    g = complete_graph(5)
    inv = pair_reversals(g)
    return g, inv, unoriented_view(g, inv)


@pytest.fixture(scope="session")
def triangle_domain(k5):
    """Vertices {1,2,3} of K5: a triangle where every vertex leaks at rate 1/2."""
    g, inv, ug = k5
    return Domain(g, [1, 2, 3])


@pytest.fixture(scope="session")
def triangle_catalogs(k5, triangle_domain):
    g, inv, ug = k5
    cat = enumerate_loops(triangle_domain, 8, "oriented", unoriented=ug)
    ucat = cat.counterpart()
    return cat, ucat


@pytest.fixture(scope="session")
def k12():
    g = complete_graph(12)
    inv = pair_reversals(g)
    return g, inv, unoriented_view(g, inv)


@pytest.fixture(scope="session")
def sharp_triangle(k12):
    """Vertices {1,2,3} of K12 (g = 11): heavy leakage, small remainders."""
    g, inv, ug = k12
    dom = Domain(g, [1, 2, 3])
    cat = enumerate_loops(dom, 6, "oriented", unoriented=ug)
    return dom, cat, cat.counterpart()


@pytest.fixture(scope="session")
def self_edge_domain():
    """One vertex with a self-edge and an exit edge (g = 2): G(x,x) = 2."""
    from loopsoup import build_graph
    g = build_graph(2, [(0, 0, 0), (1, 0, 1), (2, 1, 1), (3, 1, 1)])
    return g, Domain(g, [0])
