import math
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopsoup import (Domain, build_graph, canonicalize_oriented,
                      canonicalize_unoriented, complete_graph, cycle_graph,
                      enumerate_loops, pair_reversals, regularize_degree,
                      rho_mass, tail_bound, unoriented_view)
from loopsoup.loops import (BudgetExceededError, InvalidLoopError,
                            loop_vertices, minimal_rotation, repetition_count)


def frac_matmul(A, B):
    n = len(A)
    return [[sum(A[i][k] * B[k][j] for k in range(n)) for j in range(n)]
            for i in range(n)]


def test_rho_examples(self_edge_domain):
    g, dom = self_edge_domain
    assert rho_mass(g, (0,)) == Fraction(1, 2)
    g2 = build_graph(2, [(0, 0, 1), (1, 1, 0), (2, 0, 0), (3, 1, 1)])
    assert rho_mass(g2, (0, 1)) == Fraction(1, 8)       # (1/4) / 2
    g1 = build_graph(2, [(0, 0, 1), (1, 1, 0)])         # g = 1
    assert rho_mass(g1, (0, 1)) == Fraction(1, 2)


def test_rho_invalid_loop():
    g = build_graph(3, [(0, 0, 1), (1, 1, 2), (2, 2, 0)])
    with pytest.raises(InvalidLoopError):
        rho_mass(g, (0, 0))
    with pytest.raises(InvalidLoopError):
        rho_mass(g, ())


def test_canonicalize_double_cover():
    g = build_graph(2, [(0, 0, 1), (1, 1, 0), (2, 0, 0), (3, 1, 1)])
    cls = canonicalize_oriented(g, (0, 1, 0, 1))
    assert cls.J == 2 and cls.n == 4
    assert cls.mass == Fraction(1, 2 ** 4 * 2)


def test_canonicalize_rotations_collapse():
    g = build_graph(3, [(0, 0, 1), (1, 1, 2), (2, 2, 0)])
    keys = {canonicalize_oriented(g, rot).key
            for rot in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]}
    assert len(keys) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.integers(0, 11), st.integers(1, 3))
def test_rotation_invariance_property(n, shift, repeat):
    # an n-cycle repeated `repeat` times, rotated anywhere, canonicalizes alike
    g = build_graph(n, [(i, i, (i + 1) % n) for i in range(n)])
    base = tuple(range(n)) * repeat
    rot = base[shift % len(base):] + base[:shift % len(base)]
    a = canonicalize_oriented(g, base)
    b = canonicalize_oriented(g, rot)
    assert a == b
    assert a.J == repeat


def test_rho_mu_consistency_k3(triangle_catalogs, triangle_domain, k5):
    # sum of rho over the rooted representatives of a class equals mu(L),
    # and the representative count is n / J
    g, inv, ug = k5
    cat, _ = triangle_catalogs
    for cls in cat.classes:
        if cls.n > 6:
            continue
        rots = {tuple(cls.key[i:] + cls.key[:i]) for i in range(cls.n)}
        assert len(rots) == cls.n // cls.J
        total = sum(rho_mass(g, r) for r in rots)
        assert total == cls.mass


def test_canonicalize_unoriented_cases(k5):
    g, inv, ug = k5
    # back-and-forth along one edge: equal to its own reversal
    e12 = next(e.id for e in g.edges if (e.tail, e.head) == (1, 2))
    cls = canonicalize_unoriented(g, (e12, inv(e12)), inv)
    assert cls.J_tilde == 2
    assert cls.mass == Fraction(1, 4 ** 2 * 2)
    # directed triangle: reversal is a different oriented class
    e23 = next(e.id for e in g.edges if (e.tail, e.head) == (2, 3))
    e31 = next(e.id for e in g.edges if (e.tail, e.head) == (3, 1))
    tri = canonicalize_unoriented(g, (e12, e23, e31), inv)
    assert tri.J_tilde == 1
    assert len(tri.oriented_keys) == 2
    ori = canonicalize_oriented(g, (e12, e23, e31))
    assert tri.mass == ori.mass


def test_unoriented_self_edge_loop():
    g = build_graph(2, [(0, 0, 0), (1, 0, 1), (2, 1, 0), (3, 1, 1)])
    from loopsoup import Involution
    inv = Involution(g, {0: 0, 1: 2, 2: 1, 3: 3})
    cls = canonicalize_unoriented(g, (0,), inv)
    assert cls.J_tilde == 2


def test_reversal_invariance(k5, triangle_catalogs):
    g, inv, ug = k5
    cat, _ = triangle_catalogs
    for cls in list(cat.classes)[:80]:
        rev = inv.reverse_path(cls.key)
        assert canonicalize_unoriented(g, cls.key, inv) == \
               canonicalize_unoriented(g, rev, inv)


def test_p_equals_p_reversed(k5, triangle_catalogs):
    g, inv, ug = k5
    cat, _ = triangle_catalogs
    for cls in list(cat.classes)[:50]:
        assert len(inv.reverse_path(cls.key)) == cls.n


def test_trace_identity_k3_exact():
    # K3 regularized to g = 2 (already 2-regular), all three vertices
    g = complete_graph(3)
    dom = Domain(g, [0, 1, 2], allow_recurrent=True)
    P = dom.transition_matrix_exact()
    for L in (4, 6, 8):
        cat = enumerate_loops(dom, L)
        tot = Fraction(0)
        M = [row[:] for row in P]
        for n in range(1, L + 1):
            tot += Fraction(sum(M[i][i] for i in range(3)), n)
            M = frac_matmul(M, P)
        assert cat.total_mass == tot


def test_nu_is_half_mu(triangle_catalogs):
    cat, ucat = triangle_catalogs
    assert 2 * ucat.total_mass == cat.total_mass
    # per-class projection identity: nu-mass = sum of mu/2 over preimages
    for ucls in ucat.classes:
        mu_sum = sum(cat.by_key[k].mass for k in ucls.oriented_keys)
        assert ucls.mass == mu_sum / 2


def test_k_fold_self_loops(self_edge_domain):
    g, dom = self_edge_domain
    cat = enumerate_loops(dom, 6)
    masses = {c.n: c.mass for c in cat.classes}
    for k in range(1, 7):
        assert masses[k] == Fraction(1, 2 ** k * k)


def test_empty_catalog_below_girth(k5):
    g, inv, ug = k5
    dom = Domain(g, [1, 2, 3])
    cat = enumerate_loops(dom, 1)    # girth 2 without self-edges
    assert len(cat) == 0


def test_budget_exceeded(triangle_domain):
    with pytest.raises(BudgetExceededError):
        enumerate_loops(triangle_domain, 8, budget=3)


def test_tail_bound_examples(self_edge_domain):
    g, dom = self_edge_domain
    b = tail_bound(dom, 10)
    assert b <= 2 ** -10
    assert tail_bound(dom, 20) < tail_bound(dom, 10)
    # bound dominates the exact omitted mass (enumerate to twice the cap)
    cat10 = enumerate_loops(dom, 10)
    cat20 = enumerate_loops(dom, 20)
    omitted = float(cat20.total_mass - cat10.total_mass)
    assert omitted <= b


def test_tail_bound_monotone(triangle_domain):
    bounds = [tail_bound(triangle_domain, L) for L in (4, 8, 12, 16)]
    assert all(a > b for a, b in zip(bounds, bounds[1:]))


def test_tail_bound_dominates_omitted(triangle_domain):
    cat8 = enumerate_loops(triangle_domain, 8)
    cat16 = enumerate_loops(triangle_domain, 16)
    omitted = float(cat16.total_mass - cat8.total_mass)
    assert omitted <= tail_bound(triangle_domain, 8)


def test_catalog_export_jsonl(tmp_path, triangle_catalogs):
    import json
    cat, _ = triangle_catalogs
    p = tmp_path / "catalog.jsonl"
    cat.export_jsonl(p)
    lines = p.read_text().strip().split("\n")
    assert len(lines) == len(cat)
    row = json.loads(lines[0])
    assert set(row) == {"edges", "n", "J", "mass", "mass_float"}
    assert Fraction(row["mass"]) == cat.classes[0].mass


def test_minimal_rotation_and_period():
    assert minimal_rotation((3, 1, 2)) == (1, 2, 3)
    assert repetition_count((1, 2, 1, 2)) == 2
    assert repetition_count((1, 2, 3)) == 1
    assert repetition_count((7,)) == 1
