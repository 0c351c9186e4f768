import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats as sps

from loopsoup import (Bridge, Domain, attach_holding_times, bridge_probability,
                      build_graph, complete_graph, cycle_graph,
                      enumerate_bridges, green_function, pair_reversals,
                      sample_bridge, sample_unordered_bridge, sample_z_bridge)
from loopsoup.bridges import (BridgeError, all_pairings,
                              bridge_probability_exact, pairing_weights,
                              permutation_weights)
from loopsoup.rng import stream


def test_zero_length_bridge_probability():
    g = build_graph(2, [(0, 0, 1), (1, 0, 1), (2, 1, 1), (3, 1, 1)])
    dom = Domain(g, [0])
    assert bridge_probability(dom, Bridge(0, 0, ())) == 1.0


def test_self_edge_bridge_law(self_edge_domain):
    g, dom = self_edge_domain
    green = green_function(dom, exact=True)
    total = Fraction(0)
    for n in range(12):
        b = Bridge(0, 0, (0,) * n)
        p = bridge_probability_exact(dom, b, green)
        assert p == Fraction(1, 2 ** n) / 2
        total += p
    assert 1 - total == Fraction(1, 2 ** 12)   # geometric remainder


def test_bridge_normalization_with_tail(triangle_domain):
    green = green_function(triangle_domain, exact=True)
    bridges = enumerate_bridges(triangle_domain, 1, 2, 10)
    total = sum(Fraction(1, triangle_domain.g ** b.n) for b in bridges)
    # remainder relative to the exact Green value, bounded by the Green tail
    rem = green.exact(1, 2) - total
    assert 0 <= rem
    lam = triangle_domain.spectral_radius()
    assert float(rem) <= triangle_domain.size * lam ** 11 / (1 - lam)
    assert sum(bridge_probability_exact(triangle_domain, b, green)
               for b in bridges) <= 1


def test_bridge_leaving_domain_rejected(k5, triangle_domain):
    g, inv, ug = k5
    e10 = next(e.id for e in g.edges if (e.tail, e.head) == (1, 0))
    with pytest.raises(BridgeError):
        bridge_probability(triangle_domain, Bridge(1, 0, (e10,)))


def test_sample_bridge_degenerate():
    g = build_graph(2, [(0, 0, 1), (1, 0, 1), (2, 1, 1), (3, 1, 1)])
    dom = Domain(g, [0])
    rng = stream(1, "deg")
    for _ in range(20):
        assert sample_bridge(dom, 0, 0, rng).n == 0


def test_sample_bridge_geometric_law(self_edge_domain):
    g, dom = self_edge_domain
    rng = stream(2, "geo")
    n = 100000
    lens = Counter(sample_bridge(dom, 0, 0, rng).n for _ in range(n))
    from loopsoup.stats import chi2_gof
    probs = {k: 0.5 ** k / 2 for k in range(30)}
    _, dof, p = chi2_gof(lens, probs, n)
    assert p > 1e-3


def test_sample_bridge_matches_enumeration(k5):
    g, inv, ug = k5
    dom = Domain(g, [1, 2, 3])
    green = green_function(dom, exact=True)
    bridges = enumerate_bridges(dom, 1, 3, 6)
    probs = {b.path: float(bridge_probability_exact(dom, b, green))
             for b in bridges}
    covered = sum(probs.values())
    rng = stream(3, "tv")
    n = 100000
    emp = Counter(b.path for b in (sample_bridge(dom, 1, 3, rng)
                                   for _ in range(n)) if b.n <= 6)
    m = sum(emp.values())
    # distributions conditioned on length <= 6
    tv = 0.5 * sum(abs(emp.get(k, 0) / m - p / covered)
                   for k in set(emp) | set(probs)
                   for p in [probs.get(k, 0.0)])
    assert tv < 0.01


def test_bridge_reversal_symmetry(k5):
    """The reversed x->y bridge law is the y->x bridge law."""
    g, inv, ug = k5
    dom = Domain(g, [1, 2, 3])
    green = green_function(dom, exact=True)
    fwd = {b.path: bridge_probability_exact(dom, b, green)
           for b in enumerate_bridges(dom, 1, 2, 7)}
    bwd = {b.path: bridge_probability_exact(dom, b, green)
           for b in enumerate_bridges(dom, 2, 1, 7)}
    for path, p in fwd.items():
        assert bwd[inv.reverse_path(path)] == p


def test_unordered_reduces_to_single(k5):
    g, inv, ug = k5
    dom = Domain(g, [1, 2, 3])
    rng = stream(4, "n1")
    fam = sample_unordered_bridge(dom, [1], [2], rng)
    assert fam.permutation == (0,)
    assert fam.bridges[0].x == 1 and fam.bridges[0].y == 2


def test_unordered_equal_targets_double_count(k5):
    """With y_1 = y_2 both permutations carry equal weight: the same bridge
    collection is counted once per permutation."""
    g, inv, ug = k5
    dom = Domain(g, [1, 2, 3])
    green = green_function(dom, exact=True)
    w = permutation_weights(green, (1, 2), (3, 3), exact=True)
    assert w[(0, 1)] == w[(1, 0)] > 0
    rng = stream(5, "perm")
    n = 40000
    perms = Counter(sample_unordered_bridge(dom, [1, 2], [3, 3], rng).permutation
                    for _ in range(n))
    assert abs(perms[(0, 1)] - n / 2) < 3 * math.sqrt(n * 0.25)


def test_unordered_permutation_frequencies(k12):
    """Permutation frequencies follow the Green-product ratio on an
    asymmetric domain."""
    g, inv, ug = k12
    dom = Domain(g, [1, 2, 3])
    green = green_function(dom)
    X, Y = (1, 2), (1, 3)
    w = permutation_weights(green, X, Y)
    total = sum(w.values())
    rng = stream(6, "freq")
    n = 100000
    emp = Counter(sample_unordered_bridge(dom, X, Y, rng).permutation
                  for _ in range(n))
    for s, weight in w.items():
        p = weight / total
        assert abs(emp[s] - n * p) < 3 * math.sqrt(n * p * (1 - p))


def test_z_bridge_single_pair(k5):
    g, inv, ug = k5
    dom = Domain(g, [1, 2, 3])
    rng = stream(7, "z1")
    fam = sample_z_bridge(dom, (1, 2), rng)
    assert fam.pairing == ((0, 1),)


def test_z_bridge_degenerate_weights():
    """When the cross pairings are unreachable only one pairing survives."""
    # two disjoint 2-cycles inside the domain: 1-2 and 3-4, no other edges
    g = build_graph(5, [(0, 1, 2), (1, 2, 1), (2, 3, 4), (3, 4, 3),
                        (4, 1, 0), (5, 2, 0), (6, 3, 0), (7, 4, 0),
                        (8, 0, 0), (9, 0, 0)])
    dom = Domain(g, [1, 2, 3, 4])
    rng = stream(8, "zdeg")
    for _ in range(30):
        fam = sample_z_bridge(dom, (1, 2, 3, 4), rng)
        assert fam.pairing == ((0, 1), (2, 3))


def test_z_bridge_pairing_frequencies():
    """Pairing frequencies follow the three Green-product weights on a
    4-cycle domain."""
    g = cycle_graph(6)
    dom = Domain(g, [1, 2, 3, 4])
    green = green_function(dom)
    Z = (1, 2, 3, 4)
    w = pairing_weights(green, Z)
    total = sum(w.values())
    rng = stream(9, "zfreq")
    n = 100000
    emp = Counter(sample_z_bridge(dom, Z, rng).pairing for _ in range(n))
    for t, weight in w.items():
        p = weight / total
        assert abs(emp[t] - n * p) < 3 * math.sqrt(n * p * (1 - p)) + 3
    assert len(all_pairings(4)) == 3


def test_g_power_K_characterization(k12):
    """Sampled unordered-family configurations occur with frequency
    proportional to g^{-K} (configurations enumerated to length 4)."""
    g, inv, ug = k12
    dom = Domain(g, [1, 2, 3])
    rng = stream(10, "gk")
    n = 150000
    X, Y = (1, 2), (2, 1)
    emp = Counter()
    for _ in range(n):
        fam = sample_unordered_bridge(dom, X, Y, rng)
        if fam.total_length <= 4:
            emp[(fam.permutation, tuple(b.path for b in fam.bridges))] += 1
    configs = sorted(emp, key=lambda k: -emp[k])[:12]
    # pairwise frequency ratios match g^{-(K1 - K2)}
    ref = configs[0]
    K_ref = sum(len(p) for p in ref[1])
    for cfg in configs[1:]:
        K = sum(len(p) for p in cfg[1])
        r = float(dom.g) ** (K_ref - K)
        c1, c0 = emp[cfg], emp[ref]
        se = math.sqrt(c1 + r * r * c0)
        assert abs(c1 - r * c0) <= 3 * se


def test_attach_holding_times(k5):
    g, inv, ug = k5
    dom = Domain(g, [1, 2, 3])
    rng = stream(11, "times")
    fam = sample_unordered_bridge(dom, [1, 2], [2, 3], rng)
    timed = attach_holding_times(fam, rng, domain=dom)
    for b, ts in zip(fam.bridges, timed.interior_times):
        assert len(ts) == max(0, b.n - 1)
    # n = 5 bridges carry 4 iid interior Exp(1/g) durations
    all_times = []
    for _ in range(4000):
        f = sample_unordered_bridge(dom, [1], [2], rng)
        t = attach_holding_times(f, rng, domain=dom)
        if f.bridges[0].n == 5:
            assert len(t.interior_times[0]) == 4
            all_times.extend(t.interior_times[0])
        if f.bridges[0].n <= 1:
            assert t.interior_times[0] == ()
    if len(all_times) > 200:
        m = float(np.mean(all_times))
        se = float(np.std(all_times)) / math.sqrt(len(all_times))
        assert abs(m - 1 / dom.g) < 3 * se


def test_budget_errors(k5):
    g, inv, ug = k5
    dom = Domain(g, [1, 2, 3])
    green = green_function(dom)
    with pytest.raises(BridgeError):
        permutation_weights(green, list(range(9)) * 1, list(range(9)))
    with pytest.raises(BridgeError):
        all_pairings(14)
    with pytest.raises(BridgeError):
        all_pairings(3)


def test_unreachable_target():
    g = build_graph(4, [(0, 0, 1), (1, 0, 1), (2, 1, 2), (3, 1, 2),
                        (4, 2, 3), (5, 2, 3), (6, 3, 3), (7, 3, 3)])
    dom = Domain(g, [0, 1])
    rng = stream(12, "unreach")
    with pytest.raises(BridgeError):
        sample_bridge(dom, 1, 0, rng)   # edges only run forward
