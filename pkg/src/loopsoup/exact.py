"""Exact (rational-arithmetic) oracles for the conditional-law verifications.

Two independent computations are compared everywhere:

* the conditional side: enumerate every multiset of catalog loop classes
  whose cut (excursions, crossings, or removed-edge jumps) matches the
  conditioning event, weighted by its exact Poisson probability
  prod (t m(L))^u / u!, and push forward onto the hookup;

* the bridge-measure side: enumerate permutations (or pairings) and bridge
  paths with their closed-form probabilities g^{-K} / Z, Z the Green-product
  normalizer, and push forward through reassembly onto the same keys.

Occupation-field laws are computed without sampling from the probability
generating function of the edge jump counts,

    E prod_e z_e^{N_e}  =  (det(I - P_z) / det(I - P))^{-t},

expanded as a truncated multivariate power series with rational
coefficients.  For half-integer exponents the series carries an irrational
scalar prefactor that cancels from every conditional quantity, so the
rational part is sufficient for exact conditional-independence checks.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

import numpy as np

from .bridges import all_pairings, enumerate_bridges
from .excursions import (DecompositionError, OrientedHookup,
                         UnorientedHookup, decompose_counts)
from .graph import Domain, GraphError, green_function
from .loops import LoopCatalog

MULTISET_BUDGET = 200000


class OracleError(GraphError):
    pass


@dataclass
class DiscreteDistribution:
    """Finite distribution over canonical configuration keys.

    Probabilities are exact rationals (or floats in float mode); whatever
    mass the truncation pushed outside the enumerated support is reported,
    not silently renormalized away.
    """

    support: tuple
    probabilities: tuple
    truncation_mass: float = 0.0

    def as_dict(self) -> dict:
        return dict(zip(self.support, self.probabilities))

    def total(self):
        return sum(self.probabilities)


def tv_distance(p: dict, q: dict, q_missing_mass: float = 0.0) -> float:
    """Total variation distance; q may be sub-normalized by q_missing_mass."""
    keys = set(p) | set(q)
    acc = sum(abs(float(p.get(k, 0)) - float(q.get(k, 0))) for k in keys)
    return 0.5 * (acc + float(q_missing_mass))


# -- conditioned multiset enumeration -----------------------------------------


def _poisson_weight(intensity: Fraction, mass: Fraction, u: int) -> Fraction:
    return (intensity * mass) ** u / math.factorial(u)


def _assemble_multisets(candidates, target: Counter):
    """All ways to write `target` as a sum of candidate contribution Counters.

    candidates: list of (key, mass, contribution Counter).  Yields tuples of
    (key, mass, count).  Contributions are nonempty, so the recursion depth
    is bounded by the target size.
    """
    found = 0
    target = Counter({k: c for k, c in target.items() if c > 0})
    fitting = [c for c in candidates
               if all(target[k] >= v for k, v in c[2].items())]

    def rec(start, remaining, chosen):
        nonlocal found
        if not remaining:
            found += 1
            if found > MULTISET_BUDGET:
                raise OracleError("conditioned-multiset budget exceeded")
            yield tuple(chosen)
            return
        for j in range(start, len(fitting)):
            key, mass, contrib = fitting[j]
            u_max = min(remaining[k] // c for k, c in contrib.items())
            for u in range(u_max, 0, -1):
                rem = Counter(remaining)
                for k, c in contrib.items():
                    rem[k] -= c * u
                    if rem[k] == 0:
                        del rem[k]
                chosen.append((key, mass, u))
                yield from rec(j + 1, rem, chosen)
                chosen.pop()

    yield from rec(0, target, [])


def validate_eta(catalog: LoopCatalog, eta, F1, F2) -> None:
    graph = catalog.domain.graph
    F1, F2 = set(F1), set(F2)
    for path in eta:
        if not path:
            raise OracleError("empty excursion")
        verts = [graph.edge_by_id[path[0]].tail]
        for eid in path:
            verts.append(graph.edge_by_id[eid].head)
        if verts[0] not in F2 or verts[-1] not in F2:
            raise OracleError(f"excursion endpoint not in the cut set: {path}")
        if any(v in F2 for v in verts[1:-1]):
            raise OracleError(f"excursion interior re-enters the cut set: {path}")
        if not any(v in F1 for v in verts[1:-1]):
            raise OracleError(f"excursion never reaches the target set: {path}")


def touching_classes(catalog: LoopCatalog, F1, F2):
    """(key, mass, excursion Counter) for every class meeting both sets."""
    out = []
    for cls in catalog.classes:
        try:
            d = decompose_counts(catalog, {cls.key: 1}, F1, F2)
        except DecompositionError:
            raise
        if d.N:
            out.append((cls.key, cls.mass, Counter(d.eta)))
    return out


def conditional_multiset_law(catalog: LoopCatalog, intensity: Fraction,
                             candidates, target: Counter) -> dict:
    """Unnormalized conditional weights of class multisets matching `target`."""
    weights: dict = {}
    for combo in _assemble_multisets(candidates, target):
        w = Fraction(1)
        counts = {}
        for key, mass, u in combo:
            w *= _poisson_weight(intensity, mass, u)
            counts[key] = u
        ms = tuple(sorted((k, u) for k, u in counts.items()))
        weights[ms] = weights.get(ms, Fraction(0)) + w
    if not weights:
        raise OracleError("conditioning event has zero weight at this truncation")
    return weights


# -- bridge-measure enumeration ------------------------------------------------


def _exact_green(domain: Domain):
    return green_function(domain, exact=True)


def oriented_bridge_menu(domain: Domain, x: int, y: int, max_len: int):
    """[(path, Fraction g^{-n})] for bridges x->y, plus the exact total G(x,y)."""
    green = _exact_green(domain)
    paths = [(b.path, Fraction(1, domain.g ** b.n))
             for b in enumerate_bridges(domain, x, y, max_len)]
    return paths, green.exact(x, y)


def unordered_bridge_law(domain: Domain, X, Y, max_len: int):
    """Labeled unordered-bridge configurations with exact probabilities.

    Returns (configs, normalizer) where configs maps
    (sigma, bridge-path-tuple) -> Fraction probability g^{-K} / Z and
    Z = sum_s G(X, Y^s).  Unenumerated mass is 1 - sum(configs.values()).
    """
    green = _exact_green(domain)
    N = len(X)
    Z = Fraction(0)
    for s in permutations(range(N)):
        Z += green.product_exact(X, [Y[s[j]] for j in range(N)])
    if Z == 0:
        raise OracleError("no permutation has positive weight")
    menus: dict = {}
    for s in permutations(range(N)):
        for j in range(N):
            pair = (X[j], Y[s[j]])
            if pair not in menus:
                menus[pair] = [(b.path, Fraction(1, domain.g ** b.n))
                               for b in enumerate_bridges(domain, pair[0], pair[1], max_len)]
    configs: dict = {}

    def rec(s, j, paths, mass):
        if j == len(X):
            configs[(s, tuple(paths))] = mass / Z
            return
        for path, m in menus[(X[j], Y[s[j]])]:
            paths.append(path)
            rec(s, j + 1, paths, mass * m)
            paths.pop()

    for s in permutations(range(N)):
        rec(s, 0, [], Fraction(1))
    return configs, Z


def z_bridge_law(domain: Domain, Z_vertices, involution, max_len: int):
    """Labeled Z-bridge configurations with exact probabilities.

    Returns (configs, normalizer): configs maps
    (pairing, unoriented-bridge-path-tuple) -> Fraction g^{-K}-style mass / Z.
    Bridge paths are stored in canonical unoriented form; the mass of an
    unoriented path accumulates both oriented representatives when they
    differ (self-return paths), which keeps the g^{-K} bookkeeping exact.
    """
    green = _exact_green(domain)
    n = len(Z_vertices)
    pairings = all_pairings(n)
    Z = Fraction(0)
    for t in pairings:
        w = Fraction(1)
        for a, b in t:
            w *= green.exact(Z_vertices[a], Z_vertices[b])
        Z += w
    if Z == 0:
        raise OracleError("no pairing has positive weight")
    menus: dict = {}
    for t in pairings:
        for a, b in t:
            pair = (Z_vertices[a], Z_vertices[b])
            if pair not in menus:
                menu: dict = {}
                for br in enumerate_bridges(domain, pair[0], pair[1], max_len):
                    ukey = min(br.path, involution.reverse_path(br.path)) if br.path else ()
                    menu[ukey] = menu.get(ukey, Fraction(0)) + Fraction(1, domain.g ** br.n)
                menus[pair] = sorted(menu.items())
    configs: dict = {}

    def rec(t, k, paths, mass):
        if k == len(t):
            key = (t, tuple(paths))
            configs[key] = configs.get(key, Fraction(0)) + mass / Z
            return
        a, b = t[k]
        for path, m in menus[(Z_vertices[a], Z_vertices[b])]:
            paths.append(path)
            rec(t, k + 1, paths, mass * m)
            paths.pop()

    for t in pairings:
        rec(t, 0, [], Fraction(1))
    return configs, Z


# -- orbit keys over shared endpoint patterns -----------------------------------


def _value_preserving_perms(values, budget: int = 50000):
    blocks: dict = {}
    for i, v in enumerate(values):
        blocks.setdefault(v, []).append(i)
    size = 1
    for b in blocks.values():
        size *= math.factorial(len(b))
    if size > budget:
        raise OracleError(f"orbit group of size {size} beyond budget")
    from itertools import product as iproduct
    per_block = [list(permutations(b)) for b in blocks.values()]
    origs = [tuple(b) for b in blocks.values()]
    for combo in iproduct(*per_block):
        perm = {}
        for orig, new in zip(origs, combo):
            for a, b in zip(orig, new):
                perm[a] = b
        yield perm


def xy_orbit_key(X, Y, hookup: OrientedHookup):
    """Canonical (sigma, bridges) under slot relabelings preserving (X_j, Y_j)."""
    N = len(X)
    best = None
    for perm in _value_preserving_perms(list(zip(X, Y))):
        sigma = [0] * N
        bridges = [()] * N
        for j in range(N):
            sigma[perm[j]] = perm[hookup.sigma[j]]
            bridges[perm[j]] = hookup.bridges[j]
        cand = (tuple(sigma), tuple(bridges))
        if best is None or cand < best:
            best = cand
    return best


def z_orbit_key(Z, hookup: UnorientedHookup):
    """Canonical (pairing, bridges) under slot relabelings preserving Z values."""
    best = None
    for perm in _value_preserving_perms(tuple(Z)):
        relabeled = sorted(
            (tuple(sorted((perm[a], perm[b]))), br)
            for (a, b), br in zip(hookup.pairing, hookup.bridges)
        )
        cand = (tuple(p for p, _ in relabeled), tuple(b for _, b in relabeled))
        if best is None or cand < best:
            best = cand
    return best


# -- crossing-side structures ----------------------------------------------------


def bounded_multisets(candidates, max_total):
    """Multisets of candidates with total contribution size <= max_total.

    candidates: (key, mass, size) with size >= 1.  Yields tuples of
    (key, mass, count) with count >= 1, including the empty multiset.
    """
    found = 0

    def rec(start, budget, chosen):
        nonlocal found
        found += 1
        if found > MULTISET_BUDGET:
            raise OracleError("bounded-multiset budget exceeded")
        yield tuple(chosen)
        for j in range(start, len(candidates)):
            key, mass, size = candidates[j]
            u = 1
            while u * size <= budget:
                chosen.append((key, mass, u))
                yield from rec(j + 1, budget - u * size, chosen)
                chosen.pop()
                u += 1

    yield from rec(0, max_total, [])


def _instance_blocks(instances):
    blocks: dict = {}
    for s, inst in enumerate(instances):
        blocks.setdefault(inst, []).append(s)
    return [tuple(v) for _, v in sorted(blocks.items())]


def _block_perm_iter(blocks, budget=20000):
    size = 1
    for b in blocks:
        size *= math.factorial(len(b))
    if size > budget:
        raise OracleError(f"crossing orbit group of size {size} beyond budget")
    from itertools import product as iproduct
    per_block = [list(permutations(b)) for b in blocks]
    for combo in iproduct(*per_block):
        perm = {}
        for orig, new in zip(blocks, combo):
            for a, b in zip(orig, new):
                perm[a] = b
        yield perm


def _relabel_side(structure, slot_instances, perm, oriented: bool):
    """Rewrite a side hookup after relabeling crossing instances by `perm`."""
    new_ids = [perm[s] for s in slot_instances]
    order = sorted(range(len(new_ids)), key=lambda k: new_ids[k])
    new_slot = [0] * len(new_ids)
    for rank, k in enumerate(order):
        new_slot[k] = rank
    entries = []
    for (a, b), arc in structure:
        na, nb = new_slot[a], new_slot[b]
        entries.append(((na, nb) if oriented else (min(na, nb), max(na, nb)), arc))
    return tuple(sorted(entries))


def side_orbit_key(cs, i):
    """Canonical form of sides[i] under relabeling identical crossings."""
    blocks = _instance_blocks(cs.instances)
    slot_instances = [s for _, s in cs.endpoint_slots[i]]
    oriented = cs.mode == "oriented"
    best = None
    for perm in _block_perm_iter(blocks):
        cand = _relabel_side(cs.sides[i], slot_instances, perm, oriented)
        if best is None or cand < best:
            best = cand
    return best


def side_pair_orbit_size(cs, side_indices=(0, 1)):
    """Number of distinct simultaneous relabelings of the listed sides."""
    blocks = _instance_blocks(cs.instances)
    oriented = cs.mode == "oriented"
    slot_instances = {i: [s for _, s in cs.endpoint_slots[i]] for i in side_indices}
    images = set()
    for perm in _block_perm_iter(blocks):
        images.add(tuple(
            _relabel_side(cs.sides[i], slot_instances[i], perm, oriented)
            for i in side_indices
        ))
    return len(images)


def side_bridge_law(domain_minus: Domain, cs, i, max_len: int, involution=None):
    """The bridge-measure law of side i, pushed onto side orbit keys.

    Returns (dist, remainder): dist maps orbit keys to exact probabilities;
    remainder is the un-enumerated bridge mass (Fraction).
    """
    slot_instances = [s for _, s in cs.endpoint_slots[i]]
    slot_vertex = {k: v for k, (v, _) in enumerate(cs.endpoint_slots[i])}
    oriented = cs.mode == "oriented"
    blocks = _instance_blocks(cs.instances)
    if oriented:
        arrivals = [k for k, s in enumerate(slot_instances) if cs.instances[s][0][1] == i]
        departures = [k for k, s in enumerate(slot_instances) if cs.instances[s][0][0] == i]
        X = [slot_vertex[k] for k in arrivals]
        Y = [slot_vertex[k] for k in departures]
        configs, _ = unordered_bridge_law(domain_minus, X, Y, max_len)
        dist: dict = {}
        total = Fraction(0)
        for (s, paths), pr in configs.items():
            structure = tuple(sorted(
                ((arrivals[j], departures[s[j]]), paths[j]) for j in range(len(X))
            ))
            best = None
            for perm in _block_perm_iter(blocks):
                cand = _relabel_side(structure, slot_instances, perm, True)
                if best is None or cand < best:
                    best = cand
            dist[best] = dist.get(best, Fraction(0)) + pr
            total += pr
        return dist, Fraction(1) - total
    Z = [slot_vertex[k] for k in range(len(slot_instances))]
    configs, _ = z_bridge_law(domain_minus, Z, involution, max_len)
    dist = {}
    total = Fraction(0)
    for (t, paths), pr in configs.items():
        structure = tuple(sorted(zip(t, paths)))
        best = None
        for perm in _block_perm_iter(blocks):
            cand = _relabel_side(structure, slot_instances, perm, False)
            if best is None or cand < best:
                best = cand
        dist[best] = dist.get(best, Fraction(0)) + pr
        total += pr
    return dist, Fraction(1) - total


# -- truncated multivariate power series over the rationals ----------------------


class TruncPoly:
    """Multivariate polynomial over Fraction, truncated at a total degree."""

    __slots__ = ("nvars", "cap", "coeffs")

    def __init__(self, nvars: int, cap: int, coeffs: dict | None = None):
        self.nvars = nvars
        self.cap = cap
        self.coeffs = coeffs or {}

    @classmethod
    def constant(cls, nvars, cap, value) -> "TruncPoly":
        value = Fraction(value)
        return cls(nvars, cap, {(0,) * nvars: value} if value else {})

    @classmethod
    def monomial(cls, nvars, cap, exps, value) -> "TruncPoly":
        if sum(exps) > cap:
            return cls(nvars, cap)
        return cls(nvars, cap, {tuple(exps): Fraction(value)})

    def copy(self) -> "TruncPoly":
        return TruncPoly(self.nvars, self.cap, dict(self.coeffs))

    def __add__(self, other: "TruncPoly") -> "TruncPoly":
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            s = out.get(m, Fraction(0)) + c
            if s:
                out[m] = s
            elif m in out:
                del out[m]
        return TruncPoly(self.nvars, self.cap, out)

    def __sub__(self, other: "TruncPoly") -> "TruncPoly":
        return self + other.scale(-1)

    def scale(self, k) -> "TruncPoly":
        k = Fraction(k)
        if not k:
            return TruncPoly(self.nvars, self.cap)
        return TruncPoly(self.nvars, self.cap,
                         {m: c * k for m, c in self.coeffs.items()})

    def __mul__(self, other: "TruncPoly") -> "TruncPoly":
        out: dict = {}
        cap = self.cap
        for m1, c1 in self.coeffs.items():
            d1 = sum(m1)
            for m2, c2 in other.coeffs.items():
                if d1 + sum(m2) > cap:
                    continue
                m = tuple(a + b for a, b in zip(m1, m2))
                s = out.get(m, Fraction(0)) + c1 * c2
                if s:
                    out[m] = s
                elif m in out:
                    del out[m]
        return TruncPoly(self.nvars, self.cap, out)

    def constant_term(self) -> Fraction:
        return self.coeffs.get((0,) * self.nvars, Fraction(0))


def _det_trunc(mat: list[list[TruncPoly]]) -> TruncPoly:
    """Determinant by cofactor expansion (matrices here are tiny)."""
    n = len(mat)
    if n == 1:
        return mat[0][0]
    nvars, cap = mat[0][0].nvars, mat[0][0].cap
    out = TruncPoly(nvars, cap)
    for j in range(n):
        if not mat[0][j].coeffs:
            continue
        minor = [[mat[i][k] for k in range(n) if k != j] for i in range(1, n)]
        term = mat[0][j] * _det_trunc(minor)
        out = out + (term if j % 2 == 0 else term.scale(-1))
    return out


def _binomial_series(u: TruncPoly, exponent: Fraction) -> TruncPoly:
    """(1 + u)^exponent as a truncated series; u must have zero constant term."""
    if u.constant_term() != 0:
        raise OracleError("series argument must vanish at the origin")
    nvars, cap = u.nvars, u.cap
    out = TruncPoly.constant(nvars, cap, 1)
    power = TruncPoly.constant(nvars, cap, 1)
    coef = Fraction(1)
    for k in range(1, cap + 1):
        coef *= (exponent - (k - 1)) / k
        power = power * u
        if not power.coeffs:
            break
        out = out + power.scale(coef)
    return out


@dataclass
class OccupationLaw:
    """Joint law of jump counts on tracked edge groups, up to a scalar.

    weights[n] is proportional to P(N = n) for every total degree <= cap;
    the proportionality scalar (irrational for half-integer intensities)
    cancels from all conditional quantities.  `scalar` is its float value so
    absolute probabilities are available numerically.
    """

    groups: tuple
    cap: int
    weights: dict
    scalar: float

    def probability(self, n) -> float:
        return self.scalar * float(self.weights.get(tuple(n), 0))


def occupation_law(domain: Domain, edge_groups, intensity: Fraction,
                   cap: int, allow_marginal: bool = False) -> OccupationLaw:
    """Exact joint jump-count law on `edge_groups` for the soup at `intensity`.

    `intensity` is alpha for the oriented count field; for the unoriented
    field of a c-soup pass c/2 and group each unoriented edge class's two
    orientations into one variable (their jumps then share the variable,
    which is exactly the unoriented count).  Untracked in-domain edges are
    rejected unless `allow_marginal`: leaving their variable at 1 yields the
    exact marginal law of the tracked counts.
    """
    groups = [tuple(g) for g in edge_groups]
    var_of = {}
    for i, grp in enumerate(groups):
        for eid in grp:
            if eid in var_of:
                raise OracleError(f"edge {eid} appears in two groups")
            var_of[eid] = i
    nvars = len(groups)
    n = domain.size
    tracked = set(var_of)
    in_domain = {e.id for v in domain.vertices for e in domain.out_edges(v)}
    if not in_domain <= tracked and not allow_marginal:
        raise OracleError("all in-domain edges must be tracked for an exact law")
    rows = []
    for v in domain.vertices:
        row = []
        for w in domain.vertices:
            row.append(TruncPoly(nvars, cap))
        rows.append(row)
    for v in domain.vertices:
        i = domain.index[v]
        for e in domain.out_edges(v):
            j = domain.index[e.head]
            exps = [0] * nvars
            if e.id in var_of:
                exps[var_of[e.id]] = 1
            rows[i][j] = rows[i][j] + TruncPoly.monomial(
                nvars, cap, exps, Fraction(-1, domain.g))
    for i in range(n):
        rows[i][i] = rows[i][i] + TruncPoly.constant(nvars, cap, 1)
    D = _det_trunc(rows)              # det(I - P_z)
    D0 = D.constant_term()            # det at z = 0 (no tracked jumps)
    if D0 <= 0:
        raise OracleError("degenerate determinant at the origin")
    u = D.scale(Fraction(1) / D0) - TruncPoly.constant(nvars, cap, 1)
    series = _binomial_series(u, -intensity)
    # true PGF = (D0 / det(I - P))^{-intensity} * series
    P = domain.transition_matrix()
    det_ip = float(np.linalg.det(np.eye(n) - P))
    scalar = (float(D0) / det_ip) ** (-float(intensity))
    return OccupationLaw(tuple(groups), cap, dict(series.coeffs), scalar)
