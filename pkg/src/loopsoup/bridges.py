"""Conditioned-path laws: single bridges, permutation- and pairing-weighted families.

A bridge from x to y in a domain D is any path from x to y staying in D
(zero length allowed when x = y), and the bridge law weights it
g^{-n(b)} / G_D(x, y).  Sampling walks the Doob transform of the killed
chain: from z, take edge e to w with probability (1/g) G_D(w, y) / G_D(z, y)
and stop at z = y with probability 1 / G_D(y, y); these weights sum to one
because G = I + P G.

An unordered bridge family from X = (x_1..x_N) to Y picks a permutation s
with probability proportional to prod_j G_D(x_j, y_{s(j)}) and then N
independent bridges; the resulting configuration probability is proportional
to g^{-K}, K the total length.  The unoriented analogue pairs the 2N entries
of a vector Z with probability proportional to the product of Green's values
over pairs, then joins each pair with an unoriented bridge.

Permutations and pairings are enumerated exhaustively (budgets below);
exactness matters more than scale here.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

import numpy as np

from .graph import Domain, GraphError, GreenMatrix, green_function

PERMUTATION_BUDGET = 8      # max N for N! enumeration
PAIRING_BUDGET = 12         # max 2N for (2N-1)!! enumeration


class BridgeError(GraphError):
    pass


@dataclass(frozen=True)
class Bridge:
    """A path from x to y inside a domain, as an edge-id sequence."""

    x: int
    y: int
    path: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.path)


def _check_bridge(domain: Domain, bridge: Bridge) -> None:
    v = bridge.x
    for eid in bridge.path:
        e = domain.graph.edge_by_id[eid]
        if e.tail != v:
            raise BridgeError(f"edge {eid} does not continue the path at {v}")
        if not domain.allows_edge(e):
            raise BridgeError(f"edge {eid} leaves the domain")
        v = e.head
    if v != bridge.y:
        raise BridgeError(f"path ends at {v}, not {bridge.y}")
    if bridge.n == 0 and bridge.x != bridge.y:
        raise BridgeError("zero-length bridge needs equal endpoints")


def bridge_probability(domain: Domain, bridge: Bridge,
                       green: GreenMatrix | None = None) -> float:
    """g^{-n} / G_D(x, y); zero-weight paths (leaving the domain) are rejected."""
    _check_bridge(domain, bridge)
    green = green or green_function(domain)
    gxy = green(bridge.x, bridge.y)
    if gxy == 0.0:
        raise BridgeError(f"target {bridge.y} unreachable from {bridge.x}")
    return domain.g ** (-bridge.n) / gxy


def bridge_probability_exact(domain: Domain, bridge: Bridge,
                             green: GreenMatrix) -> Fraction:
    _check_bridge(domain, bridge)
    gxy = green.exact(bridge.x, bridge.y)
    if gxy == 0:
        raise BridgeError(f"target {bridge.y} unreachable from {bridge.x}")
    return Fraction(1, domain.g ** bridge.n) / gxy


def enumerate_bridges(domain: Domain, x: int, y: int,
                      max_len: int) -> list[Bridge]:
    """All bridges from x to y of length <= max_len, in deterministic order."""
    out: list[Bridge] = []
    stack = [(x, ())]
    while stack:
        v, path = stack.pop()
        if v == y:
            out.append(Bridge(x, y, path))
        if len(path) < max_len:
            for e in reversed(domain.out_edges(v)):
                stack.append((e.head, path + (e.id,)))
    out.sort(key=lambda b: (b.n, b.path))
    return out


def sample_bridge(domain: Domain, x: int, y: int, rng,
                  green: GreenMatrix | None = None) -> Bridge:
    """Draw from the bridge law by the Doob-transformed walk."""
    green = green or green_function(domain)
    if x not in domain.vertex_set or y not in domain.vertex_set:
        raise BridgeError("bridge endpoints must lie in the domain")
    if green(x, y) <= 0.0:
        raise BridgeError(f"target {y} unreachable from {x}")
    path: list[int] = []
    v = x
    while True:
        edges = domain.out_edges(v)
        weights = [green(e.head, y) for e in edges]
        stop = float(domain.g) if v == y else 0.0   # relative weight of stopping
        total = stop + sum(weights)
        u = rng.random() * total
        if u < stop:
            return Bridge(x, y, tuple(path))
        u -= stop
        for e, w in zip(edges, weights):
            if u < w:
                path.append(e.id)
                v = e.head
                break
            u -= w
        else:  # numerical slack lands on the last positive-weight edge
            for e, w in reversed(list(zip(edges, weights))):
                if w > 0:
                    path.append(e.id)
                    v = e.head
                    break


# -- unordered (permutation-weighted) families --------------------------------


@dataclass(frozen=True)
class UnorderedBridgeFamily:
    """Permutation s plus bridges, bridge j running x_j -> y_{s[j]} (0-based)."""

    X: tuple[int, ...]
    Y: tuple[int, ...]
    permutation: tuple[int, ...]
    bridges: tuple[Bridge, ...]

    @property
    def total_length(self) -> int:
        return sum(b.n for b in self.bridges)


def permutation_weights(green: GreenMatrix, X, Y,
                        exact: bool = False) -> dict[tuple[int, ...], float | Fraction]:
    """Weight G_D(X, Y^s) for every permutation s of the N slots."""
    N = len(X)
    if len(Y) != N:
        raise BridgeError("X and Y must have equal length")
    if N > PERMUTATION_BUDGET:
        raise BridgeError(f"N={N} beyond permutation budget {PERMUTATION_BUDGET}")
    out = {}
    for s in permutations(range(N)):
        if exact:
            w = green.product_exact(X, [Y[s[j]] for j in range(N)])
        else:
            w = green.product(X, [Y[s[j]] for j in range(N)])
        out[s] = w
    return out


def sample_unordered_bridge(domain: Domain, X, Y, rng,
                            green: GreenMatrix | None = None) -> UnorderedBridgeFamily:
    green = green or green_function(domain)
    weights = permutation_weights(green, X, Y)
    perms = sorted(weights)
    w = np.array([weights[s] for s in perms])
    total = float(w.sum())
    if total <= 0.0:
        raise BridgeError("no permutation has positive weight")
    s = perms[int(rng.choice(len(perms), p=w / total))]
    bridges = tuple(sample_bridge(domain, X[j], Y[s[j]], rng, green)
                    for j in range(len(X)))
    return UnorderedBridgeFamily(tuple(X), tuple(Y), s, bridges)


# -- unoriented Z-bridge (pairing-weighted) families ---------------------------


@dataclass(frozen=True)
class ZBridgeFamily:
    """Perfect pairing of the 2N entries of Z plus one unoriented bridge per pair.

    Pairs are stored sorted by smaller slot; each bridge runs from the pair's
    smaller slot to its larger one (a representation choice, invisible in law
    by reversal symmetry of the bridge measure).
    """

    Z: tuple[int, ...]
    pairing: tuple[tuple[int, int], ...]
    bridges: tuple[Bridge, ...]

    @property
    def total_length(self) -> int:
        return sum(b.n for b in self.bridges)


def all_pairings(n: int):
    """Perfect matchings of range(n) as tuples of (small, large) pairs."""
    if n % 2:
        raise BridgeError("pairings need an even number of points")
    if n > PAIRING_BUDGET:
        raise BridgeError(f"2N={n} beyond pairing budget {PAIRING_BUDGET}")

    def rec(items):
        if not items:
            yield ()
            return
        a = items[0]
        for i in range(1, len(items)):
            b = items[i]
            rest = items[1:i] + items[i + 1:]
            for tail in rec(rest):
                yield ((a, b),) + tail

    return list(rec(tuple(range(n))))


def pairing_weights(green: GreenMatrix, Z,
                    exact: bool = False) -> dict[tuple, float | Fraction]:
    out = {}
    for t in all_pairings(len(Z)):
        if exact:
            w = Fraction(1)
            for a, b in t:
                w *= green.exact(Z[a], Z[b])
        else:
            w = 1.0
            for a, b in t:
                w *= green(Z[a], Z[b])
        out[t] = w
    return out


def sample_z_bridge(domain: Domain, Z, rng,
                    green: GreenMatrix | None = None) -> ZBridgeFamily:
    green = green or green_function(domain)
    weights = pairing_weights(green, Z)
    ts = sorted(weights)
    w = np.array([float(weights[t]) for t in ts])
    total = float(w.sum())
    if total <= 0.0:
        raise BridgeError("no pairing has positive weight")
    t = ts[int(rng.choice(len(ts), p=w / total))]
    bridges = tuple(sample_bridge(domain, Z[a], Z[b], rng, green) for a, b in t)
    return ZBridgeFamily(tuple(Z), t, bridges)


# -- continuous-time decoration ------------------------------------------------


@dataclass(frozen=True)
class TimedBridgeFamily:
    family: UnorderedBridgeFamily | ZBridgeFamily
    interior_times: tuple[tuple[float, ...], ...]


def family_to_json(family, timed: "TimedBridgeFamily | None" = None) -> dict:
    """Dump format: permutation or pairing, per-bridge paths, durations."""
    out: dict = {"bridges": [list(b.path) for b in family.bridges]}
    if isinstance(family, UnorderedBridgeFamily):
        out["permutation"] = list(family.permutation)
        out["X"] = list(family.X)
        out["Y"] = list(family.Y)
    else:
        out["pairing"] = [list(p) for p in family.pairing]
        out["Z"] = list(family.Z)
    if timed is not None:
        out["interior_times"] = [list(t) for t in timed.interior_times]
    return out


def attach_holding_times(family, rng, g: int | None = None,
                         domain: Domain | None = None) -> TimedBridgeFamily:
    """Give each bridge of length n its n-1 interior Exp(mean 1/g) durations."""
    if g is None:
        if domain is None:
            raise BridgeError("need g or a domain")
        g = domain.g
    times = []
    for b in family.bridges:
        k = max(0, b.n - 1)
        times.append(tuple(float(t) for t in rng.exponential(scale=1.0 / g, size=k)))
    return TimedBridgeFamily(family, tuple(times))
