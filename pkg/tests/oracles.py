"""Slow, independent reference implementations used to check the fast kernels.

Nothing here imports the package's numerics: the hash is re-done with Python
integers, passage times by path enumeration and Bellman-Ford, the race by
brute-force event stepping, and region sets straight from their definitions.
"""

from __future__ import annotations

import math
from itertools import product

U64 = (1 << 64) - 1
M1 = 0xBF58476D1CE4E5B9
M2 = 0x94D049BB133111EB
GOLDEN = 0x9E3779B97F4A7C15


# ---------------------------------------------------------------------------
# counter-based weights
# ---------------------------------------------------------------------------

def mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * M1) & U64
    z = ((z ^ (z >> 27)) * M2) & U64
    return z ^ (z >> 31)


def absorb(h: int, word: int) -> int:
    return mix(h ^ ((word + GOLDEN) & U64))


def stream_key(seed: int, stream: int, replica: int) -> int:
    h = mix((seed + GOLDEN) & U64)
    return absorb(absorb(h, stream), replica)


def uniform(seed: int, stream: int, replica: int, x: int, y: int, axis: str) -> float:
    key = stream_key(seed, stream, replica)
    packed = (((x + (1 << 31)) & U64) << 32 | ((y + (1 << 31)) & U64)) & U64
    h = absorb(absorb(key, packed), 0 if axis.upper() == "H" else 1)
    u = (h >> 11) * 2.0 ** -53
    return u if u > 0 else 2.0 ** -53


def exp_weight(seed: int, stream: int, replica: int, x: int, y: int, axis: str) -> float:
    return -math.log1p(-uniform(seed, stream, replica, x, y, axis))


# ---------------------------------------------------------------------------
# graphs of small boxes
# ---------------------------------------------------------------------------

def box_sites(x0, x1, y0, y1):
    return [(x, y) for y in range(y0, y1 + 1) for x in range(x0, x1 + 1)]


def box_graph(x0, x1, y0, y1, weight):
    """Adjacency ``{site: {nbr: w}}``; ``weight(a, b)`` is called once per edge with ``a < b``."""
    adj = {s: {} for s in box_sites(x0, x1, y0, y1)}
    for (x, y) in adj:
        for nb in ((x + 1, y), (x, y + 1)):
            if nb in adj:
                w = weight((x, y), nb)
                adj[(x, y)][nb] = w
                adj[nb][(x, y)] = w
    return adj


def enumerate_min(adj, sources, targets, forbidden=()):
    """Minimum weight over all simple paths; ``inf`` if there are none."""
    sources, targets, forbidden = set(sources), set(targets), set(forbidden)
    if sources & targets:
        return 0.0
    best = math.inf

    def walk(s, seen, acc):
        nonlocal best
        if s in targets:
            best = min(best, acc)
            return
        for nb, w in adj[s].items():
            if nb not in seen and nb not in forbidden:
                seen.add(nb)
                walk(nb, seen, acc + w)
                seen.remove(nb)

    for s in sources:
        walk(s, {s}, 0.0)
    return best


def bellman_ford(adj, sources, forbidden=()):
    forbidden = set(forbidden)
    dist = {s: math.inf for s in adj}
    for s in sources:
        dist[s] = 0.0
    for _ in range(len(adj)):
        changed = False
        for u in adj:
            if u in forbidden or math.isinf(dist[u]):
                continue
            for v, w in adj[u].items():
                if v not in forbidden and dist[u] + w < dist[v]:
                    dist[v] = dist[u] + w
                    changed = True
        if not changed:
            break
    return dist


def brute_race(adj, seeds1, seeds2, lam):
    """Claim one site per step: the earliest (time, type, x, y) offer from a claimed neighbour."""
    occ = {s: 0 for s in adj}
    time = {s: math.inf for s in adj}
    for s in seeds1:
        occ[s], time[s] = 1, 0.0
    for s in seeds2:
        occ[s], time[s] = 2, 0.0
    while True:
        best = None
        for v in adj:
            if occ[v]:
                continue
            for u, w in adj[v].items():
                if not occ[u] or math.isinf(w):
                    continue
                t = time[u] + (w if occ[u] == 1 else w / lam)
                key = (t, occ[u], v[1], v[0])
                if best is None or key < best[0]:
                    best = (key, v, occ[u])
        if best is None:
            return occ, time
        (t, *_), v, typ = best
        occ[v], time[v] = typ, t


# ---------------------------------------------------------------------------
# tilted-line regions
# ---------------------------------------------------------------------------

def in_R(slope: float, n: int, x: int, y: int) -> bool:
    # x - (n - 1/2) >= y * slope, with the same 1e-9 slack as the package
    return (x - (n - 0.5)) - y * slope >= -0.5e-9


def nbrs(x, y):
    return [(a, b) for a, b in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)) if b >= 0]


def boundary_R(slope, n, y_max, x_lo=-200, x_hi=200):
    return [(x, y) for y in range(y_max + 1) for x in range(x_lo, x_hi + 1)
            if in_R(slope, n, x, y) and any(not in_R(slope, n, *nb) for nb in nbrs(x, y))]


def lambda_edges(slope, n, ell_prime):
    out = set()
    for (x, y) in boundary_R(slope, n, ell_prime):
        if (x, y) == (n, 0):
            continue
        for nb in nbrs(x, y):
            if not in_R(slope, n, *nb):
                out.add(frozenset({(x, y), nb}))
    return out


def omega_edges(slope, m, k):
    strip = lambda s: s[0] >= 0 and 0 <= s[1] <= k  # noqa: E731
    type1 = set(boundary_R(slope, 0, k + 1)) - {(0, 0)}
    entry = set()
    for s in type1:
        for nb in nbrs(*s):
            if strip(nb):
                entry.add(frozenset({s, nb}))
    for j in range(m + 1):
        if in_R(slope, 0, j, k + 1):
            entry.add(frozenset({(j, k + 1), (j, k)}))
    usable = [s for s in product(range(m + 1), range(k + 1)) if s not in type1]
    inner = {frozenset({a, b}) for a in usable for b in usable
             if abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1}
    return entry, inner
