"""Compiled inner loops: counter-based weights, label-setting search, two-type race.

Grids are flattened row-major with ``index = (y - y0) * W + (x - x0)``.
``wh[i]`` is the weight of the edge from site ``i`` to its east neighbour and
``wv[i]`` the weight to its north neighbour; entries pointing out of the box
hold ``inf``.
"""

import numpy as np
from numba import njit

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_S32 = np.uint64(32)
_OFFSET = np.int64(1 << 31)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _absorb(h, word):
    return _mix(h ^ (word + _GOLDEN))


@njit(cache=True)
def stream_key(seed, stream, replica):
    h = _mix(np.uint64(seed) + _GOLDEN)
    h = _absorb(h, np.uint64(stream))
    return _absorb(h, np.uint64(replica))


@njit(cache=True)
def edge_uniform(key, x, y, axis):
    """Uniform on [2**-53, 1) keyed by (stream key, x, y, axis)."""
    packed = (np.uint64(np.int64(x) + _OFFSET) << _S32) | np.uint64(np.int64(y) + _OFFSET)
    h = _absorb(key, packed)
    h = _absorb(h, np.uint64(axis))
    u = np.float64(h >> _S11) * _INV53
    if u == 0.0:
        u = _INV53
    return u


@njit(cache=True)
def edge_exp(key, x, y, axis):
    return -np.log1p(-edge_uniform(key, x, y, axis))


@njit(cache=True)
def fill_weights(key, x0, y0, width, height):
    n = width * height
    wh = np.empty(n, np.float64)
    wv = np.empty(n, np.float64)
    for r in range(height):
        y = y0 + r
        for c in range(width):
            i = r * width + c
            x = x0 + c
            wh[i] = edge_exp(key, x, y, 0) if c + 1 < width else np.inf
            wv[i] = edge_exp(key, x, y, 1) if r + 1 < height else np.inf
    return wh, wv


# ---------------------------------------------------------------------------
# binary heap keyed by (float, int) with lazy deletion
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _less(ka, ta, kb, tb):
    return ka < kb or (ka == kb and ta < tb)


@njit(cache=True)
def _push(keys, tags, size, k, t):
    i = size
    keys[i] = k
    tags[i] = t
    while i > 0:
        p = (i - 1) >> 1
        if _less(keys[i], tags[i], keys[p], tags[p]):
            keys[i], keys[p] = keys[p], keys[i]
            tags[i], tags[p] = tags[p], tags[i]
            i = p
        else:
            break
    return size + 1


@njit(cache=True)
def _pop(keys, tags, size):
    k = keys[0]
    t = tags[0]
    size -= 1
    keys[0] = keys[size]
    tags[0] = tags[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        best = left
        right = left + 1
        if right < size and _less(keys[right], tags[right], keys[left], tags[left]):
            best = right
        if _less(keys[best], tags[best], keys[i], tags[i]):
            keys[i], keys[best] = keys[best], keys[i]
            tags[i], tags[best] = tags[best], tags[i]
            i = best
        else:
            break
    return k, t, size


@njit(cache=True, inline="always")
def _edge_to(wh, wv, width, n, u, d):
    # direction order E, W, N, S; returns (neighbour, weight) or (-1, inf)
    c = u % width
    if d == 0:
        if c + 1 < width:
            return u + 1, wh[u]
    elif d == 1:
        if c > 0:
            return u - 1, wh[u - 1]
    elif d == 2:
        if u + width < n:
            return u + width, wv[u]
    else:
        if u >= width:
            return u - width, wv[u - width]
    return -1, np.inf


@njit(cache=True)
def _lex_smaller(a, b, width):
    # (x, y) lexicographic comparison of flat indices
    xa = a % width
    xb = b % width
    if xa != xb:
        return xa < xb
    return a < b


@njit(cache=True)
def dijkstra(wh, wv, width, height, sources, blocked, targets, time_limit):
    """Multi-source label-setting search.

    Stops early once every target is settled (if ``targets`` is non-empty) or
    once the next label exceeds ``time_limit``.  Unsettled sites keep ``inf``.
    Among equal-time predecessors the lexicographically smallest ``(x, y)`` wins.
    """
    n = width * height
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, np.int64)
    done = np.zeros(n, np.bool_)
    is_target = np.zeros(n, np.bool_)
    remaining = 0
    for t in targets:
        if not is_target[t]:
            is_target[t] = True
            remaining += 1
    cap = 4 * n + len(sources) + 1
    keys = np.empty(cap, np.float64)
    tags = np.empty(cap, np.int64)
    size = 0
    for s in sources:
        if dist[s] > 0.0:
            dist[s] = 0.0
            size = _push(keys, tags, size, 0.0, s)
    track = remaining > 0
    while size > 0:
        d, u, size = _pop(keys, tags, size)
        if done[u] or d > dist[u]:
            continue
        if d > time_limit:
            break
        done[u] = True
        if track and is_target[u]:
            remaining -= 1
            if remaining == 0:
                break
        for k in range(4):
            v, w = _edge_to(wh, wv, width, n, u, k)
            if v < 0 or blocked[v] or done[v]:
                continue
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                size = _push(keys, tags, size, nd, v)
            elif nd == dist[v] and _lex_smaller(u, pred[v], width):
                pred[v] = u
    for i in range(n):
        if not done[i]:
            dist[i] = np.inf
            pred[i] = -1
    return dist, pred


@njit(cache=True)
def race(wh, wv, width, height, seeds1, seeds2, lam, time_limit):
    """Two-type first-come claiming with edge cost tau from type 1 and tau / lam from type 2.

    Heap tags encode ``(type - 1) * n + site`` so type 1 wins exact ties.
    Returns occupier (0 uninfected, 1, 2) and claim time.
    """
    n = width * height
    occ = np.zeros(n, np.int8)
    time = np.full(n, np.inf)
    cap = 4 * n + len(seeds1) + len(seeds2) + 1
    keys = np.empty(cap, np.float64)
    tags = np.empty(cap, np.int64)
    size = 0
    for s in seeds1:
        size = _push(keys, tags, size, 0.0, s)
    for s in seeds2:
        size = _push(keys, tags, size, 0.0, n + s)
    while size > 0:
        t, tag, size = _pop(keys, tags, size)
        if t > time_limit:
            break
        typ = 1 if tag < n else 2
        u = tag - (typ - 1) * n
        if occ[u] != 0:
            continue
        occ[u] = typ
        time[u] = t
        for k in range(4):
            v, w = _edge_to(wh, wv, width, n, u, k)
            if v < 0 or occ[v] != 0:
                continue
            nt = t + w if typ == 1 else t + w / lam
            size = _push(keys, tags, size, nt, (typ - 1) * n + v)
    return occ, time


@njit(cache=True)
def claim_parents(wh, wv, width, height, occ, time, lam):
    """For every claimed non-seed site, the same-type neighbour that delivered its claim time."""
    n = width * height
    parent = np.full(n, -1, np.int64)
    for v in range(n):
        if occ[v] == 0 or time[v] == 0.0:
            continue
        best = -1
        for k in range(4):
            u, w = _edge_to(wh, wv, width, n, v, k)
            if u < 0 or occ[u] != occ[v]:
                continue
            cost = w if occ[v] == 1 else w / lam
            if time[u] + cost == time[v] and (best < 0 or _lex_smaller(u, best, width)):
                best = u
        parent[v] = best
    return parent
