"""One-type first-passage percolation on bounded domains.

All searches run inside the domain box; the box sides are hard walls.  The
``weights`` argument of every function is either a :class:`WeightOracle` (the
box is materialized on the fly) or a pre-materialized :class:`WeightGrid`
covering the domain, which lets callers run several searches on one replica
without hashing the weights again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

from . import _kernels as K
from .errors import ParameterError
from .lattice import Domain, Edge, Site, require_in
from .weights import WeightGrid, WeightOracle, materialize

INF = math.inf
Weights = Union[WeightOracle, WeightGrid]

_EMPTY = np.empty(0, np.int64)


def weight_grid(domain: Domain, weights: Weights) -> WeightGrid:
    if isinstance(weights, WeightGrid):
        if weights.domain == domain:
            return weights
        return weights.sub(domain)
    return materialize(weights, domain)


def indices(domain: Domain, sites: Iterable) -> np.ndarray:
    return np.fromiter((domain.index(s) for s in sites), np.int64)


def search(grid: WeightGrid, sources: np.ndarray, blocked: np.ndarray | None = None,
           targets: np.ndarray | None = None, time_limit: float = INF):
    """Raw kernel call: flat ``(dist, pred)`` arrays for a multi-source search."""
    dom = grid.domain
    if blocked is None:
        blocked = np.zeros(dom.size, np.bool_)
    return K.dijkstra(grid.wh, grid.wv, dom.width, dom.height, sources, blocked,
                      _EMPTY if targets is None else targets, float(time_limit))


@dataclass(frozen=True)
class Geodesic:
    path: tuple[Site, ...]
    total_time: float

    @property
    def empty(self) -> bool:
        return not self.path


@dataclass(frozen=True)
class PassageTimeField:
    """Arrival times from a source set; ``inf`` where unreachable."""

    domain: Domain
    sources: frozenset
    times: np.ndarray = field(repr=False)  # shape (height, width), row y - y0
    pred: np.ndarray = field(repr=False)

    def __getitem__(self, site) -> float:
        x, y = site
        return float(self.times[y - self.domain.y0, x - self.domain.x0])

    def min_over(self, sites: Iterable) -> float:
        vals = [self[s] for s in sites]
        return min(vals) if vals else INF

    def geodesic_to(self, site, grid: WeightGrid | None = None) -> Geodesic:
        t = self[site]
        if math.isinf(t):
            return Geodesic((), INF)
        dom = self.domain
        flat = self.pred.ravel()
        i = dom.index(site)
        path = [dom.site(i)]
        while flat[i] >= 0:
            i = int(flat[i])
            path.append(dom.site(i))
        path.reverse()
        total = t if grid is None else path_weight(grid, path)
        return Geodesic(tuple(path), total)


def path_weight(grid: WeightGrid, path) -> float:
    total = 0.0
    for a, b in zip(path, path[1:]):
        total += grid.edge(Edge.between(a, b))
    return total


def _sources(domain: Domain, sources) -> list[Site]:
    src = require_in(domain, sources)
    if not src:
        raise ParameterError("source set must be non-empty")
    return src


def passage_time_field(domain: Domain, weights: Weights, sources, *, forbidden=(),
                       forbidden_edges=(), time_limit: float = INF) -> PassageTimeField:
    """Minimal arrival time at every site of the domain from the source set."""
    src = _sources(domain, sources)
    grid = _restricted_grid(domain, weights, forbidden_edges)
    blocked = _blocked(domain, forbidden, src)
    dist, pred = search(grid, indices(domain, src), blocked, time_limit=time_limit)
    return PassageTimeField(domain, frozenset(src), dist.reshape(domain.shape),
                            pred.reshape(domain.shape))


def passage_time(domain: Domain, weights: Weights, sources, targets, *, forbidden=(),
                 forbidden_edges=()) -> tuple[float, Geodesic]:
    """Set-to-set passage time and one minimizing path (source end first)."""
    src = _sources(domain, sources)
    tgt = require_in(domain, targets)
    if not tgt:
        raise ParameterError("target set must be non-empty")
    grid = _restricted_grid(domain, weights, forbidden_edges)
    blocked = _blocked(domain, forbidden, src + tgt)
    t_idx = indices(domain, tgt)
    dist, pred = search(grid, indices(domain, src), blocked, targets=t_idx)
    best = None
    for i in t_idx:
        if best is None or dist[i] < dist[best] or (dist[i] == dist[best]
                                                      and K._lex_smaller(i, best, domain.width)):
            best = int(i)
    f = PassageTimeField(domain, frozenset(src), dist.reshape(domain.shape),
                         pred.reshape(domain.shape))
    site = domain.site(best)
    if math.isinf(dist[best]):
        return INF, Geodesic((), INF)
    return float(dist[best]), f.geodesic_to(site)


def restricted_passage_time(domain: Domain, weights: Weights, sources, targets,
                            forbidden=(), forbidden_edges=()) -> float:
    """Passage time over paths that avoid the forbidden sites (and edges) entirely."""
    return passage_time(domain, weights, sources, targets, forbidden=forbidden,
                        forbidden_edges=forbidden_edges)[0]


def scaled_passage_time(time: float, lam: float) -> float:
    """Passage time in the environment ``tau / lam`` from the one in ``tau``."""
    if not lam > 0:
        raise ParameterError(f"lambda must be > 0, got {lam}")
    return time / lam


def _restricted_grid(domain: Domain, weights: Weights, forbidden_edges) -> WeightGrid:
    grid = weight_grid(domain, weights)
    forbidden_edges = list(forbidden_edges)
    if forbidden_edges:
        grid = grid.with_edges({e: INF for e in forbidden_edges})
    return grid


def _blocked(domain: Domain, forbidden, endpoints) -> np.ndarray:
    blocked = np.zeros(domain.size, np.bool_)
    forbidden = set(map(Site._make, forbidden))
    if not forbidden:
        return blocked
    if forbidden & set(endpoints):
        raise ParameterError("sources and targets must be disjoint from the forbidden set")
    for s in forbidden:
        if s in domain:
            blocked[domain.index(s)] = True
    return blocked
