"""Replayable unit-exponential edge weights.

A :class:`WeightOracle` is a pure function of ``(seed, stream, replica, edge)``.
Weights are never generated sequentially: each one hashes its key through a
SplitMix64-style mixer, so any box of any domain can be materialized lazily and
the same edge always gets the same weight.  One replica therefore couples all
intensities at once: type 2 uses ``tau / lambda`` on the very same ``tau``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import _kernels as K
from .errors import ParameterError
from .lattice import Axis, Domain, Edge, Site

_U64 = (1 << 64) - 1
_AXIS_CODE = {Axis.H: 0, Axis.V: 1}
_COORD_LIMIT = 1 << 31


class OverrideTable(Mapping):
    """Finite, immutable map from edges to positive weights, consulted before the oracle."""

    def __init__(self, entries: Mapping | Iterable = ()):
        items = dict(entries)
        clean = {}
        for e, w in items.items():
            if not isinstance(e, Edge):
                e = Edge(Site(*e[0]), Axis(e[1]))
            w = float(w)
            if not w > 0:
                raise ParameterError(f"override weight for {e} must be > 0, got {w}")
            clean[e] = w
        self._d = clean
        self._hash = hash(frozenset(clean.items()))

    def __getitem__(self, e):
        return self._d[e]

    def __iter__(self):
        return iter(self._d)

    def __len__(self):
        return len(self._d)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return isinstance(other, OverrideTable) and self._d == other._d

    def __repr__(self):
        return f"OverrideTable({len(self._d)} edges)"

    def __reduce__(self):
        # rebuild on unpickling: str hashes differ between processes
        return OverrideTable, (self._d,)

    def merged(self, other: Mapping) -> "OverrideTable":
        d = dict(self._d)
        d.update(other)
        return OverrideTable(d)


NO_OVERRIDES = OverrideTable()


@dataclass(frozen=True)
class WeightOracle:
    seed: int
    replica: int = 0
    stream: int = 0
    overrides: OverrideTable = field(default=NO_OVERRIDES, compare=True)

    def __post_init__(self):
        for name in ("seed", "replica", "stream"):
            v = getattr(self, name)
            if not 0 <= v <= _U64:
                raise ParameterError(f"{name} must fit in an unsigned 64-bit integer")

    @property
    def key(self) -> np.uint64:
        k = K.stream_key(np.uint64(self.seed), np.uint64(self.stream), np.uint64(self.replica))
        return np.uint64(k)

    def with_overrides(self, table: Mapping) -> "WeightOracle":
        return WeightOracle(self.seed, self.replica, self.stream, self.overrides.merged(table))

    def resampled(self, stream: int = 1) -> "WeightOracle":
        """An independent family on the same replica (used for local resampling)."""
        return WeightOracle(self.seed, self.replica, stream)

    def for_replica(self, replica: int) -> "WeightOracle":
        return WeightOracle(self.seed, replica, self.stream, self.overrides)


def _check_coords(x: int, y: int) -> None:
    if not (-_COORD_LIMIT < x < _COORD_LIMIT and -_COORD_LIMIT < y < _COORD_LIMIT):
        raise ParameterError("lattice coordinates must lie within +-2**31")


def raw_weight(oracle: WeightOracle, e: Edge) -> float:
    """The oracle draw for ``e``, ignoring overrides."""
    x, y = e.origin
    _check_coords(x, y)
    return float(K.edge_exp(oracle.key, x, y, _AXIS_CODE[Axis(e.axis)]))


def edge_weight(oracle: WeightOracle, e: Edge) -> float:
    """``-log(1 - u)`` for the counter-based uniform ``u`` of this edge (overrides first)."""
    e = Edge(Site(*e.origin), Axis(e.axis))
    if e in oracle.overrides:
        return oracle.overrides[e]
    return raw_weight(oracle, e)


def check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam > 0:
        raise ParameterError(f"lambda must be > 0, got {lam}")
    if lam < 1:
        warnings.warn("lambda < 1: the model is usually normalised so that type 2 is the "
                      "stronger type (lambda >= 1)", stacklevel=3)
    return lam


def scaled_weight(oracle: WeightOracle, e: Edge, lam: float) -> float:
    """Traversal time of ``e`` for the type spreading at intensity ``lam``."""
    lam = check_lambda(lam)
    return edge_weight(oracle, e) / lam


@dataclass(frozen=True)
class WeightGrid:
    """Materialized weights of one box: ``wh``/``wv`` flattened row-major (east and north edges)."""

    domain: Domain
    wh: np.ndarray
    wv: np.ndarray

    def edge(self, e: Edge) -> float:
        a, b = e.endpoints
        if a not in self.domain or b not in self.domain:
            raise ParameterError(f"{e} is not inside {self.domain}")
        i = self.domain.index(a)
        return float(self.wh[i] if e.axis is Axis.H else self.wv[i])

    def scaled(self, lam: float) -> "WeightGrid":
        return WeightGrid(self.domain, self.wh / lam, self.wv / lam)

    def with_edges(self, values: Mapping) -> "WeightGrid":
        wh, wv = self.wh.copy(), self.wv.copy()
        _apply(self.domain, wh, wv, values)
        return WeightGrid(self.domain, wh, wv)

    def sub(self, domain: Domain) -> "WeightGrid":
        """Restrict to a sub-box; edges leaving the sub-box become inf."""
        if not self.domain.contains_box(domain):
            raise ParameterError(f"{domain} is not inside {self.domain}")
        H, W = self.domain.shape
        r0, c0 = domain.y0 - self.domain.y0, domain.x0 - self.domain.x0
        sl = np.s_[r0:r0 + domain.height, c0:c0 + domain.width]
        wh = self.wh.reshape(H, W)[sl].copy()
        wv = self.wv.reshape(H, W)[sl].copy()
        wh[:, -1] = np.inf
        wv[-1, :] = np.inf
        return WeightGrid(domain, wh.ravel(), wv.ravel())


def _apply(domain: Domain, wh: np.ndarray, wv: np.ndarray, values: Mapping) -> None:
    for e, w in values.items():
        a, b = e.endpoints
        if a in domain and b in domain:
            i = domain.index(a)
            if e.axis is Axis.H:
                wh[i] = w
            else:
                wv[i] = w


def materialize(oracle: WeightOracle, domain: Domain) -> WeightGrid:
    """All edge weights of the box, keyed by absolute coordinates."""
    _check_coords(domain.x0, domain.y0)
    _check_coords(domain.x1, domain.y1)
    wh, wv = K.fill_weights(oracle.key, domain.x0, domain.y0, domain.width, domain.height)
    if len(oracle.overrides):
        _apply(domain, wh, wv, oracle.overrides)
    return WeightGrid(domain, wh, wv)


def box_edges(domain: Domain) -> list[Edge]:
    out = []
    for y in range(domain.y0, domain.y1 + 1):
        for x in range(domain.x0, domain.x1 + 1):
            if x < domain.x1:
                out.append(Edge(Site(x, y), Axis.H))
            if y < domain.y1:
                out.append(Edge(Site(x, y), Axis.V))
    return out


def write_golden_csv(path, oracle: WeightOracle, edges: Iterable[Edge]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "axis", "weight"])
        for e in edges:
            w.writerow([e.origin.x, e.origin.y, Axis(e.axis).value, repr(edge_weight(oracle, e))])


def read_golden_csv(path) -> dict[Edge, float]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {Edge(Site(int(r["x"]), int(r["y"])), Axis(r["axis"])): float(r["weight"]) for r in rows}
