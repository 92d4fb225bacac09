"""Two-type Richardson competition under the shared-weight coupling.

Type 1 crosses an edge in ``tau(e)``, type 2 in ``tau(e) / lambda``, both on the
same replica.  A site goes to whichever type delivers the earliest arrival
along a path of sites already held by that type; claims are permanent.  With
exponential weights this label-setting race has the law of the continuous-time
model, so no per-site clocks are simulated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import ParameterError
from .fpp import Weights, indices, weight_grid
from .lattice import Domain, Site, require_in

UNINFECTED = 0


@dataclass(frozen=True)
class CompetitionConfig:
    domain: Domain
    weights: Weights
    lam: float = 1.0
    seeds1: frozenset = frozenset({Site(0, 0)})
    seeds2: frozenset = frozenset({Site(1, 0)})
    horizon: float = math.inf

    def __post_init__(self):
        s1 = frozenset(require_in(self.domain, self.seeds1))
        s2 = frozenset(require_in(self.domain, self.seeds2))
        object.__setattr__(self, "seeds1", s1)
        object.__setattr__(self, "seeds2", s2)
        if not s1 or not s2:
            raise ParameterError("both seed sets must be non-empty")
        if s1 & s2:
            raise ParameterError("seed sets must be disjoint")
        if not self.lam >= 1:
            raise ParameterError(f"lambda must be >= 1, got {self.lam}")

    def describe(self) -> dict:
        w = self.weights
        oracle = getattr(w, "seed", None)
        return {
            "domain": self.domain.to_dict(),
            "lambda": self.lam,
            "seeds1": sorted(map(list, self.seeds1)),
            "seeds2": sorted(map(list, self.seeds2)),
            "seed": oracle,
            "replica": getattr(w, "replica", None),
            "horizon": "inf" if math.isinf(self.horizon) else self.horizon,
        }


@dataclass(frozen=True)
class CompetitionResult:
    config: CompetitionConfig
    occupier: np.ndarray = field(repr=False)  # (height, width) int8: 0, 1, 2
    time: np.ndarray = field(repr=False)      # (height, width) claim times, inf if unclaimed

    @property
    def domain(self) -> Domain:
        return self.config.domain

    def type_at(self, site) -> int:
        x, y = site
        return int(self.occupier[y - self.domain.y0, x - self.domain.x0])

    def time_at(self, site) -> float:
        x, y = site
        return float(self.time[y - self.domain.y0, x - self.domain.x0])

    def sites_of(self, typ: int) -> list[Site]:
        ys, xs = np.nonzero(self.occupier == typ)
        return [Site(int(x) + self.domain.x0, int(y) + self.domain.y0) for y, x in zip(ys, xs)]

    def count(self, typ: int) -> int:
        return int(np.count_nonzero(self.occupier == typ))


def simulate(config: CompetitionConfig) -> CompetitionResult:
    dom = config.domain
    grid = weight_grid(dom, config.weights)
    occ, time = K.race(grid.wh, grid.wv, dom.width, dom.height,
                       indices(dom, sorted(config.seeds1)), indices(dom, sorted(config.seeds2)),
                       float(config.lam), float(config.horizon))
    return CompetitionResult(config, occ.reshape(dom.shape), time.reshape(dom.shape))


def claim_parents(result: CompetitionResult) -> np.ndarray:
    """Flat parent index of each claimed non-seed site in its type's claiming forest (-1 if none)."""
    dom = result.domain
    grid = weight_grid(dom, result.config.weights)
    return K.claim_parents(grid.wh, grid.wv, dom.width, dom.height, result.occupier.ravel(),
                           result.time.ravel(), float(result.config.lam))


def _shell(domain: Domain, radius: int) -> np.ndarray:
    """Mask of box sites at L-infinity distance exactly ``radius`` from the origin."""
    ys, xs = np.mgrid[domain.y0:domain.y1 + 1, domain.x0:domain.x1 + 1]
    return np.maximum(np.abs(xs), np.abs(ys)) == radius


def _check_ball(domain: Domain, radius: int) -> None:
    y_lo = 0 if domain.y0 == 0 and domain.kind.value != "full_plane" else -radius
    if radius < 1 or not (domain.x0 <= -radius and radius <= domain.x1
                          and domain.y0 <= y_lo and radius <= domain.y1):
        raise ParameterError(f"box {domain} does not contain the ball of radius {radius}")


def coexistence_proxy(result: CompetitionResult, radius: int) -> bool:
    """Both types hold a site at L-infinity distance exactly ``radius`` from the origin."""
    _check_ball(result.domain, radius)
    shell = result.occupier[_shell(result.domain, radius)]
    return bool(np.any(shell == 1) and np.any(shell == 2))


def strip_capture(result: CompetitionResult, k: int, x0: int = 0, ignore=frozenset()) -> bool:
    """Every half-strip site with ``x >= x0`` in the box (outside ``ignore``) is held by type 2."""
    dom = result.domain
    if dom.y0 > 0 or dom.y1 < k or dom.x1 < max(x0, 0):
        raise ParameterError(f"box {dom} does not cover the half-strip of height {k}")
    lo = max(x0, 0, dom.x0)
    block = result.occupier[0 - dom.y0:k + 1 - dom.y0, lo - dom.x0:]
    if not ignore:
        return bool(np.all(block == 2))
    mask = block == 2
    for s in ignore:
        x, y = s
        if lo <= x <= dom.x1 and 0 <= y <= k:
            mask[y, x - lo] = True
    return bool(np.all(mask))


def encircled(result: CompetitionResult) -> bool:
    """No type-1 site touches an artificial wall of the box."""
    dom = result.domain
    occ = result.occupier
    sides = dom.wall_sides()
    edges = []
    if "left" in sides:
        edges.append(occ[:, 0])
    if "right" in sides:
        edges.append(occ[:, -1])
    if "bottom" in sides:
        edges.append(occ[0, :])
    if "top" in sides:
        edges.append(occ[-1, :])
    return not any(np.any(e == 1) for e in edges)


# ---------------------------------------------------------------------------
# compact text encoding for small fixtures
# ---------------------------------------------------------------------------

_SYM = {0: ".", 1: "1", 2: "2"}


def encode_rle(result: CompetitionResult) -> str:
    """Rows top to bottom; each row is space-separated ``<count><symbol>`` runs."""
    dom = result.domain
    lines = [f"# x0={dom.x0} x1={dom.x1} y0={dom.y0} y1={dom.y1}"]
    for r in range(dom.height - 1, -1, -1):
        row = result.occupier[r]
        runs, start = [], 0
        for i in range(1, len(row) + 1):
            if i == len(row) or row[i] != row[start]:
                runs.append(f"{i - start}{_SYM[int(row[start])]}")
                start = i
        lines.append(" ".join(runs))
    return "\n".join(lines) + "\n"


def decode_rle(text: str) -> tuple[dict, np.ndarray]:
    lines = [ln for ln in text.strip().splitlines()]
    head = dict(kv.split("=") for kv in lines[0].lstrip("# ").split())
    head = {k: int(v) for k, v in head.items()}
    rows = []
    inv = {v: k for k, v in _SYM.items()}
    for ln in lines[1:]:
        row = []
        for run in ln.split():
            row.extend([inv[run[-1]]] * int(run[:-1]))
        rows.append(row)
    return head, np.array(rows[::-1], dtype=np.int8)
