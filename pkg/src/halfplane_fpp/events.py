"""Monte Carlo frequencies of the events used in the coexistence argument.

Every "for all n" event is truncated at an explicit horizon and every region
is cut down to a finite half-plane box ``[-r, r] x [0, r]`` (``box=r``).  The
implication checks are exact statements about the truncated process, so a
single counterexample is a bug, not noise; counterexamples are returned with
the seed and replica needed to replay them.
"""

from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy import special, stats

from .asymptotics import default_pad
from .competition import (CompetitionConfig, coexistence_proxy, simulate, strip_capture)
from .errors import ParameterError
from .fpp import indices, search
from .lattice import (Axis, Domain, Edge, LineSpec, RegionSpec, Site, axis_site, boundary_R,
                      digitize_ray, in_R, lambda_edge_set, omega_edge_sets,
                      origin_unique_on_axis, region_mask)
from .replicas import map_replicas
from .weights import NO_OVERRIDES, OverrideTable, WeightGrid, WeightOracle, materialize

EVENT_NAMES = ("F", "F_bar_m", "O", "O_prime", "G", "D_m", "D_prime_m", "E_mt", "E_prime_mt",
               "H_m", "C_joint", "Q", "G_line")

_REQUIRED = {
    "F": ("epsilon", "horizon"),
    "F_bar_m": ("epsilon", "horizon", "m"),
    "O": ("delta",),
    "O_prime": ("delta", "m"),
    "Q": ("epsilon", "t", "ell_prime"),
    "G": ("epsilon", "lam", "k"),
    "D_m": ("epsilon", "lam", "k", "m", "t", "mu", "mu_k"),
    "D_prime_m": ("epsilon", "lam", "k", "m", "t", "mu", "mu_k"),
    "E_mt": ("epsilon", "k", "m", "t"),
    "E_prime_mt": ("epsilon", "lam", "k", "m", "t"),
    "H_m": ("lam", "k", "m"),
    "C_joint": ("epsilon", "m", "delta"),
    "G_line": ("lam", "k", "m", "alpha"),
}
_NEEDS_STRONGER_TYPE2 = {"G", "D_m", "D_prime_m", "H_m", "G_line"}


@dataclass(frozen=True)
class EventSpec:
    """Event name plus its parameters; ``epsilon`` and ``theta`` are angles in radians."""

    name: str
    epsilon: float | None = None
    theta: float = 0.0
    lam: float = 1.0
    k: int | None = None
    m: int | None = None
    t: float | None = None
    delta: float | None = None
    ell_prime: int | None = None
    horizon: int | None = None
    box: int | None = None
    mu: float | None = None
    mu_k: float | None = None
    alpha: float | None = None
    prefix: int | None = None
    type1_sites: tuple | None = None
    conditioned: bool = False

    def __post_init__(self):
        if self.name not in EVENT_NAMES:
            raise ParameterError(f"unknown event {self.name!r}; expected one of {EVENT_NAMES}")
        missing = [p for p in _REQUIRED[self.name] if getattr(self, p) is None]
        if missing:
            raise ParameterError(f"event {self.name} needs {', '.join(missing)}")
        if self.horizon is not None and self.horizon < 1:
            raise ParameterError("horizon must be >= 1")
        if self.name in _NEEDS_STRONGER_TYPE2 and not self.lam > 1:
            raise ParameterError(f"event {self.name} needs lambda > 1")
        if not self.lam >= 1:
            raise ParameterError("lambda must be >= 1")
        for p in ("k", "m", "ell_prime", "box"):
            v = getattr(self, p)
            if v is not None and v < 0:
                raise ParameterError(f"{p} must be >= 0")
        for p in ("t", "delta"):
            v = getattr(self, p)
            if v is not None and not v > 0:
                raise ParameterError(f"{p} must be > 0")
        if self.type1_sites is not None:
            object.__setattr__(self, "type1_sites", tuple(Site(*s) for s in self.type1_sites))
        if self.epsilon is not None:
            self.region  # validates the angles

    @classmethod
    def with_tan(cls, name: str, epsilon_tan: float, **kw) -> "EventSpec":
        return cls(name, epsilon=math.atan(epsilon_tan), **kw)

    @property
    def region(self) -> RegionSpec:
        return RegionSpec(self.theta, self.epsilon)

    def replace(self, **kw) -> "EventSpec":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(kw)
        return EventSpec(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.type1_sites is not None:
            d["type1_sites"] = [list(s) for s in self.type1_sites]
        return {k: v for k, v in d.items() if v is not None}


@dataclass(frozen=True)
class FrequencyReport:
    name: str
    successes: int
    trials: int
    params: dict = field(default_factory=dict)
    outcomes: np.ndarray | None = field(default=None, repr=False, compare=False)
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.trials < 1 or not 0 <= self.successes <= self.trials:
            raise ParameterError("need 0 <= successes <= trials and trials >= 1")

    @property
    def p_hat(self) -> float:
        return self.successes / self.trials

    @property
    def stderr(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1 - p) / self.trials)

    @property
    def wilson95(self) -> tuple[float, float]:
        return wilson_interval(self.successes, self.trials)

    @classmethod
    def from_outcomes(cls, name, outcomes, params=None, extra=None) -> "FrequencyReport":
        o = np.asarray(outcomes, dtype=bool)
        return cls(name, int(o.sum()), int(o.size), dict(params or {}), o, dict(extra or {}))

    def to_dict(self) -> dict:
        lo, hi = self.wilson95
        return {"name": self.name, "successes": self.successes, "trials": self.trials,
                "p_hat": self.p_hat, "wilson95": [lo, hi], "params": self.params,
                **self.extra}


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(level, method="wilson")
    return float(ci.low), float(ci.high)


def analytic_z(report: FrequencyReport, p: float) -> float:
    """Deviation of ``p_hat`` from an analytic probability in units of its binomial stderr."""
    se = math.sqrt(p * (1 - p) / report.trials)
    if se == 0:
        return 0.0 if report.p_hat == p else math.inf
    return (report.p_hat - p) / se


def _replicas(replicas: int, first_replica: int) -> range:
    if replicas < 1:
        raise ParameterError("replicas must be >= 1")
    return range(first_replica, first_replica + replicas)


def _oracle(seed, replica, overrides) -> WeightOracle:
    if overrides is not None and not isinstance(overrides, OverrideTable):
        overrides = OverrideTable(overrides)
    return WeightOracle(seed, replica, overrides=overrides or NO_OVERRIDES)


def _box(r: int) -> Domain:
    if r < 2:
        raise ParameterError("box must be >= 2")
    return Domain.half_plane(-r, r, r)


def _edge_values(grid: WeightGrid, edges) -> np.ndarray:
    return np.array([grid.edge(e) for e in edges])


def _nested(ok: np.ndarray) -> np.ndarray:
    """``out[j]`` is True iff ``ok[:j + 1]`` are all True (rows are replicas)."""
    return np.logical_and.accumulate(ok, axis=-1)


# ---------------------------------------------------------------------------
# F and its mirror image
# ---------------------------------------------------------------------------

def _geodesic_race(grid: WeightGrid, anchor: Site, others: np.ndarray, targets) -> np.ndarray:
    """``T(anchor, z) < T(others, z)`` for each target ``z``."""
    dom = grid.domain
    t_idx = indices(dom, targets)
    d0, _ = search(grid, indices(dom, [anchor]), targets=t_idx)
    dr, _ = search(grid, others, targets=t_idx)
    return d0[t_idx] < dr[t_idx]


def _others(mask: np.ndarray, dom: Domain, anchor: Site) -> np.ndarray:
    flat = mask.ravel().copy()
    flat[dom.index(anchor)] = False
    return np.flatnonzero(flat).astype(np.int64)


def f_outcomes(grid: WeightGrid, region: RegionSpec, horizon: int) -> np.ndarray:
    """Per ``n = 1..horizon``: ``T(-n, 0) < T(-n, R minus 0)`` inside the grid's box.

    The weights are undirected, so both sides are read off two searches started
    from ``0`` and from ``R minus 0``.
    """
    dom = grid.domain
    others = _others(region_mask(region, dom), dom, Site(0, 0))
    return _geodesic_race(grid, Site(0, 0), others, [axis_site(-n) for n in range(1, horizon + 1)])


def f_bar_outcomes(grid: WeightGrid, region: RegionSpec, m: int, horizon: int) -> np.ndarray:
    """Mirror image of :func:`f_outcomes` anchored at ``(m, 0)``, targets ``m + n``."""
    dom = grid.domain
    anchor = axis_site(m)
    others = _others(region_mask(region, dom, reflect_about=m), dom, anchor)
    return _geodesic_race(grid, anchor, others, [axis_site(m + n) for n in range(1, horizon + 1)])


def _default_f_box(spec: EventSpec, reach: int) -> int:
    return spec.box if spec.box is not None else reach + default_pad(reach)


def _f_replica(replica, seed, spec, overrides, r) -> np.ndarray:
    grid = materialize(_oracle(seed, replica, overrides), _box(r))
    if spec.name == "F":
        return f_outcomes(grid, spec.region, spec.horizon)
    return f_bar_outcomes(grid, spec.region, spec.m, spec.horizon)


def run_event_F(spec: EventSpec, replicas: int, seed: int, overrides=None, first_replica=0,
                workers=1) -> FrequencyReport:
    """Frequency of the truncated event; ``extra['nested']`` gives ``p_hat`` for every horizon up to N."""
    if spec.name not in ("F", "F_bar_m"):
        raise ParameterError("run_event_F handles F and F_bar_m")
    reach = spec.horizon + (spec.m if spec.name == "F_bar_m" else 0)
    r = _default_f_box(spec, reach)
    if reach > r:
        raise ParameterError(f"box {r} does not contain the horizon targets (need {reach})")
    fn = functools.partial(_f_replica, seed=seed, spec=spec, overrides=overrides, r=r)
    ok = np.array(map_replicas(fn, _replicas(replicas, first_replica), workers))
    nested = _nested(ok)
    table = [{"horizon": n, "p_hat": float(nested[:, n - 1].mean())}
             for n in _horizon_grid(spec.horizon)]
    params = {**spec.to_dict(), "box": r, "seed": seed, "replicas": replicas,
              "first_replica": first_replica}
    return FrequencyReport.from_outcomes(spec.name, nested[:, -1], params, {"nested": table})


def _horizon_grid(n: int) -> list[int]:
    out, h = [], 1
    while h < n:
        out.append(h)
        h *= 2
    return out + [n]


# ---------------------------------------------------------------------------
# closed-form events
# ---------------------------------------------------------------------------

def origin_edges() -> list[Edge]:
    """The three half-plane edges at the origin (east, west, north)."""
    o = Site(0, 0)
    return [Edge.between(o, Site(1, 0)), Edge.between(Site(-1, 0), o), Edge.between(o, Site(0, 1))]


def axis_edges(m: int) -> list[Edge]:
    """The ``m - 1`` axis edges from ``(1, 0)`` to ``(m, 0)``."""
    return [Edge(Site(j, 0), Axis.H) for j in range(1, m)]


def prob_O(delta: float) -> float:
    return math.exp(-3 * delta)


def prob_O_prime(delta: float, m: int) -> float:
    return float(stats.gamma.cdf(delta / 2, m - 1))


def prob_Q(t: float, size: int) -> float:
    return math.exp(-t * size)


def prob_E(t: float, k: int, m: int, size: int) -> float:
    return math.exp(-t * k * m * size)


def prob_E_prime(t: float, lam: float, size: int) -> float:
    return (1 - math.exp(-lam * t)) ** size


def _check_omega(spec: EventSpec):
    if spec.m < 2 or spec.k < 2:
        raise ParameterError("the strip construction needs m >= 2 and k >= 2")
    region = spec.region
    if not origin_unique_on_axis(region):
        raise ParameterError("epsilon too large: the origin is not the only axis site of the boundary")
    omega, inner = omega_edge_sets(region, spec.m, spec.k)
    entry_x = max(max(e.origin.x, e.head.x) for e in omega)
    if entry_x > spec.m:
        raise ParameterError(f"type 1 can enter the strip beyond x = m (at x = {entry_x}); raise m")
    return sorted(omega), sorted(inner)


def _edges_box(edges) -> Domain:
    xs = [x for e in edges for x in (e.origin.x, e.head.x)]
    ys = [y for e in edges for y in (e.origin.y, e.head.y)]
    return Domain.half_plane(min(xs), max(xs), max(ys))


def _closed_form_replica(replica, seed, spec, overrides, extra) -> bool:
    oracle = _oracle(seed, replica, overrides)
    name = spec.name
    if name == "Q":
        oracle = oracle.resampled(1)
        edges = extra
        grid = materialize(oracle, _edges_box(edges))
        return bool(np.all(_edge_values(grid, edges) > spec.t))
    if name == "O":
        grid = materialize(oracle, Domain.half_plane(-1, 1, 1))
        return bool(np.all(_edge_values(grid, origin_edges()) >= spec.delta))
    if name == "O_prime":
        grid = materialize(oracle, Domain.half_plane(1, spec.m, 0))
        return bool(_edge_values(grid, axis_edges(spec.m)).sum() <= spec.delta / 2)
    omega, inner = extra
    if name == "E_mt":
        grid = materialize(oracle, _edges_box(omega))
        return bool(np.all(_edge_values(grid, omega) > spec.t * spec.k * spec.m))
    grid = materialize(oracle, _edges_box(inner))
    return bool(np.all(_edge_values(grid, inner) / spec.lam < spec.t))


def run_closed_form(spec: EventSpec, replicas: int, seed: int, overrides=None, first_replica=0,
                    workers=1) -> FrequencyReport:
    """Frequency of O, O', Q, E_mt or E'_mt next to its exact probability."""
    name = spec.name
    if name == "Q":
        edges = sorted(lambda_edge_set(spec.region, spec.ell_prime))
        if not edges:
            raise ParameterError("the edge set is empty for these parameters")
        extra, p, size = edges, prob_Q(spec.t, len(edges)), len(edges)
    elif name == "O":
        extra, p, size = None, prob_O(spec.delta), 3
    elif name == "O_prime":
        if spec.m < 2:
            raise ParameterError("O_prime needs m >= 2")
        extra, p, size = None, prob_O_prime(spec.delta, spec.m), spec.m - 1
    elif name in ("E_mt", "E_prime_mt"):
        omega, inner = _check_omega(spec)
        extra = (omega, inner)
        if name == "E_mt":
            p, size = prob_E(spec.t, spec.k, spec.m, len(omega)), len(omega)
        else:
            p, size = prob_E_prime(spec.t, spec.lam, len(inner)), len(inner)
    else:
        raise ParameterError(f"{name} has no closed form")
    fn = functools.partial(_closed_form_replica, seed=seed, spec=spec, overrides=overrides,
                           extra=extra)
    ok = map_replicas(fn, _replicas(replicas, first_replica), workers)
    params = {**spec.to_dict(), "seed": seed, "replicas": replicas,
              "first_replica": first_replica}
    rep = FrequencyReport.from_outcomes(name, ok, params, {"analytic_p": p, "edge_count": size})
    rep.extra["z"] = analytic_z(rep, p)
    return rep


# ---------------------------------------------------------------------------
# two-type capture of the half-strip
# ---------------------------------------------------------------------------

def strip_seeds(region: RegionSpec, dom: Domain) -> list[Site]:
    """Initial type-1 sites: the inner boundary of R inside the box, minus the origin."""
    return [s for s in boundary_R(region, dom.y1) if s in dom and s != Site(0, 0)]


def _strip_ignore(region: RegionSpec, dom: Domain, k: int, seeds1) -> set:
    # initially occupied sites, plus L sites (walled off from the uninfected part of R)
    out = set(seeds1)
    for y in range(0, k + 1):
        for x in range(0, dom.x1 + 1):
            if not in_R(region, (x, y)):
                out.add(Site(x, y))
    return out


def _g_box(spec: EventSpec) -> int:
    if spec.box is not None:
        return spec.box
    return max(64, 4 * (spec.m or 0), 4 * spec.k)


def _g_replica(replica, seed, spec, overrides, r) -> bool:
    dom = _box(r)
    region = spec.region
    seeds1 = strip_seeds(region, dom)
    grid = materialize(_oracle(seed, replica, overrides), dom)
    res = simulate(CompetitionConfig(dom, grid, spec.lam, frozenset(seeds1), frozenset({Site(0, 0)})))
    return strip_capture(res, spec.k, x0=1, ignore=_strip_ignore(region, dom, spec.k, seeds1))


def run_event_G(spec: EventSpec, replicas: int, seed: int, overrides=None, first_replica=0,
                workers=1) -> FrequencyReport:
    """Type 2 at 0 against type 1 on the rest of the inner boundary of R: does type 2 take the strip?"""
    if spec.name != "G":
        raise ParameterError("run_event_G handles G")
    if spec.k < 1:
        raise ParameterError("k must be >= 1")
    r = _g_box(spec)
    if r <= spec.k:
        raise ParameterError("box must be taller than the strip")
    fn = functools.partial(_g_replica, seed=seed, spec=spec, overrides=overrides, r=r)
    ok = map_replicas(fn, _replicas(replicas, first_replica), workers)
    params = {**spec.to_dict(), "box": r, "seed": seed, "replicas": replicas,
              "first_replica": first_replica}
    return FrequencyReport.from_outcomes("G", ok, params)


def rho_delta(mu: float, mu_k: float, lam: float) -> tuple[float, float]:
    """``delta = (mu - mu_k / lam) / 4`` and ``rho = mu_k / lam + 2 delta``."""
    delta = (mu - mu_k / lam) / 4
    if not delta > 0:
        raise ParameterError(f"need mu_k / lambda < mu (got mu={mu}, mu_k={mu_k}, lambda={lam}); "
                             "raise k or lambda")
    return mu_k / lam + 2 * delta, delta


def _de_replica(replica, seed, spec, overrides, r, omega, inner, rho, delta) -> tuple:
    dom = _box(r)
    region = spec.region
    k, m, t, lam = spec.k, spec.m, spec.t, spec.lam
    grid = materialize(_oracle(seed, replica, overrides), dom)
    if spec.conditioned:
        # tau given tau > s is s + tau' with tau' ~ Exp(1): exact conditional law of E_mt
        grid = grid.with_edges({e: grid.edge(e) + t * k * m for e in omega})
    seeds1 = strip_seeds(region, dom)
    boundary = seeds1 + [Site(0, 0)]
    ns = np.arange(m, r + 1)
    tops = indices(dom, [Site(int(n), k) for n in ns])
    d_b, _ = search(grid, indices(dom, boundary), targets=tops)
    D = bool(np.all(d_b[tops] > (rho + delta) * ns))
    strip = Domain.strip(k, -r, r)
    sg = grid.sub(strip)
    blocked = np.zeros(strip.size, np.bool_)
    for s in seeds1:
        if s in strip:
            blocked[strip.index(s)] = True
    stops = indices(strip, [Site(int(n), k) for n in ns])
    d_s, _ = search(sg, indices(strip, [Site(0, 0)]), blocked, targets=stops)
    Dp = bool(np.all(d_s[stops] / lam < (rho - delta) * ns))
    E = bool(np.all(_edge_values(grid, omega) > t * k * m))
    Ep = bool(np.all(_edge_values(grid, inner) / lam < t))
    res = simulate(CompetitionConfig(dom, grid, lam, frozenset(seeds1), frozenset({Site(0, 0)})))
    cap = strip_capture(res, k, x0=1, ignore=_strip_ignore(region, dom, k, seeds1))
    return D, Dp, E, Ep, cap


def run_events_DE(spec: EventSpec, replicas: int, seed: int, overrides=None, first_replica=0,
                  workers=1) -> dict:
    """Joint evaluation of D_m, D'_m, E_mt, E'_mt and strip capture, with the implication check.

    With ``spec.conditioned`` the weights on the entry edges are drawn from
    their law given ``E_mt``, which makes the conjunction frequent enough to
    test the implication; the other frequencies are then conditional on E_mt.
    """
    if spec.mu is None or spec.mu_k is None:
        raise ParameterError("mu and mu_k are required (read them from prior estimates)")
    omega, inner = _check_omega(spec)
    rho, delta = rho_delta(spec.mu, spec.mu_k, spec.lam)
    r = _g_box(spec)
    if r < spec.m + 1:
        raise ParameterError("box must extend beyond x = m")
    fn = functools.partial(_de_replica, seed=seed, spec=spec, overrides=overrides, r=r,
                           omega=omega, inner=inner, rho=rho, delta=delta)
    reps = list(_replicas(replicas, first_replica))
    rows = np.array(map_replicas(fn, reps, workers), dtype=bool)
    D, Dp, E, Ep, cap = rows.T
    conj = D & Dp & E & Ep
    bad = conj & ~cap
    params = {**spec.to_dict(), "box": r, "rho": rho, "delta_hat": delta, "seed": seed,
              "replicas": replicas, "first_replica": first_replica,
              "omega_size": len(omega), "omega_prime_size": len(inner)}
    reports = {
        "D_m": FrequencyReport.from_outcomes("D_m", D, params),
        "D_prime_m": FrequencyReport.from_outcomes("D_prime_m", Dp, params),
        "E_mt": FrequencyReport.from_outcomes("E_mt", E, params),
        "E_prime_mt": FrequencyReport.from_outcomes("E_prime_mt", Ep, params),
        "D_and_D_prime": FrequencyReport.from_outcomes("D_and_D_prime", D & Dp, params),
        "conjunction": FrequencyReport.from_outcomes("conjunction", conj, params),
        "strip_capture": FrequencyReport.from_outcomes("strip_capture", cap, params),
    }
    if not spec.conditioned:
        reports["E_mt"].extra["analytic_p"] = prob_E(spec.t, spec.k, spec.m, len(omega))
    reports["E_prime_mt"].extra["analytic_p"] = prob_E_prime(spec.t, spec.lam, len(inner))
    counter = [{"seed": seed, "replica": reps[i], "spec": spec.to_dict(), "box": r}
               for i in np.flatnonzero(bad)]
    return {"reports": reports, "conjunction_count": int(conj.sum()),
            "counterexamples": counter, "params": params}


# ---------------------------------------------------------------------------
# the coexistence construction
# ---------------------------------------------------------------------------

def condition_on_O(grid: WeightGrid, delta: float) -> WeightGrid:
    """Origin edges from their law given ``tau >= delta`` (shift by delta)."""
    return grid.with_edges({e: grid.edge(e) + delta for e in origin_edges()})


def condition_on_O_prime(grid: WeightGrid, delta: float, m: int) -> WeightGrid:
    """Axis edges ``1..m`` from their law given that their sum is at most ``delta / 2``.

    The sum S of ``m - 1`` unit exponentials is Gamma(m - 1) and independent of
    the proportions ``tau_j / S``; mapping S through the quantile function of
    its truncated law keeps the proportions and gives the exact conditional law.
    """
    edges = axis_edges(m)
    w = _edge_values(grid, edges)
    s = w.sum()
    a = m - 1
    cap = special.gammainc(a, delta / 2)
    s_new = special.gammaincinv(a, special.gammainc(a, s) * cap)
    s_new = min(s_new, delta / 2)
    return grid.with_edges({e: float(v) for e, v in zip(edges, w * (s_new / s))})


def _coex_replica(replica, seed, spec, overrides, r) -> tuple:
    dom = _box(r)
    m, delta = spec.m, spec.delta
    grid = materialize(_oracle(seed, replica, overrides), dom)
    if spec.conditioned:
        grid = condition_on_O_prime(condition_on_O(grid, delta), delta, m)
    O = bool(np.all(_edge_values(grid, origin_edges()) >= delta))
    Op = bool(_edge_values(grid, axis_edges(m)).sum() <= delta / 2)
    F = bool(np.all(f_outcomes(grid, spec.region, r)))
    Fb = bool(np.all(f_bar_outcomes(grid, spec.region, m, r - m)))
    res = simulate(CompetitionConfig(dom, grid, 1.0, frozenset({Site(0, 0)}),
                                     frozenset({Site(1, 0)})))
    return F, Fb, O, Op, coexistence_proxy(res, r)


def run_event_coex_construction(spec: EventSpec, replicas: int, seed: int, overrides=None,
                                first_replica=0, workers=1) -> dict:
    """F, mirrored F at m, O and O' on one replica each, and the check that together they force coexistence."""
    if spec.name != "C_joint":
        raise ParameterError("run_event_coex_construction handles C_joint")
    if spec.lam != 1:
        raise ParameterError("the construction is for lambda = 1")
    if spec.m < 2:
        raise ParameterError("m must be >= 2")
    r = spec.box if spec.box is not None else 64
    if r <= spec.m:
        raise ParameterError("box must exceed m")
    fn = functools.partial(_coex_replica, seed=seed, spec=spec, overrides=overrides, r=r)
    reps = list(_replicas(replicas, first_replica))
    rows = np.array(map_replicas(fn, reps, workers), dtype=bool)
    F, Fb, O, Op, prox = rows.T
    triple = F & Fb & O
    conj = triple & Op
    params = {**spec.to_dict(), "box": r, "horizon_F": r, "horizon_F_bar": r - spec.m,
              "seed": seed, "replicas": replicas, "first_replica": first_replica}
    rep = {name: FrequencyReport.from_outcomes(name, arr, params)
           for name, arr in [("F", F), ("F_bar_m", Fb), ("O", O), ("O_prime", Op),
                             ("F_Fbar_O", triple), ("C_joint", conj), ("coexistence_proxy", prox)]}
    out = {"reports": rep, "conjunction_count": int(conj.sum()),
           "counterexamples": [{"seed": seed, "replica": reps[i], "spec": spec.to_dict(), "box": r}
                               for i in np.flatnonzero(conj & ~prox)],
           "params": params}
    if not spec.conditioned:
        rep["O"].extra["analytic_p"] = prob_O(spec.delta)
        rep["O_prime"].extra["analytic_p"] = prob_O_prime(spec.delta, spec.m)
        a, b = rep["F_Fbar_O"], rep["O_prime"]
        prod = a.p_hat * b.p_hat
        se = math.sqrt(max(rep["C_joint"].stderr ** 2 + (a.stderr * b.p_hat) ** 2
                           + (b.stderr * a.p_hat) ** 2, 1e-300))
        out["factorization"] = {"product": prod, "joint": rep["C_joint"].p_hat,
                                "z": (rep["C_joint"].p_hat - prod) / se}
    return out


# ---------------------------------------------------------------------------
# H_m and the line capture
# ---------------------------------------------------------------------------

def h_initial(k: int, prefix: int) -> tuple[list[Site], list[Site]]:
    """Type 2 on the strip prefix ``x <= prefix``; type 1 just above it and just left of it."""
    seeds2 = [Site(x, y) for y in range(k + 1) for x in range(prefix + 1)]
    seeds1 = [Site(x, k + 1) for x in range(prefix + 1)] + [Site(-1, y) for y in range(k + 2)]
    return seeds1, seeds2


def _h_replica(replica, seed, spec, overrides, r, m_list, seeds1, seeds2) -> list:
    dom = _box(r)
    grid = materialize(_oracle(seed, replica, overrides), dom)
    res = simulate(CompetitionConfig(dom, grid, spec.lam, frozenset(seeds1), frozenset(seeds2)))
    occ, time = res.occupier, res.time
    out = []
    for m in m_list:
        col = m - dom.x0
        s = time[spec.k, col] if occ[spec.k, col] == 2 else math.inf
        t1 = time[:, col][occ[:, col] == 1]
        out.append(bool(math.isfinite(s) and (t1.size == 0 or t1.min() > s)))
    out.append(strip_capture(res, spec.k, x0=0))
    return out


def run_event_H(spec: EventSpec, replicas: int, seed: int, m_list=None, overrides=None,
                first_replica=0, workers=1) -> dict:
    """Type 2 reaches ``(m, k)`` before type 1 touches the column ``x = m``; one race serves every m."""
    if spec.name != "H_m":
        raise ParameterError("run_event_H handles H_m")
    m_list = sorted(set(m_list or [spec.m]))
    prefix = spec.k if spec.prefix is None else spec.prefix
    if prefix >= m_list[0]:
        raise ParameterError("the type-2 prefix must end before x = m")
    seeds1, seeds2 = h_initial(spec.k, prefix)
    if spec.type1_sites is not None:
        seeds1 = list(spec.type1_sites)
    r = spec.box if spec.box is not None else 2 * m_list[-1]
    if r <= max(m_list[-1], spec.k + 1):
        raise ParameterError("box too small for m and k")
    fn = functools.partial(_h_replica, seed=seed, spec=spec, overrides=overrides, r=r,
                           m_list=m_list, seeds1=seeds1, seeds2=seeds2)
    rows = np.array(map_replicas(fn, _replicas(replicas, first_replica), workers), dtype=bool)
    cap = rows[:, -1]
    params = {**spec.to_dict(), "box": r, "prefix": prefix, "seed": seed, "replicas": replicas,
              "first_replica": first_replica}
    table = []
    for j, m in enumerate(m_list):
        rep = FrequencyReport.from_outcomes("H_m", rows[:, j], {**params, "m": m})
        cond = None
        if cap.any():
            cond = FrequencyReport.from_outcomes("H_m_given_capture", rows[cap, j], {**params, "m": m})
        table.append({"m": m, "report": rep, "given_capture": cond})
    trend = [row["given_capture"].p_hat if row["given_capture"] else None for row in table]
    return {"table": table, "strip_capture": FrequencyReport.from_outcomes("strip_capture", cap, params),
            "increasing_given_capture": (None if None in trend
                                         else all(b >= a for a, b in zip(trend, trend[1:]))),
            "params": params}


def _line_replica(replica, seed, spec, overrides, r, line_sites) -> bool:
    dom = _box(r)
    m, k = spec.m, spec.k
    grid = materialize(_oracle(seed, replica, overrides), dom)
    seeds1 = frozenset(Site(m, y) for y in range(dom.y1 + 1) if y != k)
    res = simulate(CompetitionConfig(dom, grid, spec.lam, seeds1, frozenset({Site(m, k)})))
    return all(res.type_at(s) == 2 for s in line_sites)


def run_event_line_capture(spec: EventSpec, replicas: int, seed: int, overrides=None,
                           first_replica=0, workers=1) -> FrequencyReport:
    """Type 2 at ``(m, k)``, type 1 on the rest of the column ``x = m``: does type 2 take the
    digitized ray from ``(m, k)`` at angle ``2 alpha`` up to the box wall?

    This is a finite stand-in for the cone-capture events; the lattice has no
    rotation taking it to the strip capture, so it is flagged as an approximation.
    """
    if spec.name != "G_line":
        raise ParameterError("run_event_line_capture handles G_line")
    r = spec.box if spec.box is not None else 64
    line = LineSpec.strip_corner_ray(spec.m, spec.k, spec.alpha)
    dom = _box(r)
    sites = [s for s in digitize_ray(line, 4 * r) if s in dom and s != Site(spec.m, spec.k)]
    if not Site(spec.m, spec.k) in dom or not sites:
        raise ParameterError("box does not contain the ray")
    fn = functools.partial(_line_replica, seed=seed, spec=spec, overrides=overrides, r=r,
                           line_sites=sites)
    ok = map_replicas(fn, _replicas(replicas, first_replica), workers)
    params = {**spec.to_dict(), "box": r, "seed": seed, "replicas": replicas,
              "first_replica": first_replica, "approximation": "digitized ray, box-truncated"}
    return FrequencyReport.from_outcomes("G_line", ok, params)


# ---------------------------------------------------------------------------
# coexistence scan
# ---------------------------------------------------------------------------

def _scan_replica(replica, seed, lambdas, boxes, swap) -> list:
    big = _box(max(boxes))
    grid = materialize(WeightOracle(seed, replica), big)
    s1, s2 = frozenset({Site(0, 0)}), frozenset({Site(1, 0)})
    if swap:
        s1, s2 = s2, s1
    out = []
    for lam in lambdas:
        for r in boxes:
            dom = _box(r)
            res = simulate(CompetitionConfig(dom, grid.sub(dom) if r != max(boxes) else grid,
                                             lam, s1, s2))
            out.append(coexistence_proxy(res, r))
    return out


def run_coexistence_scan(lambdas, box_sizes, replicas: int, seed: int, swap_seeds=False,
                         first_replica=0, workers=1) -> dict:
    """Coexistence-proxy frequency for each ``(lambda, box)``; every cell uses the same replicas."""
    lambdas = [float(x) for x in lambdas]
    boxes = sorted(int(b) for b in box_sizes)
    if not lambdas or not boxes:
        raise ParameterError("need at least one lambda and one box size")
    if any(not lam >= 1 for lam in lambdas):
        raise ParameterError("lambda must be >= 1")
    fn = functools.partial(_scan_replica, seed=seed, lambdas=lambdas, boxes=boxes, swap=swap_seeds)
    rows = np.array(map_replicas(fn, _replicas(replicas, first_replica), workers), dtype=bool)
    table = []
    j = 0
    for lam in lambdas:
        for r in boxes:
            rep = FrequencyReport.from_outcomes(
                "coexistence_proxy", rows[:, j],
                {"lambda": lam, "box": r, "seed": seed, "replicas": replicas,
                 "first_replica": first_replica, "swap_seeds": swap_seeds})
            table.append(rep)
            j += 1
    return {"table": table, "lambdas": lambdas, "boxes": boxes}


def scan_column(scan: dict, lam: float) -> list[FrequencyReport]:
    return [r for r in scan["table"] if r.params["lambda"] == lam]


def stable(reports, n_sigma: float = 3.0) -> bool:
    """Every pair of frequencies agrees within ``n_sigma`` joint standard errors."""
    for i, a in enumerate(reports):
        for b in reports[i + 1:]:
            if abs(a.p_hat - b.p_hat) > n_sigma * math.hypot(a.stderr, b.stderr):
                return False
    return True


def strictly_decreasing(reports) -> bool:
    p = [r.p_hat for r in reports]
    return all(b < a for a, b in zip(p, p[1:]))
