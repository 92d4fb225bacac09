"""Monte Carlo estimators for time constants, the limit shape, Busemann increments,
and the cone-angle conditions built from the directional time constants.

Every estimator runs replicas ``first_replica .. first_replica + replicas - 1``
of one seed, so estimates computed with the same seed share their weight
configurations and can be compared sample by sample.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import BoxTooSmallError, ParameterError
from .fpp import indices, search, weight_grid
from .lattice import (Domain, DomainKind, RegionSpec, Site, axis_site, boundary_R,
                      nearest_site)
from .replicas import map_replicas
from .weights import WeightOracle, materialize

Z95 = 1.96
MONOTONE_TOL = 1e-9
STRICT_MARGIN = 1e-12


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    n_samples: int
    params: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def ci95(self) -> tuple[float, float]:
        return self.value - Z95 * self.stderr, self.value + Z95 * self.stderr

    @classmethod
    def from_samples(cls, samples, params=None, diagnostics=None) -> "Estimate":
        x = np.asarray(samples, dtype=float)
        if x.size == 0:
            raise ParameterError("no samples")
        se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size >= 2 else math.nan
        return cls(float(x.mean()), se, int(x.size), dict(params or {}), dict(diagnostics or {}))

    def to_dict(self) -> dict:
        lo, hi = self.ci95
        return {"value": self.value, "stderr": self.stderr, "ci95": [lo, hi],
                "n_samples": self.n_samples, "params": self.params,
                "diagnostics": self.diagnostics}

    @classmethod
    def from_dict(cls, d: dict) -> "Estimate":
        return cls(d["value"], d["stderr"], d["n_samples"], d.get("params", {}),
                   d.get("diagnostics", {}))


def joint_stderr(a: Estimate, b: Estimate) -> float:
    return math.hypot(a.stderr, b.stderr)


def _mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size >= 2 else math.nan
    return float(x.mean()), se


# ---------------------------------------------------------------------------
# boxes
# ---------------------------------------------------------------------------

def default_pad(n: int) -> int:
    """Wall distance that keeps geodesics of length ``n`` clear of the box walls."""
    return max(32, int(math.ceil(2 * n ** (2 / 3))))


def direction_box(kind: DomainKind, targets, pad: int, k: int | None = None) -> Domain:
    xs = [0] + [t[0] for t in targets]
    ys = [0] + [t[1] for t in targets]
    x0, x1 = min(xs) - pad, max(xs) + pad
    if kind is DomainKind.FULL_PLANE:
        return Domain.full_plane(x0, x1, min(ys) - pad, max(ys) + pad)
    if kind is DomainKind.HALF_PLANE:
        return Domain.half_plane(x0, x1, max(ys) + pad)
    if kind is DomainKind.STRIP:
        return Domain.strip(k, x0, x1)
    raise ParameterError(f"unsupported domain kind {kind}")


def _require(domain: Domain, sites) -> None:
    for s in sites:
        if s not in domain:
            raise BoxTooSmallError(f"{s} is outside {domain}")


def _replica_range(first_replica: int, replicas: int) -> range:
    if replicas < 1:
        raise ParameterError("replicas must be >= 1")
    return range(first_replica, first_replica + replicas)


# ---------------------------------------------------------------------------
# time constants
# ---------------------------------------------------------------------------

def _point_times(replica: int, seed: int, domain: Domain, source: Site, targets) -> np.ndarray:
    grid = materialize(WeightOracle(seed, replica), domain)
    t_idx = indices(domain, targets)
    dist, _ = search(grid, indices(domain, [source]), targets=t_idx)
    return dist[t_idx]


def sample_point_times(seed: int, domain: Domain, targets, replicas: int, first_replica=0,
                       workers=1, source=Site(0, 0)) -> np.ndarray:
    """``T(source, target)`` for every replica (rows) and target (columns)."""
    targets = [Site(*t) for t in targets]
    _require(domain, targets + [source])
    fn = functools.partial(_point_times, seed=seed, domain=domain, source=source, targets=targets)
    return np.array(map_replicas(fn, _replica_range(first_replica, replicas), workers))


def _time_constant(times: np.ndarray, lengths, params: dict) -> Estimate:
    lengths = np.asarray(lengths, dtype=float)
    ratios = times / lengths[None, :]
    table = []
    for j, n in enumerate(lengths):
        m, se = _mean_se(ratios[:, j])
        table.append({"n": float(n), "mean": m, "stderr": se})
    means = [row["mean"] for row in table]
    diag = {"table": table,
            "nonincreasing_steps": int(sum(b <= a for a, b in zip(means, means[1:]))),
            "steps": max(0, len(means) - 1)}
    return Estimate.from_samples(ratios[:, -1], params, diag)


def _check_lengths(n_list) -> list[int]:
    n_list = [int(n) for n in n_list]
    if not n_list or any(n < 1 for n in n_list) or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ParameterError("n_list must be a non-empty increasing list of positive integers")
    return n_list


def estimate_mu(n_list, replicas: int, seed: int, domain: Domain | None = None,
                kind: DomainKind = DomainKind.HALF_PLANE, first_replica=0, workers=1) -> Estimate:
    """Mean of ``T(0, n)/n`` at the largest ``n``; the per-``n`` table is in ``diagnostics``."""
    n_list = _check_lengths(n_list)
    targets = [axis_site(n) for n in n_list]
    if domain is None:
        domain = direction_box(DomainKind(kind), targets, default_pad(n_list[-1]))
    times = sample_point_times(seed, domain, targets, replicas, first_replica, workers)
    params = {"quantity": "mu", "seed": seed, "domain": domain.to_dict(), "n_list": n_list,
              "replicas": replicas, "first_replica": first_replica}
    return _time_constant(times, n_list, params)


def direction_target(n: int, alpha: float) -> Site:
    return nearest_site((n * math.cos(alpha), n * math.sin(alpha)))


def estimate_mu_alpha(alpha: float, n_list, replicas: int, seed: int,
                      domain: Domain | None = None, first_replica=0, workers=1) -> Estimate:
    """Directional time constant on the full plane, targets rounded to the nearest site."""
    if not 0 <= alpha <= math.pi / 2 + 1e-12:
        raise ParameterError("alpha must lie in [0, pi/2]")
    n_list = _check_lengths(n_list)
    targets = [direction_target(n, alpha) for n in n_list]
    if domain is None:
        domain = direction_box(DomainKind.FULL_PLANE, targets, default_pad(n_list[-1]))
    times = sample_point_times(seed, domain, targets, replicas, first_replica, workers)
    params = {"quantity": "mu_alpha", "alpha": alpha, "seed": seed, "domain": domain.to_dict(),
              "n_list": n_list, "replicas": replicas, "first_replica": first_replica}
    return _time_constant(times, n_list, params)


def estimate_mu_strip(k: int, n_list, replicas: int, seed: int, domain: Domain | None = None,
                      pad: int | None = None, first_replica=0, workers=1) -> Estimate:
    """Time constant of the strip ``0 <= y <= k``."""
    if k < 0:
        raise ParameterError("k must be >= 0")
    n_list = _check_lengths(n_list)
    targets = [axis_site(n) for n in n_list]
    if domain is None:
        domain = direction_box(DomainKind.STRIP, targets,
                               default_pad(n_list[-1]) if pad is None else pad, k=k)
    elif domain.kind is not DomainKind.STRIP or domain.k != k:
        raise ParameterError("domain must be the strip of height k")
    times = sample_point_times(seed, domain, targets, replicas, first_replica, workers)
    params = {"quantity": "mu_strip", "k": k, "seed": seed, "domain": domain.to_dict(),
              "n_list": n_list, "replicas": replicas, "first_replica": first_replica}
    return _time_constant(times, n_list, params)


@dataclass(frozen=True)
class DirectionalCurve:
    alphas: np.ndarray
    estimates: tuple

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=float)
        object.__setattr__(self, "alphas", a)
        if len(a) != len(self.estimates):
            raise ParameterError("one estimate per angle")
        if np.any(np.diff(a) <= 0):
            raise ParameterError("angle grid must be strictly increasing")
        if any(not e.value > 0 for e in self.estimates):
            raise ParameterError("directional time constants must be positive")

    @property
    def mu(self) -> np.ndarray:
        return np.array([e.value for e in self.estimates])

    @property
    def lower(self) -> np.ndarray:
        return np.array([e.ci95[0] for e in self.estimates])

    @property
    def upper(self) -> np.ndarray:
        return np.array([e.ci95[1] for e in self.estimates])

    @classmethod
    def from_values(cls, alphas, values, stderr=0.0) -> "DirectionalCurve":
        return cls(np.asarray(alphas, float),
                   tuple(Estimate(float(v), float(stderr), 0) for v in values))

    def to_rows(self) -> list[dict]:
        return [{"alpha": float(a), "mu": e.value, "stderr": e.stderr,
                 "ci_lo": e.ci95[0], "ci_hi": e.ci95[1], "n_samples": e.n_samples}
                for a, e in zip(self.alphas, self.estimates)]


def directional_curve(alphas, n: int, replicas: int, seed: int, pad: int | None = None,
                      first_replica=0, workers=1) -> DirectionalCurve:
    """``mu_alpha`` on an angle grid; one full-plane search per replica serves every angle."""
    alphas = [float(a) for a in alphas]
    targets = [direction_target(n, a) for a in alphas]
    domain = direction_box(DomainKind.FULL_PLANE, targets, default_pad(n) if pad is None else pad)
    times = sample_point_times(seed, domain, targets, replicas, first_replica, workers)
    ests = []
    for j, a in enumerate(alphas):
        params = {"quantity": "mu_alpha", "alpha": a, "n": n, "seed": seed,
                  "domain": domain.to_dict(), "replicas": replicas}
        ests.append(Estimate.from_samples(times[:, j] / n, params))
    return DirectionalCurve(np.array(alphas), tuple(ests))


# ---------------------------------------------------------------------------
# limit shape
# ---------------------------------------------------------------------------

SHAPE_BINS = 720
SHAPE_BOX_FACTOR = 3.0  # box radius / t; exceeds 1/mu (about 2.5) with margin


@dataclass(frozen=True)
class ShapeEstimate:
    t: float
    boundary: np.ndarray               # (bins, 2) pooled outermost points, scaled by 1/t
    replicas: int
    bins: int = SHAPE_BINS
    per_replica: np.ndarray | None = field(default=None, repr=False)  # (replicas, bins, 2)
    params: dict = field(default_factory=dict)

    @property
    def diameter(self) -> float:
        pts = self.boundary[~np.isnan(self.boundary).any(axis=1)]
        d = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt((d ** 2).sum(-1)).max())

    def rows(self) -> list[tuple[int, float, float]]:
        return [(b, float(x), float(y)) for b, (x, y) in enumerate(self.boundary)]


def _outermost_per_bin(xs, ys, bins: int) -> np.ndarray:
    phi = np.mod(np.arctan2(ys, xs), 2 * math.pi)
    b = np.minimum((phi / (2 * math.pi) * bins).astype(np.int64), bins - 1)
    r2 = xs.astype(np.int64) ** 2 + ys.astype(np.int64) ** 2
    order = np.lexsort((ys, xs, r2, b))
    last = np.r_[b[order][1:] != b[order][:-1], True]
    pick = order[last]
    out = np.full((bins, 2), np.nan)
    out[b[pick], 0] = xs[pick]
    out[b[pick], 1] = ys[pick]
    return out


def _shape_replica(replica: int, seed: int, t: float, radius: int, bins: int) -> np.ndarray:
    domain = Domain.full_plane(-radius, radius, -radius, radius)
    grid = materialize(WeightOracle(seed, replica), domain)
    dist, _ = search(grid, indices(domain, [Site(0, 0)]), time_limit=t)
    inside = (dist <= t).reshape(domain.shape)
    if inside[0].any() or inside[-1].any() or inside[:, 0].any() or inside[:, -1].any():
        raise BoxTooSmallError(f"infected set at time {t} touches the box of radius {radius}")
    ys, xs = np.nonzero(inside)
    return _outermost_per_bin(xs - radius, ys - radius, bins) / t


def estimate_shape(t: float, replicas: int, seed: int, radius: int | None = None,
                   bins: int = SHAPE_BINS, first_replica=0, workers=1) -> ShapeEstimate:
    """Outermost infected site per angular bin of ``{T <= t} / t``, averaged over replicas."""
    if not t > 0:
        raise ParameterError("t must be > 0")
    if radius is None:
        radius = int(math.ceil(SHAPE_BOX_FACTOR * t)) + 2
    fn = functools.partial(_shape_replica, seed=seed, t=float(t), radius=radius, bins=bins)
    per = np.array(map_replicas(fn, _replica_range(first_replica, replicas), workers))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # bins empty in every replica stay nan
        pooled = np.nanmean(per, axis=0)
    params = {"quantity": "shape", "t": t, "seed": seed, "radius": radius, "bins": bins,
              "replicas": replicas, "first_replica": first_replica,
              "box_factor": radius / t}
    return ShapeEstimate(float(t), pooled, replicas, bins, per, params)


def shape_from_points(points, bins: int = SHAPE_BINS) -> ShapeEstimate:
    """Wrap a synthetic point cloud so it can be fed to :func:`estimate_theta`."""
    pts = np.asarray(points, dtype=float)
    return ShapeEstimate(1.0, pts, 1, bins, None, {"quantity": "synthetic"})


def reflection_asymmetry(shape: ShapeEstimate) -> float:
    """Largest distance between a pooled point and the mirror image of its mirror bin."""
    b = shape.bins
    mirror = (b // 2 - 1 - np.arange(b)) % b
    pts = shape.boundary
    refl = pts[mirror] * np.array([-1.0, 1.0])
    d = np.sqrt(((pts - refl) ** 2).sum(axis=1))
    return float(np.nanmax(d))


def hull_distances(points) -> np.ndarray:
    """Distance of each point to the boundary of the convex hull of all points."""
    pts = np.asarray(points, dtype=float)
    pts = pts[~np.isnan(pts).any(axis=1)]
    hull = ConvexHull(pts)
    # eq rows: unit normal . p + offset <= 0 inside
    signed = pts @ hull.equations[:, :2].T + hull.equations[:, 2]
    return np.abs(signed.max(axis=1))


def convexity_fraction(shape: ShapeEstimate, tol: float) -> float:
    d = hull_distances(shape.boundary)
    return float(np.mean(d <= tol))


def _hull_ccw(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    pts = pts[~np.isnan(pts).any(axis=1)]
    if len(pts) < 3:
        raise ParameterError("degenerate hull: fewer than three points")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise ParameterError(f"degenerate hull: {exc}") from None
    return pts[hull.vertices]  # counter-clockwise for 2-d input


def theta_raw(points) -> float:
    """Largest tilt from vertical of a supporting line at the maximal-x contact set."""
    v = _hull_ccw(points)
    n = len(v)
    scale = max(1.0, float(np.abs(v).max()))
    xmax = v[:, 0].max()
    contact = np.flatnonzero(v[:, 0] >= xmax - 1e-12 * scale)
    # contact vertices are consecutive in the cyclic order; find the run
    cset = set(contact.tolist())
    start = next(i for i in contact if (i - 1) % n not in cset)
    run = [start]
    while (run[-1] + 1) % n in cset and len(run) < n:
        run.append((run[-1] + 1) % n)
    first, last = run[0], run[-1]        # ccw: first is lowest, last is highest
    up = v[(last + 1) % n] - v[last]
    down = v[(first - 1) % n] - v[first]
    tilt_up = math.atan2(-up[0], up[1])
    tilt_down = math.atan2(-down[0], -down[1])
    return max(tilt_up, tilt_down, 0.0)


def _quantize(angle: float, bins: int) -> float:
    k = math.floor(angle / (2 * math.pi / bins) + 1e-9)
    return math.pi * (2 * k / bins)


def estimate_theta(shape: ShapeEstimate) -> Estimate:
    """Corner angle of the shape at its extreme x-point, resolved to the bin width.

    The value comes from the pooled boundary; the standard error from the spread
    of per-replica values when those are available.
    """
    value = _quantize(theta_raw(shape.boundary), shape.bins)
    samples = []
    if shape.per_replica is not None and len(shape.per_replica) >= 2:
        samples = [_quantize(theta_raw(p), shape.bins) for p in shape.per_replica]
    se = float(np.std(samples, ddof=1) / math.sqrt(len(samples))) if samples else math.nan
    params = {"quantity": "theta", "resolution": 2 * math.pi / shape.bins,
              "shape": shape.params,
              "bias": "hull tilt quantized down to the bin width; noisy per-replica boundaries "
                      "bias per-replica values upward"}
    diag = {"per_replica_mean": float(np.mean(samples)) if samples else None}
    return Estimate(value, se, len(samples) or 1, params, diag)


# ---------------------------------------------------------------------------
# Busemann increments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BusemannRecord:
    n: int
    u: Site
    v: Site
    value: float
    replica: int | None = None

    def to_dict(self) -> dict:
        return {"n": self.n, "u": list(self.u), "v": list(self.v), "value": self.value,
                "replica": self.replica}


def busemann_box(n_max: int, reach: int, pad: int | None = None) -> Domain:
    """Half-plane box holding ``-n_max`` and everything up to ``x = reach``."""
    pad = default_pad(n_max + reach) if pad is None else pad
    return Domain.half_plane(-n_max - pad, reach + pad, pad)


def busemann(n: int, u, v, weights, domain: Domain) -> BusemannRecord:
    """``T(-n, u) - T(-n, v)`` from one search out of ``-n``."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    u, v, src = Site(*u), Site(*v), axis_site(-n)
    _require(domain, [u, v, src])
    grid = weight_grid(domain, weights)
    dist, _ = search(grid, indices(domain, [src]), targets=indices(domain, [u, v]))
    value = float(dist[domain.index(u)] - dist[domain.index(v)])
    return BusemannRecord(n, u, v, value, getattr(weights, "replica", None))


def _profile_replica(replica: int, seed: int, domain: Domain, m: int, n_list) -> np.ndarray:
    # B_n(0, m) = T(0, -n) - T(m, -n) by symmetry of the undirected weights,
    # so two searches give the whole sequence in n.
    grid = materialize(WeightOracle(seed, replica), domain)
    ends = indices(domain, [axis_site(-n) for n in n_list])
    t_m = indices(domain, [axis_site(m)])
    d0, _ = search(grid, indices(domain, [Site(0, 0)]), targets=np.r_[ends, t_m])
    dm, _ = search(grid, t_m, targets=ends)
    return np.r_[d0[ends] - dm[ends], d0[t_m]]


def busemann_profile(m: int, n_list, replicas: int, seed: int, domain: Domain | None = None,
                     mu_hat: Estimate | None = None, first_replica=0, workers=1) -> dict:
    """Per-replica ``B_n(0, m)`` along ``n_list`` with the exact-identity and limit diagnostics."""
    n_list = _check_lengths(n_list)
    if m < 1:
        raise ParameterError("m must be >= 1")
    if domain is None:
        domain = busemann_box(n_list[-1], m)
    _require(domain, [axis_site(-n_list[-1]), axis_site(m)])
    fn = functools.partial(_profile_replica, seed=seed, domain=domain, m=m, n_list=n_list)
    rows = np.array(map_replicas(fn, _replica_range(first_replica, replicas), workers))
    B, T0m = rows[:, :-1], rows[:, -1]
    steps = np.diff(B, axis=1)
    violations = int(np.count_nonzero(steps < -MONOTONE_TOL))
    bound = int(np.count_nonzero(np.abs(B) > T0m[:, None] + MONOTONE_TOL))
    mean, se = _mean_se(B[:, -1] / m)
    out = {"m": m, "n_list": n_list, "replicas": replicas, "seed": seed,
           "domain": domain.to_dict(), "B": B, "T0m": T0m,
           "monotonicity_violations": violations, "bound_violations": bound,
           "limit_mean": mean, "limit_stderr": se}
    if mu_hat is not None:
        joint = math.hypot(se, mu_hat.stderr)
        out.update({"mu_hat": mu_hat.value, "mu_stderr": mu_hat.stderr, "joint_stderr": joint,
                    "z": (mean + mu_hat.value) / joint if joint > 0 else math.nan})
    return out


def _decay_replica(replica: int, seed: int, domain: Domain, n_list, vs, ms) -> np.ndarray:
    grid = materialize(WeightOracle(seed, replica), domain)
    v_idx = indices(domain, vs)
    m_idx = indices(domain, [axis_site(m) for m in ms])
    o_idx = indices(domain, [Site(0, 0)])
    out = []
    for n in n_list:
        dist, _ = search(grid, indices(domain, [axis_site(-n)]), targets=np.r_[v_idx, m_idx, o_idx])
        out.append(np.r_[dist[o_idx] - dist[v_idx], dist[o_idx] - dist[m_idx]])
    return np.array(out)


def boundary_decay_check(spec: RegionSpec, n_list, y_max: int, replicas: int, seed: int,
                         mu_hat: Estimate, fit_min: float | None = None, c_list=(0.5, 1.0, 2.0),
                         bucket: float = 10.0, domain: Domain | None = None,
                         first_replica=0, workers=1) -> dict:
    """Empirical check that ``B_n(0, v) < -delta |v| mu`` on the boundary of R away from 0.

    ``delta`` is fitted as the 1st percentile of ``-B_n(0, v) / (|v| mu)`` over the
    first half of the replicas (sites with ``|v| >= fit_min``) and validated on
    the second half.
    """
    n_list = _check_lengths(n_list)
    if spec.n != 0:
        raise ParameterError("the boundary check uses the region anchored at 0")
    if replicas < 2:
        raise ParameterError("need at least two replicas (calibration and validation)")
    vs = [s for s in boundary_R(spec, y_max) if s != Site(0, 0)]
    if not vs:
        raise ParameterError("no boundary sites other than the origin below y_max")
    norms = np.array([math.hypot(*v) for v in vs])
    ms = sorted({max(1, int(round(c * r))) for c in c_list for r in norms})
    if domain is None:
        reach = max(max(v.x for v in vs), max(ms))
        domain = Domain.half_plane(-n_list[-1] - default_pad(n_list[-1]),
                                   reach + default_pad(reach), max(y_max, 0) + default_pad(reach))
    _require(domain, vs + [axis_site(-n_list[-1])] + [axis_site(m) for m in ms])
    fn = functools.partial(_decay_replica, seed=seed, domain=domain, n_list=n_list, vs=vs, ms=ms)
    data = np.array(map_replicas(fn, _replica_range(first_replica, replicas), workers))
    Bv = data[:, :, :len(vs)]                  # (replica, n, v): B_n(0, v)
    Bm = data[:, :, len(vs):]                  # (replica, n, m): B_n(0, m)
    mu = mu_hat.value
    fit_min = y_max / 2 if fit_min is None else fit_min
    half = replicas // 2
    ratio = -Bv / (norms[None, None, :] * mu)
    cal = ratio[:half][:, :, norms >= fit_min]
    delta = float(np.percentile(cal, 1)) if cal.size else math.nan
    val_B = Bv[half:]
    viol = val_B >= -delta * norms[None, None, :] * mu     # (replica, n, v)
    frac_by_v = viol.mean(axis=(0, 1))
    edges = np.arange(0.0, norms.max() + bucket, bucket)
    buckets = []
    for lo in edges:
        sel = (norms >= lo) & (norms < lo + bucket)
        if sel.any():
            buckets.append({"norm_lo": float(lo), "norm_hi": float(lo + bucket),
                            "sites": int(sel.sum()),
                            "violation_fraction": float(viol[:, :, sel].mean())})
    bad = norms[frac_by_v > 0]
    m_index = {m: j for j, m in enumerate(ms)}
    sweep = []
    for c in c_list:
        cols = [m_index[max(1, int(round(c * r)))] for r in norms]
        mvals = np.array([ms[j] for j in cols], dtype=float)
        b0m = Bm[half:][:, :, cols]                            # B_n(0, m(v))
        bmv = b0m - val_B                                      # B_n(m(v), v)
        ok0 = b0m <= -(1 - delta ** 2 / 2) * mu * mvals
        ok1 = bmv <= (1 - delta ** 2) * mu * mvals
        sweep.append({"c": c, "fraction_first": float(ok0.mean()),
                      "fraction_second": float(ok1.mean()),
                      "fraction_both": float((ok0 & ok1).mean())})
    return {"delta_hat": delta, "delta_positive": bool(delta > 0), "fit_min": fit_min,
            "n_list": n_list, "y_max": y_max, "replicas": replicas, "seed": seed,
            "sites": [list(v) for v in vs], "norms": norms.tolist(),
            "violation_fraction": float(viol.mean()),
            "violation_fraction_by_site": frac_by_v.tolist(),
            "largest_violating_norm": float(bad.max()) if bad.size else None,
            "buckets": buckets, "m_sweep": sweep, "domain": domain.to_dict()}


# ---------------------------------------------------------------------------
# cone-angle conditions
# ---------------------------------------------------------------------------

def _periodic(curve: DirectionalCurve, values: np.ndarray):
    """Extend a curve on [0, pi/2] to all angles by the lattice symmetries."""
    a = curve.alphas
    if a[0] > 1e-12 or abs(a[-1] - math.pi / 2) > 1e-12:
        raise ParameterError("curve must cover [0, pi/2]")

    def at(angle: float) -> float:
        r = math.fmod(angle, math.pi / 2)
        if r < 0:
            r += math.pi / 2
        return float(np.interp(r, a, values))
    return at


def alpha_choice(lam: float, curve: DirectionalCurve, strict: bool = False) -> float | None:
    """Largest grid angle ``alpha`` with ``mu(a0 + 2 alpha) / lam < mu(a0) cos(2 alpha)`` for all grid ``a0``.

    ``strict`` uses the upper CI bound on the left and the lower bound on the right.
    """
    if not lam > 1:
        return None
    left = _periodic(curve, curve.upper if strict else curve.mu)
    right = _periodic(curve, curve.lower if strict else curve.mu)
    best = None
    for alpha in curve.alphas:
        if alpha <= 0:
            continue
        c2 = math.cos(2 * alpha)
        # relative margin so that rounding in cos() cannot turn equality into a pass
        if all(left(a0 + 2 * alpha) / lam < right(a0) * c2 * (1 - STRICT_MARGIN)
               for a0 in curve.alphas):
            best = float(alpha)
    return best


def lipschitz_check(curve: DirectionalCurve) -> float:
    """Smallest ``c >= 0`` with ``mu(a0 + a) <= mu(a0) (1 + c a)`` over all forward grid pairs."""
    a, mu = curve.alphas, curve.mu
    if len(a) < 3:
        raise ParameterError("need at least three curve points")
    c = 0.0
    for i in range(len(a)):
        for j in range(i + 1, len(a)):
            c = max(c, (mu[j] / mu[i] - 1.0) / (a[j] - a[i]))
    return c
