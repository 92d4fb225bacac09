"""Command-line entry point.

Each subcommand writes its files into ``--out`` (default: the current
directory) and prints one summary line.  Exit status: 0 on success, 2 on a
usage or configuration error, 3 on any other failure.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from pathlib import Path

import numpy as np

from . import asymptotics as A
from . import events as EV
from . import io
from .competition import (CompetitionConfig, coexistence_proxy, encircled, simulate)
from .errors import ParameterError
from .fpp import passage_time, passage_time_field
from .lattice import Domain, DomainKind, RegionSpec, Site
from .replicas import default_workers
from .weights import WeightOracle

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# value parsers
# ---------------------------------------------------------------------------

def int_list(s: str) -> list[int]:
    try:
        return [int(x) for x in str(s).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def float_list(s: str) -> list[float]:
    try:
        return [float(x) for x in str(s).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def site_list(s: str) -> list[tuple[int, int]]:
    """``"x,y;x,y"`` -> list of sites."""
    out = []
    for part in str(s).split(";"):
        if not part.strip():
            continue
        xy = int_list(part)
        if len(xy) != 2:
            raise argparse.ArgumentTypeError(f"expected x,y pairs separated by ';', got {s!r}")
        out.append(tuple(xy))
    return out


def boolean(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {s!r}")


def radians(s: str) -> float:
    """A float, or a multiple of pi written like ``pi/4`` or ``0.25pi``."""
    v = str(s).strip().lower().replace(" ", "")
    try:
        if "pi" in v:
            num, _, den = v.partition("/")
            coef = num.replace("*", "").replace("pi", "")
            c = float(coef) if coef not in ("", "+") else 1.0
            return c * math.pi / (float(den) if den else 1.0)
        return float(v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an angle, got {s!r}") from None


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _universal(p: argparse.ArgumentParser, replicas: int) -> None:
    g = p.add_argument_group("run")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--replicas", type=int, default=replicas)
    g.add_argument("--first-replica", type=int, default=0)
    g.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: $HALFPLANE_FPP_WORKERS or 1)")
    g.add_argument("--out", default=".", help="output directory")
    g.add_argument("--config", default=None, help="key=value file; command-line flags win")
    g.add_argument("--emit-config", action="store_true",
                   help="also write the resolved configuration")


def _domain_flags(p, default_kind="half"):
    p.add_argument("--domain", choices=["full", "half", "strip", "half-strip"], default=default_kind)
    p.add_argument("--box", type=int, default=16, help="box half-width r")
    p.add_argument("--k", type=int, default=None, help="strip height")
    p.add_argument("--bounds", type=int_list, default=None, help="explicit x0,x1,y0,y1")


def _region_flags(p):
    p.add_argument("--epsilon-tan", type=float, default=None, help="tan(epsilon)")
    p.add_argument("--epsilon", type=radians, default=None, help="epsilon in radians")
    p.add_argument("--theta", type=radians, default=0.0)


def _mu_flags(p):
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--mu-stderr", type=float, default=0.0)
    p.add_argument("--mu-file", default=None, help="estimate JSON written by estimate-mu")
    p.add_argument("--mu-k", type=float, default=None)
    p.add_argument("--mu-k-file", default=None, help="estimate JSON written by estimate-mu-strip")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="halfplane-fpp",
                                     description="First-passage percolation and two-type "
                                                 "competition on the half-plane lattice.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {io.__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("passage-time", help="point-to-point passage times and geodesics")
    _domain_flags(p)
    p.add_argument("--sources", type=site_list, default=[(0, 0)])
    p.add_argument("--targets", type=site_list, default=[(1, 0)])
    p.add_argument("--forbidden", type=site_list, default=[])
    p.add_argument("--field", action="store_true", help="also write the full arrival-time fields")
    _universal(p, 1)

    p = sub.add_parser("compete", help="two-type race on one box")
    _domain_flags(p)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--seeds1", type=site_list, default=[(0, 0)])
    p.add_argument("--seeds2", type=site_list, default=[(1, 0)])
    p.add_argument("--horizon", type=float, default=math.inf)
    p.add_argument("--radius", type=int, default=None, help="shell radius of the coexistence proxy")
    p.add_argument("--grid", action="store_true", help="write occupier and claim-time grids")
    _universal(p, 1)

    p = sub.add_parser("estimate-mu", help="axis time constant")
    p.add_argument("--n-list", type=int_list, default=[64, 128, 256])
    p.add_argument("--domain", choices=["full", "half"], default="half")
    p.add_argument("--pad", type=int, default=None)
    _universal(p, 20)

    p = sub.add_parser("estimate-mu-alpha", help="directional time constant(s)")
    p.add_argument("--alpha", type=radians, default=None)
    p.add_argument("--alphas", type=float_list, default=None,
                   help="angle grid in radians (uses the last entry of --n-list)")
    p.add_argument("--grid-points", type=int, default=None,
                   help="uniform grid on [0, pi/2] with this many points")
    p.add_argument("--n-list", type=int_list, default=[64, 128])
    p.add_argument("--pad", type=int, default=None)
    _universal(p, 20)

    p = sub.add_parser("estimate-mu-strip", help="strip time constant")
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--n-list", type=int_list, default=[64, 128, 256])
    p.add_argument("--pad", type=int, default=None)
    _universal(p, 20)

    p = sub.add_parser("estimate-shape", help="pooled boundary of the rescaled infected set")
    p.add_argument("--t", type=float, default=50.0)
    p.add_argument("--radius", type=int, default=None)
    p.add_argument("--bins", type=int, default=A.SHAPE_BINS)
    p.add_argument("--tol", type=float, default=0.02, help="tolerance as a fraction of the diameter")
    _universal(p, 10)

    p = sub.add_parser("estimate-theta", help="corner angle of the shape at its extreme x-point")
    p.add_argument("--shape-csv", default=None, help="boundary CSV written by estimate-shape")
    p.add_argument("--synthetic", choices=["diamond", "circle"], default=None)
    p.add_argument("--points", type=int, default=3600)
    p.add_argument("--t", type=float, default=50.0)
    p.add_argument("--radius", type=int, default=None)
    p.add_argument("--bins", type=int, default=A.SHAPE_BINS)
    _universal(p, 10)

    p = sub.add_parser("busemann", help="Busemann increments along the axis")
    p.add_argument("--mode", choices=["single", "profile", "decay"], default="profile")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--u", type=site_list, default=[(0, 0)])
    p.add_argument("--v", type=site_list, default=[(1, 0)])
    p.add_argument("--m", type=int, default=32)
    p.add_argument("--n-list", type=int_list, default=[32, 64, 128, 256])
    p.add_argument("--y-max", type=int, default=40)
    p.add_argument("--fit-min", type=float, default=None)
    p.add_argument("--c-list", type=float_list, default=[0.5, 1.0, 2.0])
    _region_flags(p)
    _mu_flags(p)
    _universal(p, 20)

    p = sub.add_parser("event", help="frequency of a named event")
    p.add_argument("--name", choices=list(EV.EVENT_NAMES), default=None)
    _region_flags(p)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--m-list", type=int_list, default=None, help="H_m only: several m on one race")
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--ell-prime", type=int, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--box", type=int, default=None)
    p.add_argument("--alpha", type=radians, default=None)
    p.add_argument("--prefix", type=int, default=None)
    p.add_argument("--type1-sites", type=site_list, default=None)
    p.add_argument("--conditioned", type=boolean, nargs="?", const=True, default=False)
    _mu_flags(p)
    _universal(p, 100)

    p = sub.add_parser("coex-scan", help="coexistence-proxy frequency over lambda and box size")
    p.add_argument("--lambdas", type=float_list, default=[1.0, 1.5, 2.0])
    p.add_argument("--boxes", type=int_list, default=[64, 128, 256])
    p.add_argument("--swap-seeds", type=boolean, nargs="?", const=True, default=False)
    _universal(p, 100)

    p = sub.add_parser("alpha-choice", help="cone-angle condition from a directional curve")
    p.add_argument("--lam", type=float, default=2.0)
    p.add_argument("--curve-csv", default=None, help="curve CSV written by estimate-mu-alpha")
    p.add_argument("--grid-points", type=int, default=19)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--strict", type=boolean, nargs="?", const=True, default=False)
    _universal(p, 20)
    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _domain(args) -> Domain:
    kind, r, k = args.domain, args.box, args.k
    if args.bounds is not None:
        if len(args.bounds) != 4:
            raise ParameterError("--bounds needs x0,x1,y0,y1")
        x0, x1, y0, y1 = args.bounds
        if kind == "full":
            return Domain.full_plane(x0, x1, y0, y1)
        if kind == "half":
            if y0 != 0:
                raise ParameterError("half-plane boxes start at y = 0")
            return Domain.half_plane(x0, x1, y1)
        if kind == "strip":
            return Domain.strip(y1 if k is None else k, x0, x1)
        return Domain.half_strip(y1 if k is None else k, x1)
    if r is None or r < 1:
        raise ParameterError("--box must be >= 1")
    if kind == "full":
        return Domain.full_plane(-r, r, -r, r)
    if kind == "half":
        return Domain.half_plane(-r, r, r)
    if k is None:
        raise ParameterError(f"--k is required for the {kind} domain")
    return Domain.strip(k, -r, r) if kind == "strip" else Domain.half_strip(k, r)


def _region(args) -> RegionSpec:
    if args.epsilon_tan is not None and args.epsilon is not None:
        raise ParameterError("give --epsilon-tan or --epsilon, not both")
    if args.epsilon_tan is not None:
        return RegionSpec.from_tan(args.epsilon_tan, theta=args.theta)
    if args.epsilon is not None:
        return RegionSpec(args.theta, args.epsilon)
    raise ParameterError("--epsilon-tan or --epsilon is required")


def _read_estimate(path) -> A.Estimate:
    doc = io.read_json(path)
    est = doc.get("estimate")
    if est is None:
        raise ParameterError(f"{path} holds no estimate")
    return A.Estimate(float(io.from_jsonable(est["value"])), float(io.from_jsonable(est["stderr"])),
                      int(est["n_samples"]), est.get("params", {}))


def _mu(args, required: bool):
    """(mu, mu stderr, mu_k) from files or flags; a flag and a file for the same input clash."""
    mu = mu_se = mu_k = None
    if args.mu_file and args.mu is not None:
        raise ParameterError("give --mu or --mu-file, not both")
    if args.mu_k_file and args.mu_k is not None:
        raise ParameterError("give --mu-k or --mu-k-file, not both")
    if args.mu_file:
        e = _read_estimate(args.mu_file)
        mu, mu_se = e.value, e.stderr
    elif args.mu is not None:
        mu, mu_se = args.mu, args.mu_stderr
    if args.mu_k_file:
        mu_k = _read_estimate(args.mu_k_file).value
    elif args.mu_k is not None:
        mu_k = args.mu_k
    if required and mu is None:
        raise ParameterError("--mu or --mu-file is required")
    return mu, mu_se, mu_k


def _config(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in vars(args).items() if k not in skip}


class Run:
    """Output bookkeeping for one invocation."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.out)
        self.config = _config(args)
        self.header = io.header(args.command, args.seed, self.config)
        self.files: list[Path] = []
        self.workers = default_workers() if args.workers is None else args.workers
        if self.workers < 1:
            raise ParameterError("--workers must be >= 1")
        if args.replicas < 1:
            raise ParameterError("--replicas must be >= 1")

    def stem(self) -> str:
        if self.args.command == "event" and self.args.name:
            return f"event_{self.args.name}"
        return self.args.command.replace("-", "_")

    def json(self, payload: dict, name: str | None = None) -> Path:
        path = io.write_json(self.out / f"{name or self.stem()}.json", self.header,
                             {"config": io.resolved_config(self.config), **payload})
        self.files.append(path)
        return path

    def csv(self, name: str, columns, rows) -> Path:
        path = io.write_csv(self.out / f"{name}.csv", self.header, columns, rows)
        self.files.append(path)
        return path

    def grid(self, name: str, arrays: dict) -> None:
        self.files.extend(io.write_grid(self.out / name, self.header, arrays))

    def finish(self, summary: str) -> str:
        if self.args.emit_config:
            path = self.out / f"{self.stem()}.config"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(f"# config_hash={self.header['config_hash']}\n"
                            + io.format_config(self.config))
            self.files.append(path)
        first = self.files[0] if self.files else self.out
        return f"{self.args.command}: {summary} -> {first}"

    @property
    def replica_range(self) -> range:
        return range(self.args.first_replica, self.args.first_replica + self.args.replicas)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_passage_time(args, run: Run) -> str:
    dom = _domain(args)
    results, fields = [], []
    for rep in run.replica_range:
        w = WeightOracle(args.seed, rep)
        t, geo = passage_time(dom, w, args.sources, args.targets, forbidden=args.forbidden)
        results.append({"replica": rep, "time": t, "geodesic": [list(s) for s in geo.path]})
        if args.field:
            fields.append(passage_time_field(dom, w, args.sources, forbidden=args.forbidden).times)
    run.json({"domain": dom.to_dict(), "results": results})
    if args.field:
        run.grid("passage_time_field", {"times": np.array(fields)})
    mean = float(np.mean([r["time"] for r in results]))
    return f"{len(results)} replica(s), mean time {mean:.6g}"


def cmd_compete(args, run: Run) -> str:
    dom = _domain(args)
    radius = args.radius
    rows, occ, times = [], [], []
    for rep in run.replica_range:
        cfg = CompetitionConfig(dom, WeightOracle(args.seed, rep), args.lam,
                                frozenset(map(Site._make, args.seeds1)),
                                frozenset(map(Site._make, args.seeds2)), args.horizon)
        res = simulate(cfg)
        row = {"replica": rep, "type1": res.count(1), "type2": res.count(2),
               "uninfected": res.count(0), "encircled": encircled(res)}
        if radius is not None:
            row["coexistence_proxy"] = coexistence_proxy(res, radius)
        rows.append(row)
        if args.grid:
            occ.append(res.occupier)
            times.append(res.time)
    run.json({"domain": dom.to_dict(), "lambda": args.lam, "results": rows})
    if args.grid:
        run.grid("compete_grid", {"occupier": np.array(occ), "time": np.array(times)})
    share = np.mean([r["type2"] / max(1, r["type1"] + r["type2"]) for r in rows])
    return f"{len(rows)} replica(s), mean type-2 share {share:.4f}"


def _estimate_out(run: Run, est: A.Estimate, label: str) -> str:
    run.json({"estimate": est})
    table = est.diagnostics.get("table")
    if table:
        run.csv(run.stem(), ["n", "mean", "stderr"], table)
    lo, hi = est.ci95
    return f"{label}={est.value:.6g} stderr={est.stderr:.3g} ci95=[{lo:.6g}, {hi:.6g}]"


def cmd_estimate_mu(args, run: Run) -> str:
    kind = DomainKind.FULL_PLANE if args.domain == "full" else DomainKind.HALF_PLANE
    dom = None
    if args.pad is not None:
        dom = A.direction_box(kind, [(n, 0) for n in args.n_list], args.pad)
    est = A.estimate_mu(args.n_list, args.replicas, args.seed, domain=dom, kind=kind,
                        first_replica=args.first_replica, workers=run.workers)
    return _estimate_out(run, est, "mu")


def cmd_estimate_mu_alpha(args, run: Run) -> str:
    alphas = args.alphas
    if args.grid_points is not None:
        alphas = list(np.linspace(0, math.pi / 2, args.grid_points))
    if alphas is not None:
        curve = A.directional_curve(alphas, args.n_list[-1], args.replicas, args.seed, pad=args.pad,
                                    first_replica=args.first_replica, workers=run.workers)
        rows = curve.to_rows()
        run.json({"curve": rows, "n": args.n_list[-1]})
        run.csv("mu_alpha_curve", ["alpha", "mu", "stderr", "ci_lo", "ci_hi", "n_samples"], rows)
        return f"{len(rows)} angles, mu range [{curve.mu.min():.4g}, {curve.mu.max():.4g}]"
    if args.alpha is None:
        raise ParameterError("give --alpha, --alphas or --grid-points")
    dom = None
    if args.pad is not None:
        targets = [A.direction_target(n, args.alpha) for n in args.n_list]
        dom = A.direction_box(DomainKind.FULL_PLANE, targets, args.pad)
    est = A.estimate_mu_alpha(args.alpha, args.n_list, args.replicas, args.seed, domain=dom,
                              first_replica=args.first_replica, workers=run.workers)
    return _estimate_out(run, est, "mu_alpha")


def cmd_estimate_mu_strip(args, run: Run) -> str:
    est = A.estimate_mu_strip(args.k, args.n_list, args.replicas, args.seed, pad=args.pad,
                              first_replica=args.first_replica, workers=run.workers)
    return _estimate_out(run, est, f"mu_strip(k={args.k})")


def _shape_summary(shape: A.ShapeEstimate, tol: float) -> dict:
    diam = shape.diameter
    digest = hashlib.sha1(np.ascontiguousarray(shape.boundary).tobytes()).hexdigest()
    return {"t": shape.t, "replicas": shape.replicas, "bins": shape.bins, "diameter": diam,
            "reflection_asymmetry": A.reflection_asymmetry(shape),
            "tolerance": tol * diam,
            "convex_fraction": A.convexity_fraction(shape, tol * diam),
            "boundary_sha1": digest, "params": shape.params}


def cmd_estimate_shape(args, run: Run) -> str:
    shape = A.estimate_shape(args.t, args.replicas, args.seed, radius=args.radius, bins=args.bins,
                             first_replica=args.first_replica, workers=run.workers)
    summary = _shape_summary(shape, args.tol)
    run.json({"shape": summary})
    run.csv("shape_boundary", ["angle_bin", "x", "y"], shape.rows())
    return (f"diameter {summary['diameter']:.4g}, asymmetry {summary['reflection_asymmetry']:.3g}, "
            f"convex fraction {summary['convex_fraction']:.3f}")


def _synthetic(kind: str, points: int) -> np.ndarray:
    if kind == "circle":
        a = np.linspace(0, 2 * math.pi, points, endpoint=False)
        return np.c_[np.cos(a), np.sin(a)]
    s = np.linspace(0, 1, max(2, points // 4), endpoint=False)
    quarter = np.c_[1 - s, s]
    return np.concatenate([quarter * np.array(q) for q in ((1, 1), (-1, 1), (-1, -1), (1, -1))])


def cmd_estimate_theta(args, run: Run) -> str:
    if args.synthetic and args.shape_csv:
        raise ParameterError("give --synthetic or --shape-csv, not both")
    if args.synthetic:
        shape = A.shape_from_points(_synthetic(args.synthetic, args.points), args.bins)
    elif args.shape_csv:
        _, rows = io.read_csv(args.shape_csv)
        pts = np.array([[float(r["x"]) if r["x"] else np.nan, float(r["y"]) if r["y"] else np.nan]
                        for r in rows])
        shape = A.shape_from_points(pts, len(rows))
    else:
        shape = A.estimate_shape(args.t, args.replicas, args.seed, radius=args.radius,
                                 bins=args.bins, first_replica=args.first_replica,
                                 workers=run.workers)
    est = A.estimate_theta(shape)
    run.json({"estimate": est})
    return f"theta={est.value:.6g} (resolution {2 * math.pi / shape.bins:.4g})"


def cmd_busemann(args, run: Run) -> str:
    if args.mode == "single":
        if len(args.u) != 1 or len(args.v) != 1:
            raise ParameterError("--u and --v take one site each")
        u, v = Site(*args.u[0]), Site(*args.v[0])
        reach = max(abs(u.x), abs(v.x), u.y, v.y)
        dom = A.busemann_box(args.n, reach)
        recs = [A.busemann(args.n, u, v, WeightOracle(args.seed, rep), dom)
                for rep in run.replica_range]
        run.json({"records": recs, "domain": dom.to_dict()})
        return f"{len(recs)} record(s), mean {np.mean([r.value for r in recs]):.6g}"
    mu, mu_se, _ = _mu(args, required=args.mode == "decay")
    mu_hat = None if mu is None else A.Estimate(mu, mu_se, 0)
    if args.mode == "profile":
        prof = A.busemann_profile(args.m, args.n_list, args.replicas, args.seed, mu_hat=mu_hat,
                                  first_replica=args.first_replica, workers=run.workers)
        B = prof.pop("B")
        run.json({"profile": prof})
        rows = [(rep, n, B[i, j]) for i, rep in enumerate(run.replica_range)
                for j, n in enumerate(args.n_list)]
        run.csv("busemann_profile", ["replica", "n", "B"], rows)
        return (f"mean B/m {prof['limit_mean']:.6g} +- {prof['limit_stderr']:.3g}, "
                f"{prof['monotonicity_violations']} monotonicity violation(s)")
    res = A.boundary_decay_check(_region(args), args.n_list, args.y_max, args.replicas, args.seed,
                                 mu_hat, fit_min=args.fit_min, c_list=args.c_list,
                                 first_replica=args.first_replica, workers=run.workers)
    run.json({"decay": res})
    run.csv("busemann_decay", ["norm_lo", "norm_hi", "sites", "violation_fraction"], res["buckets"])
    return f"delta_hat={res['delta_hat']:.4g}, violation fraction {res['violation_fraction']:.4g}"


def _event_spec(args) -> EV.EventSpec:
    if args.name is None:
        raise ParameterError("--name is required")
    eps = None
    if args.epsilon_tan is not None or args.epsilon is not None:
        eps = _region(args).epsilon
    mu, _, mu_k = _mu(args, required=False)
    return EV.EventSpec(args.name, epsilon=eps, theta=args.theta, lam=args.lam, k=args.k, m=args.m,
                        t=args.t, delta=args.delta, ell_prime=args.ell_prime,
                        horizon=args.horizon, box=args.box, mu=mu, mu_k=mu_k, alpha=args.alpha,
                        prefix=args.prefix, type1_sites=args.type1_sites,
                        conditioned=args.conditioned)


def _outcome_rows(reports: dict, reps) -> list:
    names = list(reports)
    return [[rep] + [int(reports[n].outcomes[i]) for n in names] for i, rep in enumerate(reps)]


def cmd_event(args, run: Run) -> str:
    spec = _event_spec(args)
    kw = dict(first_replica=args.first_replica, workers=run.workers)
    name = spec.name
    reps = list(run.replica_range)
    if name in ("F", "F_bar_m"):
        rep = EV.run_event_F(spec, args.replicas, args.seed, **kw)
        run.json({"report": rep})
        return f"{name}: p_hat={rep.p_hat:.4g} wilson95=[{rep.wilson95[0]:.4g}, {rep.wilson95[1]:.4g}]"
    if name in ("O", "O_prime", "Q") or (name in ("E_mt", "E_prime_mt") and spec.mu is None):
        rep = EV.run_closed_form(spec, args.replicas, args.seed, **kw)
        run.json({"report": rep})
        return f"{name}: p_hat={rep.p_hat:.4g} analytic={rep.extra['analytic_p']:.4g} z={rep.extra['z']:.2f}"
    if name == "G":
        rep = EV.run_event_G(spec, args.replicas, args.seed, **kw)
        run.json({"report": rep})
        return f"G: p_hat={rep.p_hat:.4g}"
    if name == "G_line":
        rep = EV.run_event_line_capture(spec, args.replicas, args.seed, **kw)
        run.json({"report": rep})
        return f"G_line: p_hat={rep.p_hat:.4g}"
    if name == "H_m":
        res = EV.run_event_H(spec, args.replicas, args.seed, m_list=args.m_list, **kw)
        run.json({"H": res})
        last = res["table"][-1]["report"]
        return f"H_m: p_hat={last.p_hat:.4g} at m={res['table'][-1]['m']}"
    if name == "C_joint":
        res = EV.run_event_coex_construction(spec, args.replicas, args.seed, **kw)
    else:
        res = EV.run_events_DE(spec, args.replicas, args.seed, **kw)
    run.json({"joint": res})
    run.csv(f"event_{name}_outcomes", ["replica"] + list(res["reports"]),
            _outcome_rows(res["reports"], reps))
    if res["counterexamples"]:
        run.json({"counterexamples": res["counterexamples"]}, name=f"event_{name}_counterexamples")
    return (f"{name}: conjunction in {res['conjunction_count']} replica(s), "
            f"{len(res['counterexamples'])} counterexample(s)")


def cmd_coex_scan(args, run: Run) -> str:
    res = EV.run_coexistence_scan(args.lambdas, args.boxes, args.replicas, args.seed,
                                  swap_seeds=args.swap_seeds, first_replica=args.first_replica,
                                  workers=run.workers)
    rows = []
    for rep in res["table"]:
        lo, hi = rep.wilson95
        rows.append({"lambda": rep.params["lambda"], "box": rep.params["box"],
                     "successes": rep.successes, "trials": rep.trials, "p_hat": rep.p_hat,
                     "stderr": rep.stderr, "wilson_lo": lo, "wilson_hi": hi})
    checks = {}
    for lam in res["lambdas"]:
        col = EV.scan_column(res, lam)
        checks[str(lam)] = {"stable_3se": EV.stable(col), "strictly_decreasing": EV.strictly_decreasing(col)}
    run.csv("coex_scan", ["lambda", "box", "successes", "trials", "p_hat", "stderr",
                          "wilson_lo", "wilson_hi"], rows)
    run.json({"table": rows, "checks": checks})
    return f"{len(rows)} cells"


def cmd_alpha_choice(args, run: Run) -> str:
    if args.curve_csv:
        _, rows = io.read_csv(args.curve_csv)
        curve = A.DirectionalCurve(
            np.array([float(r["alpha"]) for r in rows]),
            tuple(A.Estimate(float(r["mu"]), float(io.from_jsonable(r["stderr"])), int(r["n_samples"]))
                  for r in rows))
    else:
        curve = A.directional_curve(np.linspace(0, math.pi / 2, args.grid_points), args.n,
                                    args.replicas, args.seed, first_replica=args.first_replica,
                                    workers=run.workers)
    alpha = A.alpha_choice(args.lam, curve, strict=args.strict)
    c = A.lipschitz_check(curve)
    run.json({"alpha": alpha, "lipschitz_c": c, "lambda": args.lam, "strict": args.strict,
              "curve": curve.to_rows()})
    return f"alpha={'none' if alpha is None else f'{alpha:.6g}'} lipschitz_c={c:.4g}"


COMMANDS = {
    "passage-time": cmd_passage_time,
    "compete": cmd_compete,
    "estimate-mu": cmd_estimate_mu,
    "estimate-mu-alpha": cmd_estimate_mu_alpha,
    "estimate-mu-strip": cmd_estimate_mu_strip,
    "estimate-shape": cmd_estimate_shape,
    "estimate-theta": cmd_estimate_theta,
    "busemann": cmd_busemann,
    "event": cmd_event,
    "coex-scan": cmd_coex_scan,
    "alpha-choice": cmd_alpha_choice,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _apply_config_file(parser, argv) -> None:
    """Load ``--config`` values as subparser defaults so explicit flags still win."""
    known, _ = parser.parse_known_args(argv)
    if not getattr(known, "config", None) or known.command is None:
        return
    sub = parser._subparsers._group_actions[0].choices[known.command]
    actions = {a.dest: a for a in sub._actions}
    values = io.read_config_file(known.config)
    defaults = {}
    for key, raw in values.items():
        if key in ("command", "config"):
            continue
        if key not in actions:
            raise UsageError(f"unknown config key {key!r} in {known.config}")
        act = actions[key]
        if act.type is None and isinstance(act.const, bool):    # store_true flags
            defaults[key] = boolean(raw)
        else:
            defaults[key] = raw if act.type is None else act.type(raw)
    sub.set_defaults(**defaults)


def cli_main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    except (UsageError, ValueError, OSError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        run = Run(args)
        summary = COMMANDS[args.command](args, run)
        print(run.finish(summary))
    except (ParameterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
