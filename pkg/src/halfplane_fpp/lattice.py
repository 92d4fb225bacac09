"""Sites, edges, bounded domains and the tilted-line regions built on them.

Every domain is a finite rectangle of lattice sites.  The four kinds differ in
which sides of the rectangle are artificial walls (truncations of an infinite
domain) and which are true boundaries:

* ``FULL_PLANE``   all four sides are walls
* ``HALF_PLANE``   the bottom row must be ``y = 0``; left, right, top are walls
* ``STRIP``        rows ``0..k``; left and right are walls
* ``HALF_STRIP``   rows ``0..k``, columns from ``x = 0``; only the right side is a wall
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DomainError, ParameterError

ON_LINE_TOL = 1e-9


class Site(NamedTuple):
    x: int
    y: int

    def shift(self, dx: int, dy: int) -> "Site":
        return Site(self.x + dx, self.y + dy)


ORIGIN = Site(0, 0)


def axis_site(n: int) -> Site:
    """The horizontal lattice vector ``(n, 0)``."""
    return Site(n, 0)


def yx_order(sites: Iterable[Site]) -> list[Site]:
    """Sort sites y-major, then x."""
    return sorted(sites, key=lambda s: (s.y, s.x))


class Axis(str, enum.Enum):
    H = "h"
    V = "v"


class Edge(NamedTuple):
    """Nearest-neighbour edge in canonical form: ``origin`` to ``origin + e1`` or ``+ e2``."""

    origin: Site
    axis: Axis

    @classmethod
    def between(cls, a: Site, b: Site) -> "Edge":
        a, b = Site(*a), Site(*b)
        dx, dy = b.x - a.x, b.y - a.y
        if (dx, dy) == (1, 0):
            return cls(a, Axis.H)
        if (dx, dy) == (-1, 0):
            return cls(b, Axis.H)
        if (dx, dy) == (0, 1):
            return cls(a, Axis.V)
        if (dx, dy) == (0, -1):
            return cls(b, Axis.V)
        raise ParameterError(f"sites {a} and {b} are not nearest neighbours")

    @property
    def head(self) -> Site:
        if self.axis is Axis.H:
            return self.origin.shift(1, 0)
        return self.origin.shift(0, 1)

    @property
    def endpoints(self) -> tuple[Site, Site]:
        return self.origin, self.head


class DomainKind(str, enum.Enum):
    FULL_PLANE = "full_plane"
    HALF_PLANE = "half_plane"
    STRIP = "strip"
    HALF_STRIP = "half_strip"


@dataclass(frozen=True)
class Domain:
    """A rectangular box ``[x0, x1] x [y0, y1]`` of one of the four kinds."""

    kind: DomainKind
    x0: int
    x1: int
    y0: int
    y1: int
    k: int | None = None

    def __post_init__(self):
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise ParameterError(f"empty box {self}")
        if self.kind is DomainKind.FULL_PLANE:
            return
        if self.y0 != 0:
            raise ParameterError(f"{self.kind.value} domains start at y = 0")
        if self.kind in (DomainKind.STRIP, DomainKind.HALF_STRIP):
            if self.k is None or self.k < 0 or self.y1 != self.k:
                raise ParameterError("strip domains need k >= 0 and y1 == k")
        if self.kind is DomainKind.HALF_STRIP and self.x0 != 0:
            raise ParameterError("half-strip domains start at x = 0")

    @classmethod
    def full_plane(cls, x0: int, x1: int, y0: int, y1: int) -> "Domain":
        return cls(DomainKind.FULL_PLANE, x0, x1, y0, y1)

    @classmethod
    def half_plane(cls, x0: int, x1: int, y1: int) -> "Domain":
        return cls(DomainKind.HALF_PLANE, x0, x1, 0, y1)

    @classmethod
    def strip(cls, k: int, x0: int, x1: int) -> "Domain":
        return cls(DomainKind.STRIP, x0, x1, 0, k, k)

    @classmethod
    def half_strip(cls, k: int, x1: int) -> "Domain":
        return cls(DomainKind.HALF_STRIP, 0, x1, 0, k, k)

    @property
    def width(self) -> int:
        return self.x1 - self.x0 + 1

    @property
    def height(self) -> int:
        return self.y1 - self.y0 + 1

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape ``(rows, cols)`` with row index ``y - y0``."""
        return self.height, self.width

    @property
    def size(self) -> int:
        return self.width * self.height

    def __contains__(self, site) -> bool:
        x, y = site
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def contains_box(self, other: "Domain") -> bool:
        return (self.x0 <= other.x0 and other.x1 <= self.x1
                and self.y0 <= other.y0 and other.y1 <= self.y1)

    def index(self, site) -> int:
        x, y = site
        return (y - self.y0) * self.width + (x - self.x0)

    def site(self, index: int) -> Site:
        y, x = divmod(int(index), self.width)
        return Site(x + self.x0, y + self.y0)

    def sites(self) -> list[Site]:
        """All sites, y-major then x."""
        return [Site(x, y) for y in range(self.y0, self.y1 + 1)
                for x in range(self.x0, self.x1 + 1)]

    def wall_sides(self) -> tuple[str, ...]:
        if self.kind is DomainKind.FULL_PLANE:
            return ("left", "right", "bottom", "top")
        if self.kind is DomainKind.HALF_PLANE:
            return ("left", "right", "top")
        if self.kind is DomainKind.STRIP:
            return ("left", "right")
        return ("right",)

    def on_wall(self, site) -> bool:
        """True if the site touches an artificial wall of the box."""
        x, y = site
        sides = self.wall_sides()
        return (("left" in sides and x == self.x0) or ("right" in sides and x == self.x1)
                or ("bottom" in sides and y == self.y0) or ("top" in sides and y == self.y1))

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "x0": self.x0, "x1": self.x1,
                "y0": self.y0, "y1": self.y1, "k": self.k}

    @classmethod
    def from_dict(cls, d: dict) -> "Domain":
        return cls(DomainKind(d["kind"]), d["x0"], d["x1"], d["y0"], d["y1"], d.get("k"))


_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))  # E, W, N, S


def neighbors(site, domain: Domain) -> list[Site]:
    """Lattice neighbours of ``site`` inside ``domain``, in E, W, N, S order."""
    site = Site(*site)
    if site not in domain:
        raise DomainError(f"{site} is outside {domain}")
    out = []
    for dx, dy in _STEPS:
        nb = site.shift(dx, dy)
        if nb in domain:
            out.append(nb)
    return out


def require_in(domain: Domain, sites: Iterable) -> list[Site]:
    out = [Site(*s) for s in sites]
    for s in out:
        if s not in domain:
            raise DomainError(f"{s} is outside {domain}")
    return out


# ---------------------------------------------------------------------------
# Tilted-line regions L_eps(n) / R_eps(n)
# ---------------------------------------------------------------------------

class Side(str, enum.Enum):
    L = "L"
    R = "R"


@dataclass(frozen=True)
class RegionSpec:
    """Half-plane split by the ray through ``(n - 1/2, 0)`` tilted ``theta + epsilon`` from vertical."""

    theta: float
    epsilon: float
    n: int = 0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ParameterError("epsilon must be > 0")
        if not 0 <= self.theta <= math.pi / 4:
            raise ParameterError("theta must lie in [0, pi/4]")
        if not self.theta + self.epsilon < math.pi / 2:
            raise ParameterError("theta + epsilon must be < pi/2")

    @classmethod
    def from_tan(cls, tan_eps: float, theta: float = 0.0, n: int = 0) -> "RegionSpec":
        return cls(theta=theta, epsilon=math.atan(tan_eps), n=n)

    @property
    def slope(self) -> float:
        """Horizontal run of the line per unit height."""
        return math.tan(self.theta + self.epsilon)

    def translate(self, n: int) -> "RegionSpec":
        return RegionSpec(self.theta, self.epsilon, n)

    def to_dict(self) -> dict:
        return {"theta": self.theta, "epsilon": self.epsilon, "n": self.n}


def _r_margin(spec: RegionSpec, x: int, y: int) -> float:
    # twice the signed horizontal distance to the line; >= 0 means R
    return 2 * x - (2 * spec.n - 1) - 2 * y * spec.slope


def classify(spec: RegionSpec, site) -> Side:
    """``R`` on or right of the tilted line, ``L`` strictly left of it."""
    x, y = site
    if y < 0:
        raise DomainError(f"{site} is below the half-plane")
    return Side.R if _r_margin(spec, x, y) >= -ON_LINE_TOL else Side.L


def in_R(spec: RegionSpec, site) -> bool:
    return classify(spec, site) is Side.R


def region_mask(spec: RegionSpec, domain: Domain, reflect_about: int | None = None) -> np.ndarray:
    """Boolean ``(height, width)`` mask of the R sites of a half-plane box.

    With ``reflect_about=m`` the region is mirrored in the vertical axis and
    shifted by ``m``: site ``(x, y)`` is classified as ``(m - x, y)``.
    """
    if domain.y0 < 0:
        raise DomainError("region masks need a box inside the upper half-plane")
    ys, xs = np.mgrid[domain.y0:domain.y1 + 1, domain.x0:domain.x1 + 1]
    if reflect_about is not None:
        xs = reflect_about - xs
    return 2 * xs - (2 * spec.n - 1) - 2 * ys * spec.slope >= -ON_LINE_TOL


def first_R_column(spec: RegionSpec, y: int) -> int:
    """Smallest x with ``(x, y)`` in R."""
    x = math.floor(spec.n - 0.5 + y * spec.slope) - 1
    while classify(spec, (x, y)) is Side.L:
        x += 1
    while classify(spec, (x - 1, y)) is Side.R:
        x -= 1
    return x


def boundary_R(spec: RegionSpec, y_max: int) -> list[Site]:
    """Sites of R with ``y <= y_max`` that have a neighbour in L, sorted y-major."""
    if y_max < 0:
        raise ParameterError("y_max must be >= 0")
    out = []
    for y in range(y_max + 1):
        x_first = first_R_column(spec, y)
        # R rows are intervals [x_first, inf) whose left end moves right with y,
        # so only the first few columns can see L (west, or north neighbour).
        x_next = first_R_column(spec, y + 1)
        for x in range(x_first, max(x_first, x_next - 1) + 1):
            s = Site(x, y)
            if any(classify(spec, nb) is Side.L for nb in _half_plane_nbrs(s)):
                out.append(s)
    return out


def _half_plane_nbrs(s: Site) -> list[Site]:
    return [s.shift(dx, dy) for dx, dy in _STEPS if s.y + dy >= 0]


def origin_unique_on_axis(spec: RegionSpec) -> bool:
    """True if ``(n, 0)`` is the only axis site of the inner boundary of R."""
    reach = math.ceil(spec.slope) + 2
    for x in range(spec.n + 1, spec.n + reach + 1):
        s = Site(x, 0)
        if any(classify(spec, nb) is Side.L for nb in _half_plane_nbrs(s)):
            return False
    return True


def lambda_edge_set(spec: RegionSpec, ell_prime: int) -> frozenset[Edge]:
    """Edges from boundary sites ``(x, y)``, ``1 <= y <= ell_prime``, of R to sites of L."""
    if ell_prime < 0:
        raise ParameterError("ell_prime must be >= 0")
    anchor = axis_site(spec.n)
    out = set()
    for s in boundary_R(spec, ell_prime):
        if s == anchor:
            continue
        for nb in _half_plane_nbrs(s):
            if classify(spec, nb) is Side.L:
                out.add(Edge.between(s, nb))
    return frozenset(out)


def in_half_strip(site, k: int) -> bool:
    x, y = site
    return x >= 0 and 0 <= y <= k


def omega_edge_sets(spec: RegionSpec, m: int, k: int) -> tuple[frozenset[Edge], frozenset[Edge]]:
    """Entry edges of type 1 into the half-strip, and the internal edges of its uninfected part.

    The configuration is the one where ``(n, 0)`` holds type 2 and the rest of
    the inner boundary of R holds type 1.  The first set holds every edge from
    an initially type-1 site to a half-strip neighbour, plus the vertical edges
    ``(j, k+1)-(j, k)`` with ``(j, k+1)`` in R and ``j <= m``.  The second set
    holds every edge between two half-strip sites with ``x <= m`` that are
    initially uninfected or the type-2 origin.
    """
    if m < 1 or k < 1:
        raise ParameterError("m and k must be >= 1")
    if spec.n != 0:
        raise ParameterError("omega edge sets are defined for the region anchored at n = 0")
    type1 = set(boundary_R(spec, k + 1)) - {ORIGIN}
    entry = set()
    for s in type1:
        for nb in _half_plane_nbrs(s):
            if in_half_strip(nb, k):
                entry.add(Edge.between(s, nb))
    for j in range(0, m + 1):
        top = Site(j, k + 1)
        if in_R(spec, top):
            entry.add(Edge.between(top, Site(j, k)))

    def usable(s: Site) -> bool:
        return in_half_strip(s, k) and s.x <= m and s not in type1

    inner = set()
    for x in range(0, m + 1):
        for y in range(0, k + 1):
            s = Site(x, y)
            if not usable(s):
                continue
            for nb in (s.shift(1, 0), s.shift(0, 1)):
                if usable(nb):
                    inner.add(Edge(s, Axis.H if nb.y == s.y else Axis.V))
    return frozenset(entry), frozenset(inner)


# ---------------------------------------------------------------------------
# Real lines used by the cone constructions
# ---------------------------------------------------------------------------

class LineSide(str, enum.Enum):
    ON = "on"
    POSITIVE = "positive-side"
    NEGATIVE = "negative-side"


@dataclass(frozen=True)
class LineSpec:
    """Directed line through ``anchor`` with direction angle ``angle`` from the +x axis.

    The positive side is the clockwise side of the direction, which is
    "below" for a line pointing into the upper half-plane.
    """

    anchor: tuple[float, float]
    angle: float

    @property
    def direction(self) -> tuple[float, float]:
        return math.cos(self.angle), math.sin(self.angle)

    @classmethod
    def ray_from_origin(cls, alpha: float) -> "LineSpec":
        return cls((0.0, 0.0), alpha)

    @classmethod
    def strip_corner_ray(cls, m: int, k: int, alpha: float) -> "LineSpec":
        """The ray from ``(m, k)`` at angle ``2 alpha`` to the horizontal."""
        return cls((float(m), float(k)), 2 * alpha)

    @classmethod
    def orthogonal_at(cls, alpha0: float, m: float) -> "LineSpec":
        """Line through ``m * u_alpha0`` orthogonal to the ray at angle ``alpha0``."""
        return cls((m * math.cos(alpha0), m * math.sin(alpha0)), alpha0 + math.pi / 2)

    @classmethod
    def cone_ray(cls, alpha0: float, m: float, alpha: float) -> "LineSpec":
        """Ray from ``m * u_alpha0`` at angle ``2 alpha`` to the ray at angle ``alpha0``."""
        return cls((m * math.cos(alpha0), m * math.sin(alpha0)), alpha0 + 2 * alpha)


def line_side(line: LineSpec, point) -> LineSide:
    ux, uy = line.direction
    dx, dy = point[0] - line.anchor[0], point[1] - line.anchor[1]
    cross = ux * dy - uy * dx
    scale = max(1.0, abs(dx), abs(dy))
    if abs(cross) <= ON_LINE_TOL * scale:
        return LineSide.ON
    return LineSide.POSITIVE if cross < 0 else LineSide.NEGATIVE


def digitize_ray(line: LineSpec, length: float) -> list[Site]:
    """Lattice sites nearest to the points of a ray, sampled every half unit up to ``length``."""
    ux, uy = line.direction
    out: list[Site] = []
    steps = int(math.ceil(2 * length))
    for i in range(steps + 1):
        t = 0.5 * i
        s = nearest_site((line.anchor[0] + t * ux, line.anchor[1] + t * uy))
        if not out or out[-1] != s:
            out.append(s)
    return out


def nearest_site(point) -> Site:
    """Nearest lattice site to a real point; ties go to the smaller coordinate."""
    return Site(int(math.ceil(point[0] - 0.5)), int(math.ceil(point[1] - 0.5)))
