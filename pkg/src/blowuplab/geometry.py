"""Planar domains: curvature, orthogonal feet, distance, skeleton, level sets.

Two domain families cover everything the predictors need: smooth
star-shaped regions given by a trigonometric-polynomial radius r(theta),
and axis-aligned rectangles. An "orthogonal foot" of an interior point x
is a boundary point y whose segment to x stays inside the domain and
meets the boundary perpendicularly; the skeleton is the set of interior
points with at least two equidistant orthogonal feet, and s(x) is the
smallest such equidistant distance. omega-level sets of the boundary
distance and the skeleton arrival time build directly on these.

Rectangles get closed-form feet and an exact skeleton (mid-lines plus
the four corner bisectors). Smooth domains are sampled on a grid; the
skeleton is located by jumps of the nearest-foot position between
neighboring grid points (parameter continuity is useless near focal
points, e.g. the disc center, where foot angles rotate arbitrarily
fast), then each detection is refined by bisection to the equidistance
locus.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .errors import RangeError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class BoundaryPoint:
    point: tuple
    tangent: Optional[tuple]
    curvature: Optional[float]
    smooth: bool = True


@dataclass(frozen=True)
class Foot:
    """Orthogonal foot: boundary point, its parameter, distance, curvature."""

    point: tuple
    param: float
    distance: float
    curvature: float
    edge: Optional[int] = None  # rectangle edge index, None for smooth domains


@dataclass
class FootSet:
    feet: list
    degenerate_circle: bool = False
    radius: float = np.nan

    def distances(self):
        return np.array([f.distance for f in self.feet])

    def min_distance(self):
        if self.degenerate_circle:
            return self.radius
        return float(self.distances().min())


class PlanarDomain:
    """Common interface; see SmoothPolarDomain and RectangleDomain."""

    def contains(self, points):
        raise NotImplementedError

    def signed_distance(self, points):
        raise NotImplementedError

    def distance(self, points):
        """d(x, boundary) for interior points (positive part of signed d)."""
        return self.signed_distance(points)

    def orthogonal_feet(self, x) -> FootSet:
        raise NotImplementedError

    def boundary_point(self, param) -> BoundaryPoint:
        raise NotImplementedError

    @property
    def diameter(self):
        (x0, x1), (y0, y1) = self.bounding_box
        return float(np.hypot(x1 - x0, y1 - y0))

    @staticmethod
    def from_spec(spec: str) -> "PlanarDomain":
        """Parse config tokens: disc | square:<L> | rect:<a>,<b> | polar:<coeffs>."""
        spec = spec.strip()
        if spec == "disc":
            return SmoothPolarDomain(1.0)
        if spec.startswith("square:"):
            L = float(spec.split(":", 1)[1])
            return RectangleDomain.centered(L, L)
        if spec.startswith("rect:"):
            a, b = (float(s) for s in spec.split(":", 1)[1].split(","))
            return RectangleDomain.centered(a, b)
        if spec.startswith("polar:"):
            vals = [float(s) for s in spec.split(":", 1)[1].split(",")]
            c0, rest = vals[0], vals[1:]
            if len(rest) % 2:
                raise ValueError("polar coefficients must come in (cos, sin) pairs")
            cos_c = rest[0::2]
            sin_c = rest[1::2]
            return SmoothPolarDomain(c0, cos_c, sin_c)
        raise ValueError(f"unknown domain spec {spec!r}")


class SmoothPolarDomain(PlanarDomain):
    """Star-shaped region r < r(theta), r a trigonometric polynomial.

    r(theta) = c0 + sum_k a_k cos(k theta) + b_k sin(k theta). Positivity
    of r is checked on a dense grid at construction; a polar graph is
    star-shaped with respect to the origin by construction. A warning is
    emitted when max|curvature| * min r exceeds `roughness_bound`: the
    layer expansion behind the predictors assumes O(1) curvature.
    """

    N_BOUNDARY = 4096

    def __init__(self, c0, cos_coeffs=(), sin_coeffs=(), roughness_bound=50.0):
        self.c0 = float(c0)
        self.cos_coeffs = np.asarray(cos_coeffs, dtype=float)
        self.sin_coeffs = np.asarray(sin_coeffs, dtype=float)
        if len(self.cos_coeffs) != len(self.sin_coeffs):
            raise ValueError("cos and sin coefficient lists must have equal length")
        th = np.linspace(0.0, TWO_PI, self.N_BOUNDARY, endpoint=False)
        r = self.radius(th)
        if np.any(r <= 0.0):
            raise ValueError("polar radius must be positive everywhere")
        kap = self.curvature(th)
        if np.max(np.abs(kap)) * np.min(r) > roughness_bound:
            warnings.warn(
                "boundary is rough/spiky (max|kappa|*min r = "
                f"{np.max(np.abs(kap)) * np.min(r):.1f}); layer predictions "
                "are unreliable here", stacklevel=2)
        # dense boundary cache used by distance and foot queries
        self._th = th
        self._bp = self.point_at(th)          # (N, 2)
        self._tau = self.tangent_at(th)        # (N, 2)

    # -- radius and derivatives --------------------------------------------
    def radius(self, th):
        th = np.asarray(th, dtype=float)
        r = np.full_like(th, self.c0)
        for k, (a, b) in enumerate(zip(self.cos_coeffs, self.sin_coeffs), start=1):
            r += a * np.cos(k * th) + b * np.sin(k * th)
        return r

    def radius_d1(self, th):
        th = np.asarray(th, dtype=float)
        r = np.zeros_like(th)
        for k, (a, b) in enumerate(zip(self.cos_coeffs, self.sin_coeffs), start=1):
            r += -a * k * np.sin(k * th) + b * k * np.cos(k * th)
        return r

    def radius_d2(self, th):
        th = np.asarray(th, dtype=float)
        r = np.zeros_like(th)
        for k, (a, b) in enumerate(zip(self.cos_coeffs, self.sin_coeffs), start=1):
            r += -a * k * k * np.cos(k * th) - b * k * k * np.sin(k * th)
        return r

    # -- boundary geometry ---------------------------------------------------
    def point_at(self, th):
        r = self.radius(th)
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)

    def tangent_at(self, th):
        r, r1 = self.radius(th), self.radius_d1(th)
        tx = r1 * np.cos(th) - r * np.sin(th)
        ty = r1 * np.sin(th) + r * np.cos(th)
        n = np.hypot(tx, ty)
        return np.stack([tx / n, ty / n], axis=-1)

    def curvature(self, th):
        r, r1, r2 = self.radius(th), self.radius_d1(th), self.radius_d2(th)
        return (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1) ** 1.5

    def boundary_point(self, param) -> BoundaryPoint:
        p = self.point_at(np.float64(param))
        t = self.tangent_at(np.float64(param))
        return BoundaryPoint(point=tuple(p), tangent=tuple(t),
                             curvature=float(self.curvature(np.float64(param))))

    @property
    def bounding_box(self):
        x, y = self._bp[:, 0], self._bp[:, 1]
        return (float(x.min()), float(x.max())), (float(y.min()), float(y.max()))

    # -- membership and distance ---------------------------------------------
    def contains(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        th = np.arctan2(pts[:, 1], pts[:, 0])
        rho = np.hypot(pts[:, 0], pts[:, 1])
        out = rho < self.radius(th)
        return bool(out[0]) if np.asarray(points).ndim == 1 else out

    def _nearest_on_boundary(self, pts, newton_iters=3):
        """Chunked nearest boundary parameter + distance for many points."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n = len(pts)
        th_best = np.empty(n)
        for lo in range(0, n, 2048):
            chunk = pts[lo:lo + 2048]
            d2 = ((chunk[:, None, :] - self._bp[None, :, :]) ** 2).sum(axis=2)
            th_best[lo:lo + 2048] = self._th[np.argmin(d2, axis=1)]
        th = th_best
        # Newton on h(theta) = 0.5 |x - y(theta)|^2
        for _ in range(newton_iters):
            y = self.point_at(th)
            r, r1, r2 = self.radius(th), self.radius_d1(th), self.radius_d2(th)
            yp = np.stack([r1 * np.cos(th) - r * np.sin(th),
                           r1 * np.sin(th) + r * np.cos(th)], axis=-1)
            ypp = np.stack([(r2 - r) * np.cos(th) - 2 * r1 * np.sin(th),
                            (r2 - r) * np.sin(th) + 2 * r1 * np.cos(th)], axis=-1)
            diff = pts - y
            g = -(diff * yp).sum(axis=1)
            gp = (yp * yp).sum(axis=1) - (diff * ypp).sum(axis=1)
            denom = np.where(np.abs(gp) > 1e-14, gp, 1.0)
            step = np.where(np.abs(gp) > 1e-14, g / denom, 0.0)
            th = th - np.clip(step, -0.01, 0.01)
        y = self.point_at(th)
        d = np.hypot(*(pts - y).T)
        return th, d, y

    def signed_distance(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        _, d, _ = self._nearest_on_boundary(pts)
        sign = np.where(self.contains(pts), 1.0, -1.0)
        out = sign * d
        return float(out[0]) if np.asarray(points).ndim == 1 else out

    # -- orthogonal feet -------------------------------------------------------
    def _foot_residual(self, pts, th):
        """g = (x - y(theta)) . tau(theta), broadcast over (pts, th) grids."""
        y = self.point_at(th)
        tau = self.tangent_at(th)
        diff = pts[:, None, :] - y[None, :, :]
        return (diff * tau[None, :, :]).sum(axis=2)

    def orthogonal_feet(self, x, inside_samples=64) -> FootSet:
        return self.feet_batch(np.asarray(x, dtype=float)[None, :],
                               inside_samples=inside_samples)[0]

    def feet_batch(self, pts, inside_samples=64):
        """All orthogonal feet for each point; vectorized bisection refine.

        The dense residual grid catches every sign change of g(theta);
        each root is polished by bisection, then the foot is kept only if
        the full segment to it stays inside the domain. An exactly
        radial case (all residuals ~ 0, disc center) comes back as a
        degenerate circle-of-feet marker.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = []
        scale = max(self.c0, np.abs(self.cos_coeffs).sum()
                    + np.abs(self.sin_coeffs).sum())
        for lo in range(0, len(pts), 512):
            chunk = pts[lo:lo + 512]
            G = self._foot_residual(chunk, self._th)
            Gw = np.concatenate([G, G[:, :1]], axis=1)  # wrap
            s_l = np.sign(Gw[:, :-1])
            s_r = np.sign(Gw[:, 1:])
            # an exact zero at a grid node (g(0)=0 on the disc axis) must
            # count as a root: the plain product test skips it
            sign_change = (s_l * s_r < 0) | (s_l == 0)
            for i, p in enumerate(chunk):
                if np.max(np.abs(G[i])) < 1e-11 * scale:
                    rho = float(np.hypot(*p))
                    out.append(FootSet(feet=[], degenerate_circle=True,
                                       radius=float(self.radius(0.0)) - rho))
                    continue
                cols = np.where(sign_change[i])[0]
                th_lo = self._th[cols]
                th_hi = th_lo + (self._th[1] - self._th[0])
                g_lo = Gw[i, cols]
                for _ in range(45):
                    mid = 0.5 * (th_lo + th_hi)
                    gm = self._foot_residual(p[None, :], mid)[0]
                    take_lo = np.sign(gm) == np.sign(g_lo)
                    th_lo = np.where(take_lo, mid, th_lo)
                    g_lo = np.where(take_lo, gm, g_lo)
                    th_hi = np.where(take_lo, th_hi, mid)
                th_star = 0.5 * (th_lo + th_hi)
                feet = []
                for th_f in th_star:
                    y = self.point_at(np.float64(th_f))
                    if not self._segment_inside(p, y, inside_samples):
                        continue
                    feet.append(Foot(point=tuple(y), param=float(th_f % TWO_PI),
                                     distance=float(np.hypot(*(p - y))),
                                     curvature=float(self.curvature(np.float64(th_f)))))
                feet.sort(key=lambda f: f.distance)
                out.append(FootSet(feet=feet))
        return out

    def _segment_inside(self, x, y, n_samples=64):
        s = np.linspace(0.0, 1.0, n_samples + 1)[:-1]
        P = x[None, :] + s[:, None] * (y - x)[None, :]
        th = np.arctan2(P[:, 1], P[:, 0])
        rho = np.hypot(P[:, 0], P[:, 1])
        return bool(np.all(rho <= self.radius(th) * (1.0 + 1e-9) + 1e-12))

    def nearest_feet_grid(self, pts):
        """Nearest boundary point/parameter per grid point (fast path)."""
        th, d, y = self._nearest_on_boundary(pts)
        return th, d, y


class RectangleDomain(PlanarDomain):
    """Axis-aligned rectangle [x0, x1] x [y0, y1].

    Edges are numbered 0: bottom, 1: right, 2: top, 3: left; the boundary
    parameter is arc length counterclockwise from (x0, y0). Corners carry
    no tangent and are excluded as orthogonal feet but participate in the
    distance function.
    """

    def __init__(self, x0, x1, y0, y1):
        if not (x1 > x0 and y1 > y0):
            raise ValueError("degenerate rectangle")
        self.x0, self.x1, self.y0, self.y1 = map(float, (x0, x1, y0, y1))
        self.cx = 0.5 * (x0 + x1)
        self.cy = 0.5 * (y0 + y1)
        self.a = 0.5 * (x1 - x0)  # half-width in x
        self.b = 0.5 * (y1 - y0)  # half-width in y

    @classmethod
    def centered(cls, a, b):
        """Rectangle [-a, a] x [-b, b]."""
        return cls(-a, a, -b, b)

    @property
    def bounding_box(self):
        return (self.x0, self.x1), (self.y0, self.y1)

    @property
    def corners(self):
        return [(self.x0, self.y0), (self.x1, self.y0),
                (self.x1, self.y1), (self.x0, self.y1)]

    def contains(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = ((pts[:, 0] > self.x0) & (pts[:, 0] < self.x1)
               & (pts[:, 1] > self.y0) & (pts[:, 1] < self.y1))
        return bool(out[0]) if np.asarray(points).ndim == 1 else out

    def signed_distance(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        dx = np.minimum(pts[:, 0] - self.x0, self.x1 - pts[:, 0])
        dy = np.minimum(pts[:, 1] - self.y0, self.y1 - pts[:, 1])
        inside = np.minimum(dx, dy)
        # outside: distance to the box, negated
        ox = np.maximum(np.maximum(self.x0 - pts[:, 0], pts[:, 0] - self.x1), 0.0)
        oy = np.maximum(np.maximum(self.y0 - pts[:, 1], pts[:, 1] - self.y1), 0.0)
        outside = np.hypot(ox, oy)
        out = np.where((dx >= 0) & (dy >= 0), inside, -outside)
        return float(out[0]) if np.asarray(points).ndim == 1 else out

    def boundary_point(self, param, corner_tol=1e-12) -> BoundaryPoint:
        W, H = self.x1 - self.x0, self.y1 - self.y0
        s = float(param) % (2 * (W + H))
        marks = [0.0, W, W + H, 2 * W + H, 2 * (W + H)]
        for m in marks:
            if abs(s - m) <= corner_tol:
                idx = marks.index(m) % 4
                return BoundaryPoint(point=self.corners[idx], tangent=None,
                                     curvature=None, smooth=False)
        if s < W:
            return BoundaryPoint((self.x0 + s, self.y0), (1.0, 0.0), 0.0)
        if s < W + H:
            return BoundaryPoint((self.x1, self.y0 + (s - W)), (0.0, 1.0), 0.0)
        if s < 2 * W + H:
            return BoundaryPoint((self.x1 - (s - W - H), self.y1), (-1.0, 0.0), 0.0)
        return BoundaryPoint((self.x0, self.y1 - (s - 2 * W - H)), (0.0, -1.0), 0.0)

    def orthogonal_feet(self, x) -> FootSet:
        return self.feet_batch(np.asarray(x, dtype=float)[None, :])[0]

    def feet_batch(self, pts, inside_samples=None):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        W, H = self.x1 - self.x0, self.y1 - self.y0
        out = []
        for px, py in pts:
            feet = [
                Foot(point=(px, self.y0), param=px - self.x0,
                     distance=py - self.y0, curvature=0.0, edge=0),
                Foot(point=(self.x1, py), param=W + (py - self.y0),
                     distance=self.x1 - px, curvature=0.0, edge=1),
                Foot(point=(px, self.y1), param=2 * W + H - (px - self.x0),
                     distance=self.y1 - py, curvature=0.0, edge=2),
                Foot(point=(self.x0, py), param=2 * (W + H) - (py - self.y0),
                     distance=px - self.x0, curvature=0.0, edge=3),
            ]
            feet.sort(key=lambda f: f.distance)
            out.append(FootSet(feet=feet))
        return out


# -- skeleton ------------------------------------------------------------------

@dataclass
class SkeletonSample:
    point: np.ndarray
    s_value: float
    pair_distances: list      # one distance per qualifying equidistant class
    branch: int = -1


@dataclass
class Skeleton:
    samples: list
    resolution: float
    s_min: float                       # inf over the skeleton of s(x)
    touches_boundary: bool
    domain: PlanarDomain = field(repr=False, default=None)

    def points(self):
        return np.array([s.point for s in self.samples])

    def s_values(self):
        return np.array([s.s_value for s in self.samples])

    def branches(self):
        out = {}
        for s in self.samples:
            out.setdefault(s.branch, []).append(s)
        return out

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("x,y,s,branch\n")
            for s in self.samples:
                fh.write(f"{float(s.point[0])!r},{float(s.point[1])!r},"
                         f"{float(s.s_value)!r},{s.branch}\n")


def _equidistant_classes(distances, tol):
    """Group sorted distances into classes with internal gaps <= tol."""
    if len(distances) == 0:
        return []
    d = np.sort(np.asarray(distances, dtype=float))
    groups = [[d[0]]]
    for x in d[1:]:
        if x - groups[-1][-1] <= tol:
            groups[-1].append(x)
        else:
            groups.append([x])
    return groups


def _label_branches(samples, link_radius):
    """Connected-component labels over samples, deterministic ordering."""
    if not samples:
        return
    pts = np.array([s.point for s in samples])
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    parent = list(range(len(samples)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    # neighbor search on a hash grid to stay near-linear
    cell = {}
    inv = link_radius
    keys = np.floor(pts / inv).astype(int)
    for i, k in enumerate(map(tuple, keys)):
        cell.setdefault(k, []).append(i)
    for i, k in enumerate(map(tuple, keys)):
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for j in cell.get((k[0] + dx, k[1] + dy), ()):
                    if j > i and np.hypot(*(pts[i] - pts[j])) <= link_radius:
                        ri, rj = find(i), find(j)
                        if ri != rj:
                            parent[max(ri, rj)] = min(ri, rj)
    label_of = {}
    next_label = 0
    for i in order:
        r = find(i)
        if r not in label_of:
            label_of[r] = next_label
            next_label += 1
    for i, s in enumerate(samples):
        s.branch = label_of[find(i)]


def compute_skeleton(dom: PlanarDomain, resolution: float) -> Skeleton:
    """Sample the skeleton of the domain at the given spacing."""
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    if isinstance(dom, RectangleDomain):
        return _rectangle_skeleton(dom, resolution)
    return _smooth_skeleton(dom, resolution)


def _rectangle_skeleton(dom: RectangleDomain, res: float) -> Skeleton:
    """Exact skeleton: both mid-lines plus the four corner bisectors.

    Every mid-line point has an equidistant opposite-edge pair; the corner
    bisectors are equidistant to their two adjacent edges, reaching the
    corners where s -> 0 (so the skeleton touches the boundary and the
    arrival time is zero)."""
    a, b, cx, cy = dom.a, dom.b, dom.cx, dom.cy
    tol = 1e-9 * dom.diameter
    samples = []

    def add(x, y):
        fs = dom.orthogonal_feet((x, y))
        classes = _equidistant_classes(fs.distances(), tol)
        quals = [g[0] for g in classes if len(g) >= 2]
        if not quals:
            return
        samples.append(SkeletonSample(point=np.array([x, y]),
                                      s_value=float(min(quals)),
                                      pair_distances=[float(q) for q in quals]))

    nH = max(int(np.ceil(2 * a / res)), 2)
    for x in np.linspace(cx - a, cx + a, nH + 1)[1:-1]:
        add(x, cy)
    nV = max(int(np.ceil(2 * b / res)), 2)
    for y in np.linspace(cy - b, cy + b, nV + 1)[1:-1]:
        add(cx, y)
    c = min(a, b)
    nD = max(int(np.ceil(c * np.sqrt(2.0) / res)), 2)
    ts = np.linspace(0.0, c, nD + 1)[1:]
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            for t in ts:
                add(cx + sx * (a - t), cy + sy * (b - t))
    samples = _dedup_samples(samples, 1e-9 * dom.diameter)
    _label_branches(samples, 1.8 * res)
    return Skeleton(samples=samples, resolution=res, s_min=0.0,
                    touches_boundary=True, domain=dom)


def _smooth_skeleton(dom: SmoothPolarDomain, res: float,
                     equi_rel_tol=1e-6) -> Skeleton:
    (bx0, bx1), (by0, by1) = dom.bounding_box
    xs = np.arange(bx0, bx1 + res, res)
    ys = np.arange(by0, by1 + res, res)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    inside = dom.contains(pts)
    sd = np.full(len(pts), -1.0)
    sd[inside] = dom.signed_distance(pts[inside])
    # only points a little off the boundary participate
    ok = inside & (sd > 0.3 * res)
    th = np.full(len(pts), np.nan)
    yb = np.full((len(pts), 2), np.nan)
    th[ok], _, yb[ok] = dom.nearest_feet_grid(pts[ok])

    ok2 = ok.reshape(X.shape)
    ybg = yb.reshape(X.shape + (2,))
    detections = []
    for axis in (0, 1):
        sl_a = (slice(None, -1), slice(None)) if axis == 0 else (slice(None), slice(None, -1))
        sl_b = (slice(1, None), slice(None)) if axis == 0 else (slice(None), slice(1, None))
        both = ok2[sl_a] & ok2[sl_b]
        jump = np.hypot(ybg[sl_a][..., 0] - ybg[sl_b][..., 0],
                        ybg[sl_a][..., 1] - ybg[sl_b][..., 1])
        hits = both & (jump > max(6.0 * res, 0.05 * dom.diameter) * 0.5)
        ii, jj = np.where(hits)
        for i, j in zip(ii, jj):
            if axis == 0:
                p = np.array([xs[i], ys[j]])
                q = np.array([xs[i + 1], ys[j]])
            else:
                p = np.array([xs[i], ys[j]])
                q = np.array([xs[i], ys[j + 1]])
            detections.append((p, q))

    tol = equi_rel_tol * dom.diameter
    samples = []
    for p, q in detections:
        pt = _refine_equidistance(dom, p, q)
        if pt is None:
            continue
        fs = dom.orthogonal_feet(pt)
        if fs.degenerate_circle:
            samples.append(SkeletonSample(point=pt, s_value=fs.radius,
                                          pair_distances=[fs.radius]))
            continue
        classes = _equidistant_classes(fs.distances(), tol)
        quals = [g[0] for g in classes if len(g) >= 2]
        if not quals:
            continue
        samples.append(SkeletonSample(point=pt, s_value=float(min(quals)),
                                      pair_distances=[float(g) for g in quals]))
    # dedup near-coincident samples
    samples = _dedup_samples(samples, 0.25 * res)
    if not samples:
        raise RangeError("no skeleton detections; resolution too coarse")
    _label_branches(samples, 1.8 * res)
    s_min = float(min(s.s_value for s in samples))
    touches = s_min <= 2.0 * res
    return Skeleton(samples=samples, resolution=res,
                    s_min=0.0 if touches else s_min,
                    touches_boundary=touches, domain=dom)


def _refine_equidistance(dom: SmoothPolarDomain, p, q, iters=40):
    """Bisect on the segment [p, q] for the point where the nearest feet
    approached from either endpoint become equidistant."""
    th_p, d_p, _ = dom.nearest_feet_grid(p[None, :])
    th_q, d_q, _ = dom.nearest_feet_grid(q[None, :])
    th_a, th_b = float(th_p[0]), float(th_q[0])

    def delta(x):
        da = _tracked_distance(dom, x, th_a)
        db = _tracked_distance(dom, x, th_b)
        return da - db

    fa = delta(p)
    fb = delta(q)
    if not np.isfinite(fa) or not np.isfinite(fb) or fa * fb > 0:
        # endpoints already agree; midpoint is the best guess
        mid = 0.5 * (p + q)
        return mid if dom.contains(mid) else None
    lo, hi = p.copy(), q.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = delta(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(fa):
            lo, fa = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _tracked_distance(dom: SmoothPolarDomain, x, th0, iters=4):
    """Distance to the locally tracked foot near parameter th0 (Newton)."""
    th = th0
    for _ in range(iters):
        y = dom.point_at(np.float64(th))
        r, r1, r2 = (dom.radius(np.float64(th)), dom.radius_d1(np.float64(th)),
                     dom.radius_d2(np.float64(th)))
        yp = np.array([r1 * np.cos(th) - r * np.sin(th),
                       r1 * np.sin(th) + r * np.cos(th)])
        ypp = np.array([(r2 - r) * np.cos(th) - 2 * r1 * np.sin(th),
                        (r2 - r) * np.sin(th) + 2 * r1 * np.cos(th)])
        diff = x - y
        g = -(diff * yp).sum()
        gp = (yp * yp).sum() - (diff * ypp).sum()
        if abs(gp) < 1e-14:
            break
        step = g / gp
        th -= np.clip(step, -0.2, 0.2)
    y = dom.point_at(np.float64(th))
    return float(np.hypot(*(x - y)))


def _dedup_samples(samples, radius):
    kept = []
    pts = []
    for s in sorted(samples, key=lambda s: (s.point[0], s.point[1])):
        if pts and np.min(np.hypot(*(np.array(pts) - s.point).T)) < radius:
            continue
        kept.append(s)
        pts.append(s.point)
    return kept


# -- level sets ------------------------------------------------------------------

def omega_set(dom: PlanarDomain, level: float, resolution: float = None):
    """Level set {x : d(x, boundary) = level} as closed polylines.

    Marching squares with linear interpolation on a signed-distance grid;
    raises RangeError if the level exceeds the inradius (empty set)."""
    if level <= 0:
        raise ValueError("level must be positive")
    if resolution is None:
        resolution = dom.diameter / 400.0
    (bx0, bx1), (by0, by1) = dom.bounding_box
    pad = 2 * resolution
    xs = np.arange(bx0 - pad, bx1 + pad + resolution, resolution)
    ys = np.arange(by0 - pad, by1 + pad + resolution, resolution)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    F = dom.signed_distance(np.column_stack([X.ravel(), Y.ravel()]))
    F = F.reshape(X.shape) - level
    if F.max() <= 0:
        raise RangeError(f"no points at distance {level}; exceeds inradius")
    segments = _marching_squares(xs, ys, F)
    return _chain_segments(segments)


def _marching_squares(xs, ys, F):
    """Per-cell crossing segments of F = 0. Returns list of (key_a, pt_a, key_b, pt_b)."""
    nx, ny = F.shape
    segs = []

    def interp(x0, f0, x1, f1):
        t = f0 / (f0 - f1)
        return x0 + t * (x1 - x0)

    for i in range(nx - 1):
        for j in range(ny - 1):
            f = (F[i, j], F[i + 1, j], F[i + 1, j + 1], F[i, j + 1])
            if (f[0] > 0) == (f[1] > 0) == (f[2] > 0) == (f[3] > 0):
                continue
            crossings = []
            # edges: bottom (j fixed), right, top, left; key = (edge-grid id)
            if (f[0] > 0) != (f[1] > 0):
                x = interp(xs[i], f[0], xs[i + 1], f[1])
                crossings.append((("h", i, j), (x, ys[j])))
            if (f[1] > 0) != (f[2] > 0):
                y = interp(ys[j], f[1], ys[j + 1], f[2])
                crossings.append((("v", i + 1, j), (xs[i + 1], y)))
            if (f[3] > 0) != (f[2] > 0):
                x = interp(xs[i], f[3], xs[i + 1], f[2])
                crossings.append((("h", i, j + 1), (x, ys[j + 1])))
            if (f[0] > 0) != (f[3] > 0):
                y = interp(ys[j], f[0], ys[j + 1], f[3])
                crossings.append((("v", i, j), (xs[i], y)))
            if len(crossings) == 2:
                segs.append((*crossings[0], *crossings[1]))
            elif len(crossings) == 4:
                # saddle: split by the cell-center sign
                fc = 0.25 * sum(f)
                # order of `crossings` here: bottom, right, top, left
                if (fc > 0) == (f[0] > 0):
                    pairs = [(0, 1), (2, 3)]
                else:
                    pairs = [(0, 3), (1, 2)]
                for a, b in pairs:
                    segs.append((*crossings[a], *crossings[b]))
    return segs


def _chain_segments(segs):
    """Walk crossing segments into closed loops (lists of points)."""
    adj = {}
    pt_of = {}
    for ka, pa, kb, pb in segs:
        adj.setdefault(ka, []).append(kb)
        adj.setdefault(kb, []).append(ka)
        pt_of[ka] = pa
        pt_of[kb] = pb
    visited = set()
    loops = []
    for start in sorted(adj.keys()):
        if start in visited or not adj[start]:
            continue
        loop = [start]
        visited.add(start)
        cur = start
        prev = None
        while True:
            nxts = [k for k in adj[cur] if k != prev and k not in visited]
            if not nxts:
                closing = [k for k in adj[cur] if k == start]
                break
            prev, cur = cur, nxts[0]
            visited.add(cur)
            loop.append(cur)
        if len(loop) >= 3:
            loops.append(np.array([pt_of[k] for k in loop]))
    loops.sort(key=lambda L: (-len(L), L[0, 0], L[0, 1]))
    return loops


def skeleton_arrival_time(skel: Skeleton, rs, eps: float, eta0: float) -> float:
    """First time the inward-moving layer-peak set reaches the skeleton.

    T_S solves s_min = eta0 * phi(t; eps); zero when the skeleton touches
    the boundary, +inf when the required reaction state is out of range."""
    if skel.touches_boundary or skel.s_min <= 0.0:
        return 0.0
    u_target = (skel.s_min / (eta0 * eps)) ** 4
    if rs.form == "tabulated" and u_target > rs._u_end:
        return np.inf
    try:
        return float(rs.invert(u_target))
    except (OverflowError, RangeError):
        return np.inf


def ellipse_coefficients(a, b, n_harmonics=64, n_samples=4096):
    """Fourier cosine coefficients of the polar radius of an ellipse.

    r(theta) = a b / sqrt((b cos)^2 + (a sin)^2); even in theta so the
    sine coefficients vanish. Truncation error decays geometrically."""
    th = np.linspace(0.0, TWO_PI, n_samples, endpoint=False)
    r = a * b / np.sqrt((b * np.cos(th)) ** 2 + (a * np.sin(th)) ** 2)
    F = np.fft.rfft(r) / n_samples
    c0 = float(F[0].real)
    cos_c = 2.0 * F[1:n_harmonics + 1].real
    sin_c = -2.0 * F[1:n_harmonics + 1].imag
    return c0, cos_c.tolist(), sin_c.tolist()


def ellipse_domain(a, b, n_harmonics=64) -> SmoothPolarDomain:
    c0, cos_c, sin_c = ellipse_coefficients(a, b, n_harmonics)
    return SmoothPolarDomain(c0, cos_c, sin_c)


def potato_domain() -> SmoothPolarDomain:
    """The asymmetric test region r = 1 + 0.3 (cos t - sin 3t)."""
    return SmoothPolarDomain(1.0, [0.3, 0.0, 0.0], [0.0, 0.0, -0.3])


def max_distance_point(dom: PlanarDomain, seeds=None):
    """argmax of d(x, boundary) by multi-start Nelder-Mead.

    Seeds default to a coarse interior grid; for skeleton-aware calls
    pass the deepest skeleton samples (the maximizer lies on the skeleton)."""
    if seeds is None:
        (bx0, bx1), (by0, by1) = dom.bounding_box
        g = np.linspace(0.15, 0.85, 6)
        seeds = [(bx0 + u * (bx1 - bx0), by0 + v * (by1 - by0))
                 for u in g for v in g]
        seeds = [s for s in seeds if dom.contains(np.array(s))]

    def neg_d(z):
        if not dom.contains(z):
            return 1.0
        return -float(dom.signed_distance(z))

    best = None
    for s in seeds:
        r = minimize(neg_d, np.asarray(s, dtype=float), method="Nelder-Mead",
                     options=dict(xatol=1e-10, fatol=1e-12, maxiter=400))
        if best is None or r.fun < best.fun:
            best = r
    return best.x, -best.fun
