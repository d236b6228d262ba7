"""Asymptotic blow-up predictors built on the layer profiles and geometry.

The short-time solution is the uniform reaction state u0(t) corrected by
one boundary-layer profile per orthogonal foot; its maxima act as
surrogates for the blow-up set. Second order: the profile is monotone,
exponentially small corrections dominate and the prediction collapses to
the distance-function argmax. Fourth order: the profile overshoots at
eta0, so the layer peaks sweep inward along the level set omega(t) of
the distance function; once omega(t) reaches the skeleton, equidistant
feet reinforce and the singularities land on skeleton points where
s(x) = eta0 * phi(T_eps; eps).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import RangeError
from .geometry import (PlanarDomain, RectangleDomain, Skeleton,
                       max_distance_point, omega_set, skeleton_arrival_time)
from .profiles import get_correction, get_profile4, v2
from .reaction import TABLE_DELTA, ReactionSolution


@dataclass
class Prediction:
    """Predicted singularity set with the inputs that produced it.

    regime is one of "origin", "strip-pair", "distance-argmax",
    "omega-set", "skeleton-points". points is an (n, d) array; for the
    omega-set regime the full level curves ride along in omega_loops and
    points holds the curvature-ranked candidates (empty when curvature
    cannot discriminate, e.g. the disc ring)."""

    regime: str
    points: np.ndarray
    metadata: dict = field(default_factory=dict)
    candidates: list = field(default_factory=list)
    omega_loops: list = field(default_factory=list)

    @property
    def multiplicity(self):
        return len(self.points)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# regime={self.regime}\n")
            for k in sorted(self.metadata):
                fh.write(f"# {k}={self.metadata[k]!r}\n")
            dim = self.points.shape[1] if self.points.size else 2
            cols = ["x", "y", "z"][:dim]
            fh.write(",".join(cols) + ",selected\n")
            for p in self.points:
                fh.write(",".join(repr(float(c)) for c in p) + ",1\n")
            for c in self.candidates:
                p = c["point"]
                if any(np.allclose(p, q) for q in self.points):
                    continue
                fh.write(",".join(repr(float(v)) for v in p) + ",0\n")


# -- one-dimensional ---------------------------------------------------------

def uniform_1d(rs: ReactionSolution, order: int, eps: float, x, t,
               profile=None):
    """Uniformly valid short-time solution on the strip [-1, 1]:
    u0(t) * [1 + v((1-x)/phi) + v((1+x)/phi) - 2]."""
    u0 = rs.state(t)
    phi = rs.gauge(t, eps, order)
    if order == 2:
        v = v2
    else:
        prof = profile if profile is not None else get_profile4()
        v = prof.evaluate
    x = np.asarray(x, dtype=float)
    # (va + vb) - 1 rather than 1 + va + vb - 2: addition commutes bitwise,
    # so mirrored arguments give bitwise-equal values
    return u0 * ((v((1.0 - x) / phi) + v((1.0 + x) / phi)) - 1.0)


def outer_1d_second(rs: ReactionSolution, eps: float, x, t):
    """Outer expansion of the second-order solution, valid for 1 +- x >> phi."""
    u0 = rs.state(t)
    phi = rs.gauge(t, eps, 2)
    x = np.asarray(x, dtype=float)
    if np.any(1.0 - x <= 5.0 * phi) or np.any(1.0 + x <= 5.0 * phi):
        raise RangeError("outer expansion invalid within 5 layer widths of x=+-1")
    c = 8.0 * phi ** 3 / np.sqrt(np.pi)
    corr = ((1.0 - x) ** -3 * np.exp(-(1.0 - x) ** 2 / (4.0 * phi ** 2))
            + (1.0 + x) ** -3 * np.exp(-(1.0 + x) ** 2 / (4.0 * phi ** 2)))
    return u0 * (1.0 - c * corr)


def predict_1d_fourth(rs: ReactionSolution, eps: float, T_eps: float,
                      eta0: float = None) -> Prediction:
    """Crude strip prediction: peaks at +-(1 - eta0 phi_c), merging to the
    origin once eta0 phi_c exceeds 1."""
    if eta0 is None:
        eta0 = get_profile4().eta0
    phi_c = rs.gauge(T_eps, eps, 4)
    meta = dict(eps=eps, order=4, T_eps=T_eps, eta0=eta0, phi_c=phi_c)
    if eta0 * phi_c <= 1.0:
        xc = 1.0 - eta0 * phi_c
        return Prediction("strip-pair", np.array([[-xc], [xc]]), meta)
    return Prediction("origin", np.array([[0.0]]), meta)


# -- two-dimensional ---------------------------------------------------------

def uniform_2d(dom: PlanarDomain, rs: ReactionSolution, order: int, eps: float,
               points, t, include_curvature=True, profile=None, correction=None):
    """Short-time solution at interior points: u0 plus one layer term per
    orthogonal foot (curvature-corrected unless disabled).

    The degenerate circle-of-feet case (disc center) is the radial limit
    of the same sum: two coincident contributions at the common distance."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    u0 = rs.state(t)
    phi = rs.gauge(t, eps, order)
    if order == 2:
        v = v2
    else:
        prof = profile if profile is not None else get_profile4()
        v = prof.evaluate
    vb = None
    if include_curvature:
        vb = correction if correction is not None else get_correction(order)
    footsets = dom.feet_batch(pts)
    out = np.empty(len(pts))
    for i, fs in enumerate(footsets):
        if fs.degenerate_circle:
            kap = float(dom.curvature(np.float64(0.0)))
            term = v(fs.radius / phi) - 1.0
            if vb is not None:
                term += phi * kap * vb(fs.radius / phi)
            out[i] = 1.0 + 2.0 * term
            continue
        s = 1.0
        for f in fs.feet:
            s += v(f.distance / phi) - 1.0
            if vb is not None:
                s += phi * f.curvature * vb(f.distance / phi)
        out[i] = s
    out = u0 * out
    return float(out[0]) if np.asarray(points).ndim == 1 else out


def outer_2d_second(dom: PlanarDomain, rs: ReactionSolution, eps: float,
                    points, t):
    """Outer second-order solution: exponentially small foot corrections."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    u0 = rs.state(t)
    phi = rs.gauge(t, eps, 2)
    c = 8.0 * phi ** 3 / np.sqrt(np.pi)
    footsets = dom.feet_batch(pts)
    out = np.empty(len(pts))
    for i, fs in enumerate(footsets):
        if fs.degenerate_circle:
            d = np.array([fs.radius, fs.radius])
        else:
            d = fs.distances()
        if np.any(d <= 5.0 * phi):
            raise RangeError("outer expansion invalid within 5 layer widths "
                             "of the boundary")
        out[i] = 1.0 - c * np.sum(d ** -3 * np.exp(-d * d / (4.0 * phi * phi)))
    out = u0 * out
    return float(out[0]) if np.asarray(points).ndim == 1 else out


def predict_second_2d(dom: PlanarDomain, skeleton: Skeleton = None) -> Prediction:
    """Second-order prediction: the distance-function argmax (eps-free)."""
    seeds = None
    if skeleton is not None and skeleton.samples:
        order = np.argsort(-skeleton.s_values())[:8]
        seeds = [skeleton.samples[i].point for i in order]
    xc, d = max_distance_point(dom, seeds=seeds)
    return Prediction("distance-argmax", np.array([xc]),
                      dict(order=2, distance=d))


def predict_fourth_2d(dom: PlanarDomain, skeleton: Skeleton,
                      rs: ReactionSolution, eps: float, T_eps: float,
                      eta0: float = None, profile=None, correction=None,
                      match_rel_tol=1e-3, simultaneity_rel_tol=1e-6) -> Prediction:
    """Fourth-order prediction via the omega-set / skeleton dichotomy.

    Before the arrival time the blow-up set is the level curve
    omega(T_eps) with discrete candidates picked by boundary curvature;
    after it, skeleton samples matching s(x) = eta0 phi are ranked by the
    curvature-corrected uniform solution and every sample within the
    simultaneity tolerance of the best is reported. When no sample
    matches the level band (level beyond the branch range, e.g. the
    rectangle between its two thresholds or past the deepest point) the
    ranking runs over the whole skeleton, which yields the rectangle's
    two-point and origin regimes."""
    if eta0 is None:
        eta0 = get_profile4().eta0
    prof = profile if profile is not None else get_profile4()
    corr = correction if correction is not None else get_correction(4)
    T_S = skeleton_arrival_time(skeleton, rs, eps, eta0)
    phi_c = rs.gauge(T_eps, eps, 4)
    level = eta0 * phi_c
    meta = dict(eps=eps, order=4, T_eps=T_eps, T_S=T_S, eta0=eta0,
                phi_c=phi_c, level=level)

    if T_eps < T_S:
        loops = omega_set(dom, level)
        cands = _curvature_candidates(dom, loops)
        if cands:
            kmax = max(c["curvature"] for c in cands)
            sel = [c for c in cands
                   if c["curvature"] >= kmax - 1e-6 * max(1.0, abs(kmax))]
            pts = np.array([c["point"] for c in sel])
        else:
            pts = np.empty((0, 2))
        return Prediction("omega-set", pts, meta, candidates=cands,
                          omega_loops=loops)

    samples = skeleton.samples
    s_vals = skeleton.s_values()
    band = max(match_rel_tol * level, 0.75 * skeleton.resolution)
    idx = np.where(np.abs(s_vals - level) <= band)[0]
    fell_back = len(idx) == 0
    if fell_back:
        idx = np.arange(len(samples))
    pts = np.array([samples[i].point for i in idx])
    vals = uniform_2d(dom, rs, 4, eps, pts, T_eps, include_curvature=True,
                      profile=prof, correction=corr)
    # local maxima among the matched samples (ties on symmetric domains kept)
    keep = []
    vtol = 1e-12 * max(1.0, np.max(np.abs(vals)))
    for a in range(len(idx)):
        near = np.hypot(*(pts - pts[a]).T) <= 2.6 * skeleton.resolution
        if vals[a] >= np.max(vals[near]) - vtol:
            keep.append(a)
    keep = np.array(keep, dtype=int)
    vmax = np.max(vals[keep])
    band_v = simultaneity_rel_tol * max(abs(vmax), 1.0)
    win = keep[vals[keep] >= vmax - band_v]
    order_ix = np.lexsort((pts[win][:, 1], pts[win][:, 0]))
    points = pts[win][order_ix]
    # coincident winners (mid-line junctions sampled from two branches)
    distinct = []
    for p in points:
        if not distinct or np.min(np.hypot(*(np.array(distinct) - p).T)) \
                > 0.25 * skeleton.resolution:
            distinct.append(p)
    points = np.array(distinct)
    cands = [dict(point=pts[a], s_value=float(s_vals[idx[a]]),
                  value=float(vals[a]), branch=samples[idx[a]].branch)
             for a in keep]
    cands.sort(key=lambda c: -c["value"])
    meta["fallback_ranking"] = fell_back
    return Prediction("skeleton-points", points, meta, candidates=cands)


def _curvature_candidates(dom, loops):
    """Loop points where the nearest-boundary curvature is locally maximal."""
    if isinstance(dom, RectangleDomain):
        return []  # flat edges: curvature cannot discriminate
    cands = []
    for loop in loops:
        th, _, _ = dom.nearest_feet_grid(loop)
        kap = dom.curvature(th)
        if np.max(kap) - np.min(kap) < 1e-9:
            continue  # radially symmetric: no discrete selection
        n = len(loop)
        for i in range(n):
            if kap[i] >= kap[(i - 1) % n] and kap[i] >= kap[(i + 1) % n] \
                    and (kap[i] > kap[(i - 1) % n] or kap[i] > kap[(i + 1) % n]):
                cands.append(dict(point=loop[i], curvature=float(kap[i])))
    cands.sort(key=lambda c: -c["curvature"])
    return cands


def critical_eps(rs: ReactionSolution, s_target: float, eta0: float = None,
                 T_eps_of=None, bracket=(1e-6, 1e3)) -> float:
    """Solve s_target = eta0 * phi(T_eps(eps); eps) for eps.

    T_eps_of defaults to the regularized reaction blow-up time
    T0 * (1 - delta), the leading-order stand-in when no measured
    blow-up time is available."""
    if eta0 is None:
        eta0 = get_profile4().eta0
    if s_target == 0.0:
        return 0.0
    if T_eps_of is None:
        T_end = rs.T0 * (1.0 - TABLE_DELTA)
        T_eps_of = lambda e: T_end

    def g(eps):
        return eta0 * rs.gauge(T_eps_of(eps), eps, 4) - s_target

    lo, hi = bracket
    if g(lo) > 0 or g(hi) < 0:
        raise RangeError("critical eps not bracketed; widen the bracket")
    return float(brentq(g, lo, hi, xtol=1e-14, rtol=1e-13))
