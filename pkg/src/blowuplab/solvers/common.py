"""Shared machinery for the PDE solvers.

Time integration is Strang splitting: an exact pointwise reaction flow
(closed form or dense-output based, see ReactionSolution.flow) around a
theta-scheme solve of the constant linear diffusion operator. The
reaction map is exact for any step size, so near blow-up, where the
dynamics are reaction-dominated, the stepper commits no time error and
the blow-up time estimate t_stop + tail(sup) converges; the step
controller only has to resolve the coupled layer phase. Entries that
blow through the reaction singularity inside a step come back +inf and
stop the run with the pre-step tail estimate.

Step sizes adapt by proportional control on the per-step growth of the
sup norm (2% target near blow-up). Direct sparse factorizations are
cached on power-of-two step-size buckets; banded 1D operators are cheap
enough to rebuild every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import splu

from ..errors import ConvergenceError
from ..reaction import Nonlinearity, ReactionSolution, TABLE_DELTA


@dataclass
class SolverConfig:
    """Configuration shared by all geometries.

    nx/ny/nz count grid nodes including boundaries. grading > 0 applies
    tanh clustering toward the strip endpoints (1D only). threshold is
    the sup-norm blow-up cutoff M; t_end, when set, stops the run at a
    fixed time instead. eps = 0 disables diffusion entirely (reaction
    limit, used by the solver self-checks)."""

    order: int
    nonlinearity: Nonlinearity
    eps: float
    geometry: str = "strip"
    nx: int = 2001
    ny: int = 0
    nz: int = 0
    half_width_x: float = 1.0
    half_width_y: float = 1.0
    grading: float = 0.0
    dt_init: float = 1e-6
    dt_min: float = 0.0
    dt_max: float = 5e-3
    safety: float = 0.9
    growth_target: float = 0.02
    threshold: float = 1e3
    max_steps: int = 500_000
    t_end: Optional[float] = None
    snapshot_times: tuple = ()
    snapshot_stride: int = 0
    noise_amplitude: float = 0.0
    seed: int = 0
    theta: float = 0.5
    check_supersolution: bool = True
    max_unknowns: int = 2_000_000

    def __post_init__(self):
        if self.order not in (2, 4):
            raise ValueError(f"order must be 2 or 4, got {self.order}")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.threshold <= 1.0:
            raise ValueError("threshold M must exceed 1")
        if not (0 < self.dt_init <= self.dt_max):
            raise ValueError("need 0 < dt_init <= dt_max")
        if self.dt_min >= self.dt_init:
            raise ValueError("dt_min must be below dt_init")
        if self.nx < 5:
            raise ValueError("nx too small")

    def replace(self, **kw):
        return replace(self, **kw)


@dataclass
class Snapshot:
    t: float
    field: np.ndarray
    sup: float


@dataclass
class BlowupReport:
    """Solver output: blow-up time estimate, singularity set, trajectories."""

    T_eps: float
    t_stop: float
    sup_stop: float
    stop_reason: str
    singularities: list          # [(coords tuple, value)]
    multiplicity: int
    final_field: np.ndarray
    grid: tuple                  # per-axis coordinate arrays
    peak_trajectory: list        # [(t, coords tuple)] for the tracked main peak
    snapshots: list
    diagnostics: dict
    config: SolverConfig
    ring_radius: Optional[float] = None
    blowup_detected: bool = False

    def singularity_points(self):
        return np.array([list(c) for c, _ in self.singularities])


class BandedCN:
    """theta-scheme solve for banded operators, rebuilt per step (1D cost).

    The banded LU sweep is directional; on reflection-symmetric operators
    symmetrize=True averages the solve with its mirror image, which keeps
    symmetric data symmetric to roundoff instead of accumulating a biased
    drift that blow-up amplification would magnify."""

    def __init__(self, B: sp.spmatrix, bandwidth: int, theta: float,
                 symmetrize=False):
        self.B = B.tocsr()
        self.bw = bandwidth
        self.theta = theta
        self.symmetrize = symmetrize
        self.n = B.shape[0]
        self._key = None

    def quantize(self, dt):
        return dt

    def apply(self, dt, u):
        if self._key != dt:
            A1 = (sp.identity(self.n, format="csr") + self.theta * dt * self.B)
            self._ab = _to_banded(A1, self.bw)
            self._A2 = (sp.identity(self.n, format="csr")
                        - (1.0 - self.theta) * dt * self.B).tocsr()
            self._key = dt
        b = self._A2 @ u
        x = solve_banded((self.bw, self.bw), self._ab, b)
        if not self.symmetrize:
            return x
        y = solve_banded((self.bw, self.bw), self._ab, b[::-1])
        return 0.5 * (x + y[::-1])


class SparseLUCN:
    """theta-scheme with LU factors cached on power-of-two dt buckets."""

    def __init__(self, B: sp.spmatrix, theta: float, cache_size=6):
        self.B = B.tocsc()
        self.theta = theta
        self.n = B.shape[0]
        self.I = sp.identity(self.n, format="csc")
        self.cache = {}
        self.cache_size = cache_size
        self.factorizations = 0

    def quantize(self, dt):
        return float(2.0 ** np.floor(np.log2(dt)))

    def apply(self, dt, u):
        key = dt
        if key not in self.cache:
            lu = splu((self.I + self.theta * dt * self.B).tocsc())
            A2 = (self.I - (1.0 - self.theta) * dt * self.B).tocsr()
            if len(self.cache) >= self.cache_size:
                self.cache.pop(next(iter(self.cache)))
            self.cache[key] = (lu, A2)
            self.factorizations += 1
        lu, A2 = self.cache[key]
        return lu.solve(A2 @ u)


class ConjugateGradientCN:
    """Matrix-free-ish theta-scheme via CG; for the SPD 3D operator."""

    def __init__(self, B: sp.spmatrix, theta: float, rtol=1e-11):
        self.B = B.tocsr()
        self.theta = theta
        self.rtol = rtol
        self.n = B.shape[0]

    def quantize(self, dt):
        return float(2.0 ** np.floor(np.log2(dt)))

    def apply(self, dt, u):
        from scipy.sparse.linalg import cg
        A1 = sp.identity(self.n, format="csr") + self.theta * dt * self.B
        rhs = u - (1.0 - self.theta) * dt * (self.B @ u)
        x, info = cg(A1, rhs, x0=u, rtol=self.rtol, atol=0.0, maxiter=2000)
        if info != 0:
            raise ConvergenceError(f"CG did not converge (info={info})")
        return x


def _to_banded(A: sp.spmatrix, bw: int):
    n = A.shape[0]
    ab = np.zeros((2 * bw + 1, n))
    Ac = A.tocoo()
    ab[bw + Ac.row - Ac.col, Ac.col] = Ac.data
    return ab


def initial_field(cfg: SolverConfig, n_unknowns: int) -> np.ndarray:
    """Zero data plus optional seeded uniform noise."""
    u = np.zeros(n_unknowns)
    if cfg.noise_amplitude > 0.0:
        rng = np.random.default_rng(cfg.seed)
        u += cfg.noise_amplitude * rng.uniform(-1.0, 1.0, size=n_unknowns)
    return u


def run_stepper(cfg: SolverConfig, B: Optional[sp.spmatrix], adapter,
                rs: ReactionSolution, u: np.ndarray):
    """March the split scheme until threshold/t_end/stall.

    Returns a dict with the raw run record; geometry-specific wrappers
    turn it into a BlowupReport."""
    t = 0.0
    dt = cfg.dt_init
    sup = float(u.max()) if len(u) else 0.0
    steps = 0
    snapshots = []
    snap_q = sorted(set(cfg.snapshot_times))
    sup_hist = [(0.0, sup)]
    dt_hist = []
    stop = None
    u_prev, t_prev, sup_prev = u.copy(), 0.0, sup
    check_super = cfg.check_supersolution and cfg.order == 2
    t_table_end = rs.T0 * (1.0 - TABLE_DELTA)

    while True:
        if cfg.t_end is not None and t >= cfg.t_end - 1e-15:
            stop = "t-end"
            break
        if steps >= cfg.max_steps:
            stop = "no-blowup-detected"
            break
        dt_eff = min(dt, cfg.dt_max)
        # exact hits for snapshot times and t_end
        target = None
        if snap_q:
            target = snap_q[0]
        if cfg.t_end is not None and (target is None or cfg.t_end < target):
            target = cfg.t_end
        exact_hit = target is not None and t + dt_eff >= target - 1e-15
        if exact_hit:
            dtb = target - t
        else:
            dtb = adapter.quantize(dt_eff) if adapter is not None else dt_eff
        if dtb <= 0.0 or t + dtb == t:
            stop = "dt-underflow"
            break
        u_prev, t_prev, sup_prev = u, t, sup
        u1 = rs.flow(u, 0.5 * dtb)
        if np.all(np.isfinite(u1)) and adapter is not None and cfg.eps > 0:
            u2 = adapter.apply(dtb, u1)
        else:
            u2 = u1
        u3 = rs.flow(u2, 0.5 * dtb) if np.all(np.isfinite(u2)) else u2
        t = t + dtb
        steps += 1
        if not np.all(np.isfinite(u3)):
            sup = np.inf
            u = u3
            stop = "reaction-singularity"
            break
        u = u3
        new_sup = float(u.max())
        growth = (new_sup - sup) / max(sup, 0.05)
        sup = new_sup
        if check_super and t < t_table_end:
            bound = rs.state(t)
            if sup > bound * (1.0 + 1e-9) + 1e-12:
                raise ConvergenceError(
                    f"supersolution bound violated: sup={sup!r} > u0({t!r})={bound!r}")
        sup_hist.append((t, sup))
        dt_hist.append(dtb)
        if exact_hit and snap_q and abs(target - snap_q[0]) < 1e-14:
            snapshots.append(Snapshot(t=snap_q.pop(0), field=u.copy(), sup=sup))
        elif cfg.snapshot_stride and steps % cfg.snapshot_stride == 0:
            snapshots.append(Snapshot(t=t, field=u.copy(), sup=sup))
        if sup >= cfg.threshold:
            stop = "threshold"
            break
        if growth > 0:
            dt = dtb * min(2.0, max(0.4, cfg.safety * cfg.growth_target / growth))
        else:
            dt = dtb * 2.0
        dt = min(dt, cfg.dt_max)
        if cfg.dt_min and dt < cfg.dt_min:
            stop = "no-blowup-detected"
            break

    if stop == "reaction-singularity":
        # singular inside the last step: the pre-step state carries the tail
        T_est = t_prev + rs.tail_time(sup_prev)
        u_final, sup_final = u_prev, sup_prev
    elif stop in ("threshold", "dt-underflow"):
        T_est = t + rs.tail_time(sup)
        u_final, sup_final = u, sup
    else:
        T_est = np.nan
        u_final, sup_final = u, sup
    detected = stop in ("threshold", "reaction-singularity")
    if stop == "dt-underflow":
        # representable time exhausted: past the point of no return iff the
        # remaining reaction tail is negligible
        detected = rs.tail_time(sup_final) <= 1e-6 * max(1.0, t)
    return dict(T_eps=float(T_est), t_stop=t, sup_stop=sup_final,
                stop_reason=stop, u=u_final, steps=steps, snapshots=snapshots,
                sup_history=sup_hist, dt_history=dt_hist,
                blowup_detected=detected)


# -- singularity extraction -----------------------------------------------------

def extract_singularities(field: np.ndarray, coords, threshold_fraction=0.5,
                          separation=4):
    """Strict local maxima above a fraction of the sup, merged by closeness.

    coords is one 1D coordinate array per field axis. Maxima closer than
    `separation` grid cells keep only the larger. Locations are refined
    per axis by the vertex of the parabola through the three neighboring
    nodes (valid on non-uniform grids too)."""
    from scipy.ndimage import maximum_filter

    field = np.asarray(field)
    if field.ndim == 1:
        coords = (coords,) if isinstance(coords, np.ndarray) else tuple(coords)
    vmax = float(np.max(field))
    footprint = np.ones((3,) * field.ndim, dtype=bool)
    footprint[(1,) * field.ndim] = False
    neigh_max = maximum_filter(field, footprint=footprint, mode="constant",
                               cval=-np.inf)
    mask = (field > neigh_max) & (field >= threshold_fraction * vmax)
    idxs = np.argwhere(mask)
    if len(idxs) == 0:
        return []
    vals = field[tuple(idxs.T)]
    order = np.argsort(-vals)
    kept = []
    for k in order:
        ij = idxs[k]
        if any(np.linalg.norm(ij - other) < separation for other, _ in kept):
            continue
        kept.append((ij, vals[k]))
    out = []
    for ij, val in kept:
        loc = []
        for ax, i in enumerate(ij):
            x = coords[ax]
            if 0 < i < len(x) - 1:
                sl = tuple([*ij[:ax], slice(i - 1, i + 2), *ij[ax + 1:]])
                f3 = field[sl]
                loc.append(_parabola_vertex(x[i - 1:i + 2], f3))
            else:
                loc.append(float(x[i]))
        out.append((tuple(loc), float(val)))
    out.sort(key=lambda p: p[0])
    return out


def _parabola_vertex(x3, f3):
    """Vertex abscissa of the parabola through three points; node if flat."""
    x0, x1, x2 = (float(v) for v in x3)
    f0, f1, f2 = (float(v) for v in f3)
    denom = ((x0 - x1) * (x0 - x2) * (x1 - x2))
    if denom == 0.0:
        return x1
    a = (x2 * (f1 - f0) + x1 * (f0 - f2) + x0 * (f2 - f1)) / denom
    b = (x2 * x2 * (f0 - f1) + x1 * x1 * (f2 - f0) + x0 * x0 * (f1 - f2)) / denom
    if a == 0.0:
        return x1
    xv = -b / (2.0 * a)
    return float(np.clip(xv, min(x0, x2), max(x0, x2)))


def track_peaks(snapshots, coords, threshold_fraction=0.6, separation=4,
                max_jump=None):
    """Link per-snapshot refined peak locations into tracks over time.

    Returns a list of tracks, each dict(times=[...], points=[...]).
    Linking is nearest-association; unmatched peaks start new tracks."""
    tracks = []
    scale = max(float(c[-1] - c[0]) for c in coords)
    if max_jump is None:
        max_jump = 0.25 * scale
    for snap in snapshots:
        peaks = extract_singularities(snap.field, coords,
                                      threshold_fraction=threshold_fraction,
                                      separation=separation)
        used = set()
        for loc, val in peaks:
            best, best_d = None, max_jump
            for k, tr in enumerate(tracks):
                if k in used:
                    continue
                d = np.linalg.norm(np.array(tr["points"][-1]) - np.array(loc))
                if d < best_d:
                    best, best_d = k, d
            if best is None:
                tracks.append(dict(times=[snap.t], points=[loc]))
                used.add(len(tracks) - 1)
            else:
                tracks[best]["times"].append(snap.t)
                tracks[best]["points"].append(loc)
                used.add(best)
    return tracks
