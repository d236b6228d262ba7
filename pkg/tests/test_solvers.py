import numpy as np
import pytest

from blowuplab.reaction import Nonlinearity, ReactionSolution
from blowuplab.solvers import (SolverConfig, extract_singularities, solve,
                               solve_1d, solve_cube3d, solve_radial_disc,
                               solve_rect2d, track_peaks)
from blowuplab.solvers.common import BandedCN
from blowuplab.solvers.one_dim import (fourth_derivative_clamped,
                                       second_derivative_dirichlet, strip_grid)
from blowuplab.solvers.radial import radial_biharmonic, radial_grid

EXP = Nonlinearity.exponential()
POW2 = Nonlinearity.power(2)


# -- singularity extraction -----------------------------------------------------

def test_extract_single_peak():
    x = np.linspace(-1, 1, 201)
    u = np.exp(-((x - 0.2) / 0.1) ** 2)
    out = extract_singularities(u, (x,))
    assert len(out) == 1
    assert out[0][0][0] == pytest.approx(0.2, abs=1e-3)


def test_extract_symmetric_double_peak():
    x = np.linspace(-1, 1, 401)
    u = np.exp(-((x - 0.5) / 0.08) ** 2) + np.exp(-((x + 0.5) / 0.08) ** 2)
    out = extract_singularities(u, (x,))
    assert len(out) == 2
    assert out[0][0][0] == pytest.approx(-0.5, abs=1e-3)
    assert out[1][0][0] == pytest.approx(0.5, abs=1e-3)


def test_extract_square_fourfold_matches_brute_force():
    x = np.linspace(-1, 1, 151)
    X, Y = np.meshgrid(x, x, indexing="ij")
    u = np.zeros_like(X)
    for sx in (-1, 1):
        for sy in (-1, 1):
            u += np.exp(-(((X - 0.4 * sx) ** 2 + (Y - 0.4 * sy) ** 2) / 0.02))
    out = extract_singularities(u, (x, x))
    assert len(out) == 4
    # brute-force oracle: strict local maxima above half max
    brute = []
    for i in range(1, len(x) - 1):
        for j in range(1, len(x) - 1):
            nb = u[i - 1:i + 2, j - 1:j + 2].copy()
            c = nb[1, 1]
            nb[1, 1] = -np.inf
            if c > nb.max() and c >= 0.5 * u.max():
                brute.append((x[i], x[j]))
    assert len(brute) == 4
    got = sorted((round(c[0], 2), round(c[1], 2)) for c, _ in out)
    assert got == sorted((round(a, 2), round(b, 2)) for a, b in brute)


def test_extract_threshold_and_separation():
    x = np.linspace(-1, 1, 201)
    u = np.exp(-((x - 0.3) / 0.05) ** 2) + 0.3 * np.exp(-((x + 0.3) / 0.05) ** 2)
    assert len(extract_singularities(u, (x,), threshold_fraction=0.5)) == 1
    assert len(extract_singularities(u, (x,), threshold_fraction=0.2)) == 2
    # peaks two cells apart merge under separation=4
    v = np.zeros_like(x)
    v[100] = 1.0
    v[103] = 0.9
    assert len(extract_singularities(v, (x,), separation=4)) == 1


def test_track_peaks_moving_gaussian():
    x = np.linspace(-1, 1, 401)

    class Snap:
        def __init__(self, t, f):
            self.t, self.field, self.sup = t, f, f.max()

    snaps = [Snap(t, np.exp(-((x - (0.8 - 0.5 * t)) / 0.07) ** 2))
             for t in np.linspace(0, 1, 11)]
    tracks = track_peaks(snaps, (x,))
    assert len(tracks) == 1
    pos = np.array([p[0] for p in tracks[0]["points"]])
    assert len(pos) == 11
    assert np.allclose(pos, 0.8 - 0.5 * np.linspace(0, 1, 11), atol=1e-3)


# -- operator construction -------------------------------------------------------

def test_strip_grid_symmetric_and_graded():
    x = strip_grid(2001, grading=2.0)
    assert np.array_equal(x, -x[::-1])
    h_edge = x[1] - x[0]
    h_mid = x[1001] - x[1000]
    assert h_edge < 0.2 * h_mid
    assert x[0] == -1.0 and x[-1] == 1.0


def test_d4_clamped_solution_convergence():
    # B u = 24 has the clamped solution u = (1 - x^2)^2; the reflection
    # ghost has an O(h^3) defect at one row per wall, absorbed by the
    # discrete Green function into >= 2nd-order solution convergence
    from scipy.sparse.linalg import spsolve
    errs = []
    for n in (201, 401):
        x = strip_grid(n, grading=0.0)
        B = fourth_derivative_clamped(x).tocsc()
        u = spsolve(B, np.full(n - 2, 24.0))
        errs.append(np.max(np.abs(u - (1 - x[1:-1] ** 2) ** 2)))
    assert errs[1] <= errs[0] / 3.5
    assert errs[1] <= 6e-5


def test_d2_dirichlet_exact_for_quadratic():
    x = strip_grid(301, grading=1.2)
    B = second_derivative_dirichlet(x)
    u = 1 - x[1:-1] ** 2
    assert np.max(np.abs(B @ u + 2.0)) <= 1e-8


def test_radial_biharmonic_manufactured():
    # u = (1 - r^2)^2: clamped at r=1, even at 0, Delta^2 u = 64
    nr = 500
    r = radial_grid(nr)
    B = radial_biharmonic(nr)
    res = B @ (1 - r ** 2) ** 2 - 64.0
    # interior rows are exact (quartic); the wall closure is cubic-exact
    # so the last two rows carry an O(1) defect on an O(h) region
    assert np.max(np.abs(res[:nr - 2])) <= 1e-2
    assert np.max(np.abs(res[nr - 2:])) <= 20.0


def test_radial_biharmonic_cubic_wall_exactness():
    import sympy as sym
    nr = 400
    r = radial_grid(nr)
    B = radial_biharmonic(nr)
    rr = sym.symbols("r", positive=True)
    expr = (1 - rr) ** 2 * (0.7 - 0.3 * rr)
    L = (sym.diff(expr, rr, 4) + 2 / rr * sym.diff(expr, rr, 3)
         - sym.diff(expr, rr, 2) / rr ** 2 + sym.diff(expr, rr) / rr ** 3)
    u = np.array([float(expr.subs(rr, ri)) for ri in r])
    want = np.array([float(L.subs(rr, ri)) for ri in r])
    res = np.abs(B @ u - want)
    assert np.max(res[nr - 3:]) <= 1e-7  # wall rows exact for cubics


# -- stepper invariants -----------------------------------------------------------

def test_reaction_limit_zero_eps():
    cfg = SolverConfig(order=4, nonlinearity=EXP, eps=0.0, geometry="strip",
                       nx=101, threshold=50.0, snapshot_times=(0.3, 0.7))
    rep = solve_1d(cfg)
    rs = ReactionSolution(EXP)
    for snap in rep.snapshots:
        assert np.max(np.abs(snap.field - rs.state(snap.t))) <= 1e-6


def test_supersolution_bound_second_order():
    cfg = SolverConfig(order=2, nonlinearity=POW2, eps=0.1, geometry="strip",
                       nx=801, grading=2.0, threshold=50.0, snapshot_stride=40)
    rep = solve_1d(cfg)  # the in-loop assertion would raise on violation
    rs = ReactionSolution(POW2)
    for snap in rep.snapshots:
        if snap.t < rs.T0 * 0.999:
            assert snap.sup <= rs.state(snap.t) * (1 + 1e-9) + 1e-12


def test_blowup_time_ordering_second_order():
    cfg = SolverConfig(order=2, nonlinearity=POW2, eps=0.1, geometry="strip",
                       nx=801, grading=2.0, threshold=100.0)
    rep = solve_1d(cfg)
    assert rep.blowup_detected
    assert rep.T_eps >= 1.0 - 1e-3
    assert rep.multiplicity == 1
    assert abs(rep.singularities[0][0][0]) <= 1e-3


def test_fourth_order_exhibits_early_blowup():
    cfg = SolverConfig(order=4, nonlinearity=EXP, eps=0.1, geometry="strip",
                       nx=1001, grading=2.0, threshold=100.0)
    rep = solve_1d(cfg)
    assert rep.T_eps < 1.0


def test_grid_convergence_T_eps():
    reps = []
    for nx in (1001, 2001):
        cfg = SolverConfig(order=4, nonlinearity=EXP, eps=0.1, geometry="strip",
                           nx=nx, grading=2.0, threshold=1e3)
        reps.append(solve_1d(cfg))
    T1, T2 = reps[0].T_eps, reps[1].T_eps
    assert abs(T2 - T1) / T2 <= 0.005


def test_per_step_symmetry_injection():
    # a symmetric state stays symmetric to 1e-10 of its scale through one
    # full split step (reaction, theta-solve, reaction)
    x = strip_grid(801, grading=2.0)
    from blowuplab.solvers.one_dim import fourth_derivative_clamped
    import scipy.sparse as sp
    B = fourth_derivative_clamped(x) * 0.1 ** 4
    B = 0.5 * (B + B[::-1, ::-1].tocsr())
    adapter = BandedCN(B, 2, 0.5, symmetrize=True)
    rs = ReactionSolution(EXP)
    xi = x[1:-1]
    u = 0.5 * np.exp(-4 * xi ** 2)
    u = 0.5 * (u + u[::-1])
    dt = 1e-3
    u1 = rs.flow(u, dt / 2)
    u2 = adapter.apply(dt, u1)
    u3 = rs.flow(u2, dt / 2)
    assert np.max(np.abs(u3 - u3[::-1])) <= 1e-10 * np.max(np.abs(u3))


def test_snapshot_symmetry_accumulated():
    cfg = SolverConfig(order=4, nonlinearity=EXP, eps=1 / 7, geometry="strip",
                       nx=1201, grading=2.0, threshold=10.0, snapshot_stride=50)
    rep = solve_1d(cfg)
    for snap in rep.snapshots:
        scale = max(np.max(np.abs(snap.field)), 1e-300)
        assert np.max(np.abs(snap.field - snap.field[::-1])) <= 1e-6 * scale
    assert rep.multiplicity == 2
    xs = sorted(s[0][0] for s in rep.singularities)
    assert xs[0] == pytest.approx(-xs[1], abs=1e-9)


def test_peak_trajectory_moves_inward(profile4):
    rs = ReactionSolution(EXP)
    cfg = SolverConfig(order=4, nonlinearity=EXP, eps=0.1, geometry="strip",
                       nx=1201, grading=2.0, threshold=1e3,
                       snapshot_times=tuple(np.linspace(0.05, 0.85, 9)))
    rep = solve_1d(cfg)
    ts = np.array([t for t, _ in rep.peak_trajectory])
    xs = np.abs([loc[0] for _, loc in rep.peak_trajectory])
    assert len(ts) >= 8
    assert np.all(np.diff(xs) < 0)  # monotone inward from near the wall
    # early trajectory tracks 1 - eta0*phi; later the layer prediction
    # overestimates the inward speed
    pred = 1.0 - profile4.eta0 * np.array([rs.gauge(t, 0.1, 4) for t in ts])
    early = ts <= 0.2
    assert np.max(np.abs(xs[early] - pred[early])) <= 0.01
    assert xs[-1] > pred[-1]


def test_peak_at_origin_second_order():
    # the interior plateau is flat to the last bit, so the verifiable
    # statement is that the origin attains the maximum at every snapshot
    cfg = SolverConfig(order=2, nonlinearity=POW2, eps=0.1, geometry="strip",
                       nx=801, grading=2.0, threshold=50.0,
                       snapshot_times=tuple(np.linspace(0.2, 0.9, 5)))
    rep = solve_1d(cfg)
    x = rep.grid[0]
    mid = np.argmin(np.abs(x))
    assert x[mid] == 0.0
    for snap in rep.snapshots:
        assert snap.field.max() - snap.field[mid] <= 1e-13 * snap.field.max()


def test_no_blowup_detected_within_budget():
    cfg = SolverConfig(order=4, nonlinearity=EXP, eps=5.0, geometry="strip",
                       nx=101, threshold=1e3, max_steps=1500)
    rep = solve_1d(cfg)
    assert not rep.blowup_detected
    assert rep.stop_reason == "no-blowup-detected"
    assert np.isnan(rep.T_eps)


def test_t_end_stop():
    cfg = SolverConfig(order=2, nonlinearity=POW2, eps=0.1, geometry="strip",
                       nx=401, grading=2.0, t_end=0.25, threshold=1e3,
                       snapshot_times=(0.25,))
    rep = solve_1d(cfg)
    assert rep.stop_reason == "t-end"
    assert rep.t_stop == pytest.approx(0.25, abs=1e-12)
    assert rep.snapshots[0].t == 0.25


def test_noise_seed_determinism():
    cfg = SolverConfig(order=4, nonlinearity=EXP, eps=0.2, geometry="strip",
                       nx=301, threshold=5.0, noise_amplitude=1e-3, seed=9)
    a = solve_1d(cfg)
    b = solve_1d(cfg)
    assert np.array_equal(a.final_field, b.final_field)
    assert a.T_eps == b.T_eps
    c = solve_1d(cfg.replace(seed=10))
    assert not np.array_equal(a.final_field, c.final_field)


# -- geometry dispatch ------------------------------------------------------------

def test_solver_dispatch():
    cfg = SolverConfig(order=4, nonlinearity=EXP, eps=0.2, geometry="strip",
                       nx=301, threshold=5.0)
    rep = solve(cfg)
    assert rep.blowup_detected
    with pytest.raises(ValueError):
        solve(cfg.replace(geometry="torus"))
    with pytest.raises(ValueError):
        solve_rect2d(cfg)


def test_radial_disc_large_eps_origin():
    cfg = SolverConfig(order=4, nonlinearity=POW2, eps=0.35,
                       geometry="radial-disc", nx=400, threshold=1e3)
    rep = solve_radial_disc(cfg)
    assert rep.blowup_detected
    assert rep.ring_radius == 0.0
    assert rep.multiplicity == 1


def test_radial_disc_ring():
    cfg = SolverConfig(order=4, nonlinearity=POW2, eps=0.1,
                       geometry="radial-disc", nx=500, threshold=100.0)
    rep = solve_radial_disc(cfg)
    assert 0.3 <= rep.ring_radius <= 0.8
    assert rep.T_eps == pytest.approx(0.9817, abs=0.002)  # independently
    # cross-checked against an off-the-shelf stiff integrator on the same
    # semidiscrete system


def test_radial_disc_second_order():
    cfg = SolverConfig(order=2, nonlinearity=POW2, eps=0.1,
                       geometry="radial-disc", nx=400, threshold=100.0)
    rep = solve_radial_disc(cfg)
    assert rep.T_eps >= 1.0 - 1e-3
    assert rep.ring_radius == 0.0


def test_rect2d_small_square_multiplicities():
    for eps, want in ((0.1, 4), (0.2, 1)):
        cfg = SolverConfig(order=4, nonlinearity=EXP, eps=eps, geometry="rect",
                           nx=81, ny=81, threshold=10.0)
        rep = solve_rect2d(cfg)
        assert rep.multiplicity == want, (eps, rep.singularities)
        if want == 4:
            pts = rep.singularity_points()
            assert np.allclose(np.abs(pts[:, 0]), np.abs(pts[:, 1]), atol=0.03)


def test_rect2d_memory_guard():
    cfg = SolverConfig(order=4, nonlinearity=EXP, eps=0.1, geometry="rect",
                       nx=4001, ny=4001, threshold=10.0)
    with pytest.raises(ValueError, match="max_unknowns"):
        solve_rect2d(cfg)


def test_cube3d_smoke():
    cfg = SolverConfig(order=4, nonlinearity=POW2, eps=0.25, geometry="cube",
                       nx=17, threshold=5.0)
    rep = solve_cube3d(cfg)
    assert rep.blowup_detected
    assert rep.multiplicity >= 1
    U = rep.final_field
    assert np.max(np.abs(U - U[::-1, :, :])) <= 1e-6 * np.max(np.abs(U))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(order=3, nonlinearity=EXP, eps=0.1)
    with pytest.raises(ValueError):
        SolverConfig(order=2, nonlinearity=EXP, eps=-0.1)
    with pytest.raises(ValueError):
        SolverConfig(order=2, nonlinearity=EXP, eps=0.1, threshold=0.5)
    with pytest.raises(ValueError):
        SolverConfig(order=2, nonlinearity=EXP, eps=0.1, dt_init=1e-3,
                     dt_min=1e-2)
