import numpy as np
import pytest

from blowuplab.errors import RangeError
from blowuplab.geometry import (RectangleDomain, SmoothPolarDomain,
                                compute_skeleton, ellipse_domain,
                                max_distance_point, omega_set, potato_domain,
                                skeleton_arrival_time)
from blowuplab.profiles import get_profile4
from blowuplab.reaction import Nonlinearity, ReactionSolution
from oracles import (brute_force_distance, hausdorff, rectangle_skeleton_points,
                     square_skeleton_points)

DISC = SmoothPolarDomain(1.0)
POTATO = potato_domain()
SQUARE = RectangleDomain.centered(1.0, 1.0)


# -- construction and boundary geometry ----------------------------------------

def test_positive_radius_required():
    with pytest.raises(ValueError):
        SmoothPolarDomain(1.0, [1.2, 0.0, 0.0], [0.0, 0.0, 0.0])


def test_roughness_warning():
    with pytest.warns(UserWarning, match="rough"):
        SmoothPolarDomain(1.0, [0.0] * 12, [0.0] * 11 + [0.45],
                          roughness_bound=10.0)


def test_disc_curvature():
    for th in (0.0, 0.7, 3.0):
        assert DISC.curvature(np.float64(th)) == pytest.approx(1.0, rel=1e-12)


def test_potato_boundary_point_theta0():
    # r = 1 + 0.3 (cos t - sin 3t): r(0) = 1.3, r'(0) = -0.9, r''(0) = -0.3
    assert POTATO.radius(np.float64(0.0)) == pytest.approx(1.3, rel=1e-14)
    assert POTATO.radius_d1(np.float64(0.0)) == pytest.approx(-0.9, rel=1e-14)
    assert POTATO.radius_d2(np.float64(0.0)) == pytest.approx(-0.3, rel=1e-14)
    r, r1, r2 = 1.3, -0.9, -0.3
    kappa = (r * r + 2 * r1 * r1 - r * r2) / (r * r + r1 * r1) ** 1.5
    bp = POTATO.boundary_point(0.0)
    assert bp.curvature == pytest.approx(kappa, rel=1e-12)


def test_potato_curvature_matches_finite_differences():
    th = np.linspace(0.1, 6.0, 23)
    h = 1e-5
    r1_fd = (POTATO.radius(th + h) - POTATO.radius(th - h)) / (2 * h)
    r2_fd = (POTATO.radius(th + h) - 2 * POTATO.radius(th)
             + POTATO.radius(th - h)) / h ** 2
    assert np.max(np.abs(POTATO.radius_d1(th) - r1_fd)) <= 1e-6
    assert np.max(np.abs(POTATO.radius_d2(th) - r2_fd)) <= 1e-4


def test_rectangle_boundary_point_and_corner():
    R = RectangleDomain(-1, 1, 0, 1)
    bp = R.boundary_point(0.5)
    assert bp.smooth and bp.curvature == 0.0
    assert bp.point == (-0.5, 0.0)
    corner = R.boundary_point(2.0)  # arc length W = 2 lands on (1, 0)
    assert not corner.smooth
    assert corner.curvature is None


# -- orthogonal feet -----------------------------------------------------------

def test_disc_center_degenerate_circle_of_feet():
    fs = DISC.orthogonal_feet((0.0, 0.0))
    assert fs.degenerate_circle
    assert fs.radius == pytest.approx(1.0, abs=1e-12)


def test_rectangle_feet_example():
    R = RectangleDomain(-1, 1, 0, 1)
    fs = R.orthogonal_feet((0.0, 0.3))
    got = sorted((tuple(np.round(f.point, 12)), round(f.distance, 12))
                 for f in fs.feet)
    assert got == [((-1.0, 0.3), 1.0), ((0.0, 0.0), 0.3),
                   ((0.0, 1.0), 0.7), ((1.0, 0.3), 1.0)]


def test_square_diagonal_point_nearest_feet():
    fs = SQUARE.orthogonal_feet((0.5, 0.5))
    near = [f for f in fs.feet if f.distance == pytest.approx(0.5, abs=1e-12)]
    assert len(near) == 2
    assert sorted(tuple(np.round(f.point, 12)) for f in near) == \
        [(0.5, 1.0), (1.0, 0.5)]


def test_foot_orthogonality_residual():
    rng = np.random.default_rng(7)
    for dom in (DISC, POTATO):
        tol = 1e-9 * dom.diameter
        n = 0
        while n < 30:
            p = rng.uniform(-1.3, 1.3, size=2)
            if not dom.contains(p) or dom.signed_distance(p) < 0.05:
                continue
            n += 1
            for f in dom.orthogonal_feet(p).feet:
                tau = dom.tangent_at(np.float64(f.param))
                resid = abs(np.dot(p - np.asarray(f.point), tau))
                assert resid <= tol


def test_feet_segments_stay_inside():
    rng = np.random.default_rng(11)
    n = 0
    while n < 20:
        p = rng.uniform(-1.3, 1.3, size=2)
        if not POTATO.contains(p) or POTATO.signed_distance(p) < 0.05:
            continue
        n += 1
        for f in POTATO.orthogonal_feet(p).feet:
            s = np.linspace(0, 1, 64)[:, None]
            seg = p[None, :] + s * (np.asarray(f.point) - p)[None, :]
            assert np.all(POTATO.signed_distance(seg) >= -1e-7)


# -- distance ------------------------------------------------------------------

def test_distance_examples():
    assert DISC.signed_distance(np.array([0.3, 0.0])) == pytest.approx(0.7, abs=1e-9)
    assert SQUARE.signed_distance(np.array([0.0, 0.0])) == pytest.approx(1.0)


@pytest.mark.parametrize("dom", [DISC, POTATO, SQUARE,
                                 RectangleDomain.centered(1.0, 0.5)])
def test_distance_against_brute_force(dom):
    rng = np.random.default_rng(3)
    pts = []
    while len(pts) < 100:
        p = rng.uniform(-1.4, 1.4, size=2)
        if dom.contains(p):
            pts.append(p)
    pts = np.array(pts)
    mine = dom.signed_distance(pts)
    brute = brute_force_distance(dom, pts)
    assert np.max(np.abs(mine - brute)) <= 1e-6


def test_potato_max_distance_point():
    xc, d = max_distance_point(POTATO)
    assert np.hypot(xc[0] - 0.3070, xc[1] + 0.0345) <= 2e-3
    assert d > 0.7


# -- skeleton -------------------------------------------------------------------

def test_disc_skeleton_single_point():
    sk = compute_skeleton(DISC, 0.05)
    pts = sk.points()
    assert np.max(np.hypot(pts[:, 0], pts[:, 1])) <= 0.05
    assert sk.s_min == pytest.approx(1.0, abs=0.01)
    assert not sk.touches_boundary


def test_square_skeleton_hausdorff():
    res = 0.02
    sk = compute_skeleton(SQUARE, res)
    assert sk.touches_boundary and sk.s_min == 0.0
    assert hausdorff(sk.points(), square_skeleton_points()) <= 2 * res


def test_rectangle_skeleton_junctions():
    res = 0.02
    rect = RectangleDomain.centered(1.0, 0.5)
    sk = compute_skeleton(rect, res)
    assert hausdorff(sk.points(), rectangle_skeleton_points(1.0, 0.5)) <= 2 * res
    pts = sk.points()
    for jx in (-0.5, 0.5):
        assert np.min(np.hypot(pts[:, 0] - jx, pts[:, 1])) <= 2 * res


@pytest.mark.parametrize("dom,group", [
    (SQUARE, "d4"),
    (RectangleDomain.centered(1.0, 0.5), "d2"),
    (ellipse_domain(0.75, 1.0), "d2"),
])
def test_skeleton_symmetry(dom, group):
    sk = compute_skeleton(dom, 0.02)
    pts = sk.points()
    images = [pts * [-1, 1], pts * [1, -1], -pts]
    if group == "d4":
        images += [pts[:, ::-1]]
    for img in images:
        assert hausdorff(pts, img) <= 0.04


def test_skeleton_s_below_distance():
    sk = compute_skeleton(POTATO, 0.02)
    pts = sk.points()
    d = POTATO.signed_distance(pts)
    s = sk.s_values()
    assert np.all(s <= d + 1e-6)


def test_skeleton_s_equals_distance_where_nearest_pair():
    # disc center and square diagonal realize s = d exactly
    skd = compute_skeleton(DISC, 0.05)
    assert skd.samples[0].s_value == pytest.approx(
        float(DISC.signed_distance(skd.samples[0].point)), abs=1e-6)
    sks = compute_skeleton(SQUARE, 0.02)
    for smp in sks.samples:
        x, y = smp.point
        if abs(abs(x) - abs(y)) < 1e-9 and 0.2 < abs(x) < 0.8:
            assert smp.s_value == pytest.approx(
                float(SQUARE.signed_distance(smp.point)), abs=1e-9)


def test_ellipse_origin_two_pairs():
    ell = ellipse_domain(0.75, 1.0)
    sk = compute_skeleton(ell, 0.02)
    pts = sk.points()
    i = int(np.argmin(np.hypot(pts[:, 0], pts[:, 1])))
    smp = sk.samples[i]
    assert np.hypot(*smp.point) <= 0.02
    assert smp.s_value == pytest.approx(0.75, abs=1e-3)
    assert len(smp.pair_distances) == 2
    assert sorted(smp.pair_distances) == pytest.approx([0.75, 1.0], abs=1e-3)


def test_skeleton_requires_positive_resolution():
    with pytest.raises(ValueError):
        compute_skeleton(DISC, 0.0)


# -- omega level sets -----------------------------------------------------------

def test_omega_disc_circle():
    loops = omega_set(DISC, 0.4, resolution=0.01)
    assert len(loops) == 1
    r = np.hypot(loops[0][:, 0], loops[0][:, 1])
    assert np.max(np.abs(r - 0.6)) <= 1e-3


def test_omega_square_offset():
    loops = omega_set(SQUARE, 0.25, resolution=0.01)
    assert len(loops) == 1
    d = SQUARE.signed_distance(loops[0])
    assert np.max(np.abs(d - 0.25)) <= 1e-3
    # inner offset of a square is the smaller square
    assert np.max(np.abs(loops[0])) <= 0.75 + 1e-6


def test_omega_potato_small_loop_near_incenter():
    # the deepest ridge carries a secondary peak (d ~ 0.711 near
    # (0.41, -0.11)), so the level must sit above it to isolate the
    # incenter loop
    xc, dmax = max_distance_point(POTATO)
    level = 0.995 * dmax
    loops = omega_set(POTATO, level, resolution=0.005)
    # marching near the flat peak may split off grid-scale fragments, but
    # every piece must hug the incenter at the requested distance
    assert 1 <= len(loops) <= 3
    assert max(len(l) for l in loops) >= 8
    for loop in loops:
        assert np.max(np.hypot(loop[:, 0] - xc[0], loop[:, 1] - xc[1])) <= 0.15
        d = POTATO.signed_distance(loop)
        assert np.max(np.abs(d - level)) <= 2e-3


def test_omega_beyond_inradius_raises():
    with pytest.raises(RangeError):
        omega_set(DISC, 1.5, resolution=0.02)


# -- skeleton arrival time --------------------------------------------------------

def test_arrival_time_square_zero():
    sk = compute_skeleton(SQUARE, 0.02)
    rs = ReactionSolution(Nonlinearity.exponential())
    assert skeleton_arrival_time(sk, rs, 0.1, get_profile4().eta0) == 0.0


def test_arrival_time_disc_positive_and_inverse():
    sk = compute_skeleton(DISC, 0.05)
    rs = ReactionSolution(Nonlinearity.exponential())
    eta0 = get_profile4().eta0
    assert skeleton_arrival_time(sk, rs, 0.1, eta0) > 0.0
    # choose eps so that (s_min/(eta0 eps))^4 = u0(0.5); then T_S = 0.5
    eps = sk.s_min / (eta0 * rs.state(0.5) ** 0.25)
    assert skeleton_arrival_time(sk, rs, eps, eta0) == pytest.approx(0.5,
                                                                     abs=1e-3)


def test_arrival_time_out_of_reaction_range():
    sk = compute_skeleton(DISC, 0.05)
    rs = ReactionSolution(Nonlinearity.custom(lambda u: (1.0 + u) ** 2, "sq2"),
                          form="tabulated")
    # tiny eps pushes the required reaction state beyond the table
    assert skeleton_arrival_time(sk, rs, 1e-4, get_profile4().eta0) == np.inf
