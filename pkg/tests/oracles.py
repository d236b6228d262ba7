"""Independent oracles for the test suite.

Everything here deliberately avoids the package's own numerical paths:
textbook uniform-grid stencils are hard-coded, the profile oracle shoots
from far-field data with an off-the-shelf initial-value integrator, and
distance oracles use brute-force boundary sampling.
"""

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

SQRT3 = np.sqrt(3.0)
OMEGA = 3.0 * 2.0 ** (-11.0 / 3.0)


# -- textbook stencils (uniform grid), 4th-order accurate ------------------------

def d1_5pt(v, h):
    out = np.full_like(v, np.nan)
    out[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    return out


def d2_5pt(v, h):
    out = np.full_like(v, np.nan)
    out[2:-2] = (-v[:-4] + 16 * v[1:-3] - 30 * v[2:-2] + 16 * v[3:-1] - v[4:]) \
        / (12 * h * h)
    return out


def d3_7pt(v, h):
    out = np.full_like(v, np.nan)
    out[3:-3] = (v[:-6] - 8 * v[1:-5] + 13 * v[2:-4]
                 - 13 * v[4:-2] + 8 * v[5:-1] - v[6:]) / (8 * h ** 3)
    return out


def d4_7pt(v, h):
    out = np.full_like(v, np.nan)
    out[3:-3] = (-v[:-6] + 12 * v[1:-5] - 39 * v[2:-4] + 56 * v[3:-3]
                 - 39 * v[4:-2] + 12 * v[5:-1] - v[6:]) / (6 * h ** 4)
    return out


# -- shooting oracle for the fourth-order layer profile --------------------------

def _wkb_tail_state(eta, theta):
    """Value/derivatives of Im exp(lambda * omega * eta^(4/3) + i theta),
    lambda = -1 + i sqrt(3): one decaying far-field mode."""
    lam = -1.0 + 1j * SQRT3
    xi = OMEGA * eta ** (4.0 / 3.0)
    dxi = OMEGA * (4.0 / 3.0) * eta ** (1.0 / 3.0)
    d2xi = OMEGA * (4.0 / 9.0) * eta ** (-2.0 / 3.0)
    d3xi = -OMEGA * (8.0 / 27.0) * eta ** (-5.0 / 3.0)
    E = np.exp(lam * xi + 1j * theta)
    g = np.imag(E)
    g1 = np.imag(lam * E) * dxi
    g2 = np.imag(lam ** 2 * E) * dxi ** 2 + np.imag(lam * E) * d2xi
    g3 = (np.imag(lam ** 3 * E) * dxi ** 3
          + 3 * np.imag(lam ** 2 * E) * dxi * d2xi + np.imag(lam * E) * d3xi)
    return np.array([g, g1, g2, g3])


def shooting_profile4(eta_start=30.0, rtol=1e-12):
    """Fourth-order profile peak by backward shooting.

    Integrates the two decaying WKB tail modes from eta_start down to 0
    (backward integration is stable for them), then superposes with the
    particular solution v = 1 to satisfy v(0) = v'(0) = 0. Returns
    (eta0, v(eta0))."""

    def rhs_hom(eta, y):
        return [y[1], y[2], y[3], 0.25 * eta * y[1] - y[0]]

    sols = []
    for th in (0.0, np.pi / 2):
        s = solve_ivp(rhs_hom, [eta_start, 1e-9], _wkb_tail_state(eta_start, th),
                      rtol=rtol, atol=1e-16, dense_output=True, method="DOP853")
        assert s.success
        sols.append(s)
    M = np.array([[sols[0].y[0, -1], sols[1].y[0, -1]],
                  [sols[0].y[1, -1], sols[1].y[1, -1]]])
    c = np.linalg.solve(M, [-1.0, 0.0])

    def v(e):
        return 1.0 + c[0] * sols[0].sol(e)[0] + c[1] * sols[1].sol(e)[0]

    def vp(e):
        return c[0] * sols[0].sol(e)[1] + c[1] * sols[1].sol(e)[1]

    ee = np.linspace(0.5, 10.0, 4001)
    i = int(np.argmax(v(ee)))
    eta0 = brentq(vp, ee[i] - 0.1, ee[i] + 0.1, xtol=1e-13)
    return float(eta0), float(v(eta0))


# -- geometry oracles -------------------------------------------------------------

def brute_force_distance(dom, points, n_samples=100_000):
    """min |x - y| over a dense boundary sampling."""
    from blowuplab.geometry import RectangleDomain, SmoothPolarDomain
    points = np.atleast_2d(points)
    if isinstance(dom, SmoothPolarDomain):
        th = np.linspace(0.0, 2 * np.pi, n_samples, endpoint=False)
        bd = dom.point_at(th)
    elif isinstance(dom, RectangleDomain):
        per_edge = n_samples // 4
        xs = np.linspace(dom.x0, dom.x1, per_edge)
        ys = np.linspace(dom.y0, dom.y1, per_edge)
        bd = np.concatenate([
            np.column_stack([xs, np.full(per_edge, dom.y0)]),
            np.column_stack([xs, np.full(per_edge, dom.y1)]),
            np.column_stack([np.full(per_edge, dom.x0), ys]),
            np.column_stack([np.full(per_edge, dom.x1), ys])])
    else:
        raise TypeError(type(dom))
    out = np.empty(len(points))
    for lo in range(0, len(points), 256):
        chunk = points[lo:lo + 256]
        d2 = ((chunk[:, None, :] - bd[None, :, :]) ** 2).sum(axis=2)
        out[lo:lo + 256] = np.sqrt(d2.min(axis=1))
    return out


def hausdorff(A, B):
    """Symmetric Hausdorff distance between two point sets."""
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    D = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=2)
    return max(D.min(axis=1).max(), D.min(axis=0).max())


def square_skeleton_points(L=1.0, n=2000):
    """Analytic square skeleton (axes plus diagonals), densely sampled."""
    t = np.linspace(-L, L, n)[1:-1]
    pts = [np.column_stack([t, np.zeros_like(t)]),
           np.column_stack([np.zeros_like(t), t]),
           np.column_stack([t, t]),
           np.column_stack([t, -t])]
    return np.vstack(pts)


def rectangle_skeleton_points(a=1.0, b=0.5, n=2000):
    """Analytic centered-rectangle skeleton: mid-lines plus corner bisectors."""
    tx = np.linspace(-a, a, n)[1:-1]
    ty = np.linspace(-b, b, n)[1:-1]
    c = min(a, b)
    td = np.linspace(0.0, c, n // 2)[1:]
    pts = [np.column_stack([tx, np.zeros_like(tx)]),
           np.column_stack([np.zeros_like(ty), ty])]
    for sx in (-1, 1):
        for sy in (-1, 1):
            pts.append(np.column_stack([sx * (a - td), sy * (b - td)]))
    return np.vstack(pts)
