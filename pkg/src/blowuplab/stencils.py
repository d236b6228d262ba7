"""Finite-difference weight generation on arbitrary node sets.

Implements Fornberg's recursion, which is exact for polynomials up to the
stencil size and works on non-uniform grids. All operator assembly in the
package (profile BVPs, graded strip grids, radial staggered grids) goes
through these weights.
"""

import numpy as np


def fd_weights(nodes, x0, max_deriv):
    """Weights for derivatives 0..max_deriv at x0 from the given nodes.

    Returns an array of shape (len(nodes), max_deriv + 1); column m holds
    the weights of the m-th derivative. Fornberg's algorithm, stable for
    the small stencils (<= 9 points) used here.
    """
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    if n <= max_deriv:
        raise ValueError(f"need more than {max_deriv} nodes, got {n}")
    c = np.zeros((n, max_deriv + 1))
    c1 = 1.0
    c4 = nodes[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, max_deriv)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def stencil_window(i, n, width):
    """Index window of `width` nodes containing i, clipped to [0, n-1]."""
    half = width // 2
    j0 = min(max(i - half, 0), n - width)
    if j0 < 0:
        raise ValueError(f"grid of {n} nodes too small for width-{width} stencil")
    return np.arange(j0, j0 + width)
