"""Uniform-grid quadrature weights shared by every integrating routine."""

import numpy as np

RULES = ("simpson", "trapezoid")

# relative tolerance when deciding whether a grid is uniformly spaced
_UNIFORM_RTOL = 1e-9


def is_uniform(grid):
    h = np.diff(grid)
    return bool(np.all(np.abs(h - h.mean()) <= _UNIFORM_RTOL * abs(h.mean())))


def weights(grid, rule="simpson"):
    """Return the weight vector ``w`` with ``sum(w * f) ~ integral of f``.

    Composite Simpson for an odd point count. For an even count the first
    ``n - 1`` points use Simpson and the last interval uses the
    three-point correction ``h * (-1/12, 8/12, 5/12)``, which is the
    uniform-spacing case of the scheme ``scipy.integrate.simpson`` applies.
    """
    grid = np.asarray(grid, dtype=float)
    n = grid.size
    if n < 3:
        raise ValueError("quadrature needs at least 3 grid points")
    if not is_uniform(grid):
        raise ValueError("quadrature grid must be uniformly spaced")
    h = (grid[-1] - grid[0]) / (n - 1)
    if rule == "trapezoid":
        w = np.full(n, h)
        w[0] = w[-1] = 0.5 * h
        return w
    if rule != "simpson":
        raise ValueError(f"unknown integration rule {rule!r}")
    w = np.zeros(n)
    m = n if n % 2 == 1 else n - 1
    w[:m:2] = 2.0
    w[1:m:2] = 4.0
    w[0] = w[m - 1] = 1.0
    w *= h / 3.0
    if m != n:
        w[-3:] += h * np.array([-1.0 / 12.0, 8.0 / 12.0, 5.0 / 12.0])
    return w


def cumulative(grid, values):
    """Cumulative trapezoid integral of ``values`` at each grid point."""
    h = np.diff(grid)
    out = np.zeros(len(grid))
    out[1:] = np.cumsum(0.5 * h * (values[1:] + values[:-1]))
    return out
