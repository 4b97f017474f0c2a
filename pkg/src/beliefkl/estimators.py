"""Point estimates that minimize an expected loss under a belief.

The three classic recipes: delta loss gives the mode, absolute loss the
median, squared loss the mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .densities import (
    DEFAULT_N,
    Categorical,
    Gaussian1D,
    GridDensity,
    Mixture1D,
    discretize,
    moments,
)

KINDS = ("mode", "median", "mean")
_ALIASES = {"delta-mode": "mode", "absolute-median": "median", "squared-mean": "mean"}

TIE_TOL = 1e-12
CDF_TOL = 1e-10


@dataclass(frozen=True)
class EstimationLoss:
    """Loss ``(sigma, s0) -> real`` tagged with the recipe that minimizes it.

    ``kind`` is one of ``mode``, ``median``, ``mean`` (the long names
    ``delta-mode`` etc. are accepted). The delta loss has no pointwise
    form; ``expected_estimation_loss`` handles it as ``-pdf(sigma)``.
    """

    kind: str
    fn: Optional[Callable] = None

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError(f"loss: unknown estimation loss {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.fn is None and kind != "mode":
            object.__setattr__(self, "fn", _absolute if kind == "median" else _squared)

    def __call__(self, sigma, s0):
        if self.fn is None:
            raise ValueError("the delta loss has no pointwise value")
        return self.fn(sigma, s0)


def _absolute(sigma, s0):
    return np.abs(sigma - s0)


def _squared(sigma, s0):
    return (sigma - s0) ** 2


MODE = EstimationLoss("mode")
MEDIAN = EstimationLoss("median")
MEAN = EstimationLoss("mean")


def _as_loss(loss):
    return loss if isinstance(loss, EstimationLoss) else EstimationLoss(loss)


def smallest_argmax(values, tol=TIE_TOL):
    """Index of the first value within ``tol`` of the maximum."""
    values = np.asarray(values)
    return int(np.flatnonzero(values >= values.max() - tol)[0])


def quantile(d, prob, tol=CDF_TOL):
    """Point where the CDF of ``d`` crosses ``prob``, by bisection.

    Bisection stops once the CDF at the midpoint is within ``tol`` of
    ``prob`` or the bracket can no longer shrink.
    """
    if not 0.0 < prob < 1.0:
        raise ValueError("prob: must lie in (0, 1)")
    lo, hi = d.window()
    while d.cdf(lo) > prob:
        lo -= hi - lo
    while d.cdf(hi) < prob:
        hi += hi - lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        c = d.cdf(mid)
        if abs(c - prob) <= tol or mid in (lo, hi):
            return mid
        if c < prob:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _mixture_mode(d):
    # every mode of a Gaussian mixture lies inside the default window, so
    # refining each local maximum of the gridded pdf finds them all
    lo, hi = d.window()
    grid = np.linspace(lo, hi, DEFAULT_N)
    logp = d.logpdf(grid)
    interior = np.flatnonzero((logp[1:-1] >= logp[:-2]) & (logp[1:-1] >= logp[2:])) + 1
    peaks = []
    for i in interior:
        res = minimize_scalar(lambda s: -d.logpdf(s), bounds=(grid[i - 1], grid[i + 1]),
                              method="bounded", options={"xatol": 1e-12})
        peaks.append(float(res.x))
    return peaks[smallest_argmax([d.pdf(s) for s in peaks])]


def mode(d):
    if isinstance(d, Gaussian1D):
        return d.mean
    if isinstance(d, Mixture1D):
        return _mixture_mode(d)
    if isinstance(d, GridDensity):
        return float(d.grid[smallest_argmax(d.values)])
    if isinstance(d, Categorical):
        i = smallest_argmax(d.weights)
        x = d.numeric_labels()
        return float(x[i]) if x is not None else float(i)
    raise TypeError(f"mode: unsupported density {type(d).__name__}")


def median(d):
    if isinstance(d, Gaussian1D):
        return d.mean
    if isinstance(d, Categorical):
        x = _numeric_or_raise(d, "median")
        order = np.argsort(x, kind="stable")
        cum = np.cumsum(d.weights[order])
        return float(x[order][np.searchsorted(cum, 0.5 - TIE_TOL)])
    return quantile(d, 0.5)


def _numeric_or_raise(d, what):
    x = d.numeric_labels()
    if x is None:
        raise ValueError(f"{what} of a categorical belief needs numeric labels")
    return x


def estimate(p, loss):
    """Point estimate minimizing the expected ``loss`` under ``p``."""
    kind = _as_loss(loss).kind
    if kind == "mode":
        return mode(p)
    if kind == "median":
        return median(p)
    if isinstance(p, Categorical):
        _numeric_or_raise(p, "mean")
    return moments(p)[0]


def expected_estimation_loss(p, sigma, loss, window=None):
    """Expected loss of reporting ``sigma`` when the truth is ``s0 ~ p``."""
    loss = _as_loss(loss)
    if loss.kind == "mode" and loss.fn is None:
        if isinstance(p, Categorical):
            x = _numeric_or_raise(p, "delta loss")
            hit = np.flatnonzero(x == sigma)
            return -float(p.weights[hit].sum())
        return -float(p.pdf(sigma))
    if isinstance(p, Categorical):
        x = _numeric_or_raise(p, "expected loss")
        return float(p.weights @ loss(sigma, x))
    g = p if isinstance(p, GridDensity) else discretize(p, *(window or p.window()))
    return g.integrate(loss(sigma, g.grid) * g.values)
