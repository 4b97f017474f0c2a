"""Divergences, cross entropies and expected losses under a reference measure.

All values are in nats. Continuous integrals use Simpson quadrature on the
default window of the weighting density (the first argument of ``kl``,
``p`` elsewhere), so the integrand is resolved wherever it carries mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _quadrature
from .densities import (
    DEFAULT_N,
    Categorical,
    GridDensity,
    Gaussian1D,
    ReferenceMeasure,
    discretize,
)

# density values below this count as exact zeros
ZERO_DENSITY = 1e-300


@dataclass(frozen=True)
class LocalLoss:
    """Loss of the ratio ``x = q(s0) / m(s0)`` at the observed outcome.

    ``fn`` must accept numpy arrays of positive ratios and be free of side
    effects.
    """

    name: str
    fn: Callable

    def __call__(self, x):
        return self.fn(x)

    def lift(self, m=None):
        """The equivalent full-distribution score ``(q, s0) -> L(q[s0] / m[s0])``."""
        m = m if m is not None else ReferenceMeasure.uniform()

        def score(q, s0):
            q = np.asarray(q, dtype=float)
            mv = m.values_for(q.shape[-1])
            return self.fn(q[..., s0] / mv[s0])

        return GeneralScore(f"lifted({self.name})", score)


@dataclass(frozen=True)
class GeneralScore:
    """Loss of a whole reported distribution ``q`` given the outcome ``s0``.

    ``fn(q, s0)`` receives ``q`` with outcomes on the last axis and must be
    vectorized over any leading axes.
    """

    name: str
    fn: Callable

    def __call__(self, q, s0):
        return self.fn(q, s0)


@dataclass(frozen=True, eq=False)
class DiscreteJoint:
    """Joint table ``p(d, s)``: rows index data, columns index latents."""

    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.ndim != 2 or t.size == 0:
            raise ValueError("table: must be a non-empty 2-d array")
        if not np.all(np.isfinite(t)) or np.any(t < 0):
            raise ValueError("table: entries must be finite and nonnegative")
        if abs(t.sum() - 1.0) > 1e-12:
            raise ValueError(f"table: sums to {t.sum()!r}, not 1")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    def marginal(self, d):
        return float(self.table[d].sum())

    def posterior(self, d):
        z = self.marginal(d)
        if not z > 0:
            raise ValueError(f"data index {d}: zero marginal probability")
        return Categorical(self.table[d] / z)


@dataclass(frozen=True)
class ElboDecomposition:
    elbo: float
    kl_to_posterior: float
    log_evidence: float


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


def _common_support(p, q, window=None):
    """Bring two densities onto shared outcomes.

    Returns ``(p_values, q_values, weights)`` with quadrature weights (ones
    for categorical outcomes).
    """
    if isinstance(p, Categorical) or isinstance(q, Categorical):
        if not (isinstance(p, Categorical) and isinstance(q, Categorical)):
            raise ValueError("cannot compare a categorical with a continuous density")
        if p.size != q.size:
            raise ValueError(f"outcome spaces differ: {p.size} vs {q.size} outcomes")
        return p.weights, q.weights, np.ones(p.size)
    if isinstance(p, GridDensity) and isinstance(q, GridDensity):
        if not p.same_grid(q):
            raise ValueError("grid densities must share an identical grid")
        return p.values, q.values, p.weights
    if isinstance(p, GridDensity):
        q = discretize(q, p.lo, p.hi, p.n, p.rule)
        return p.values, q.values, p.weights
    if isinstance(q, GridDensity):
        p = discretize(p, q.lo, q.hi, q.n, q.rule)
        return p.values, q.values, q.weights
    lo, hi = window[:2] if window is not None else p.window()
    n = window[2] if window is not None and len(window) > 2 else DEFAULT_N
    grid = np.linspace(lo, hi, int(n))
    return p.pdf(grid), q.pdf(grid), _quadrature.weights(grid)


def _stored_log(values):
    """Log of stored densities; values at or below ZERO_DENSITY count as zero."""
    values = np.asarray(values, dtype=float)
    out = np.full(values.shape, -np.inf)
    pos = values > ZERO_DENSITY
    out[pos] = np.log(values[pos])
    return out


def _common_log_support(p, q, window=None):
    """Like ``_common_support`` but in logs; analytic pairs use ``logpdf`` so far tails do not underflow."""
    analytic = not isinstance(p, (Categorical, GridDensity)) and not isinstance(q, (Categorical, GridDensity))
    if analytic:
        lo, hi = window[:2] if window is not None else p.window()
        n = window[2] if window is not None and len(window) > 2 else DEFAULT_N
        grid = np.linspace(lo, hi, int(n))
        return p.logpdf(grid), q.logpdf(grid), _quadrature.weights(grid)
    pv, qv, w = _common_support(p, q, window)
    return _stored_log(pv), _stored_log(qv), w


def _kl_terms(lp, lq, w):
    live = np.isfinite(lp)
    if np.any(np.isneginf(lq[live])):
        return math.inf
    return float(np.sum(w[live] * np.exp(lp[live]) * (lp[live] - lq[live])))


def gaussian_kl(p, q):
    """Closed-form ``KL(p, q)`` between two univariate Gaussians."""
    return (0.5 * math.log(q.variance / p.variance)
            + (p.variance + (p.mean - q.mean) ** 2) / (2.0 * q.variance) - 0.5)


def kl(p, q, window=None):
    """Kullback-Leibler divergence ``sum/integral of p ln(p / q)``.

    Returns ``math.inf`` when ``q`` vanishes (below 1e-300) somewhere ``p``
    does not. Gaussian pairs use the closed form; other continuous pairs are
    integrated over ``window = (lo, hi[, n])``, by default the window of
    ``p``.
    """
    if isinstance(p, Gaussian1D) and isinstance(q, Gaussian1D) and window is None:
        return gaussian_kl(p, q)
    return _kl_terms(*_common_log_support(p, q, window))


def quadrature_kl(p, q, window=None):
    """``kl`` forced through quadrature even for Gaussian pairs."""
    return _kl_terms(*_common_log_support(p, q, window))


def cross_entropy_m(p, q, m=None, window=None):
    """``-sum/integral of p ln(q / m)``; with the default m == 1 this is the cross entropy."""
    m = m if m is not None else ReferenceMeasure.uniform()
    lp, lq, w = _common_log_support(p, q, window)
    mv = _measure_values(m, lp.size)
    live = np.isfinite(lp)
    if np.any((mv <= 0) & np.isfinite(lq)):
        raise ValueError("reference measure vanishes where q is positive")
    if np.any(mv[live] <= 0):
        raise ValueError("reference measure vanishes where p is positive")
    if np.any(np.isneginf(lq[live])):
        return math.inf
    return float(-np.sum(w[live] * np.exp(lp[live]) * (lq[live] - np.log(mv[live]))))


def _measure_values(m, n):
    return np.asarray(m.values_for(n), dtype=float)


def entropy(p, window=None):
    return cross_entropy_m(p, p, window=window)


def expected_local_loss(p, q, m, loss, window=None):
    """Expected value under ``p`` of ``loss(q(s0) / m(s0))``."""
    m = m if m is not None else ReferenceMeasure.uniform()
    pv, qv, w = _common_support(p, q, window)
    mv = _measure_values(m, pv.size)
    if np.any((mv <= 0) & (qv > 0)):
        raise ValueError("reference measure vanishes where q is positive")
    live = pv > 0
    if np.any(mv[live] <= 0):
        raise ValueError("reference measure vanishes where p is positive")
    ratio = qv[live] / mv[live]
    if np.any(ratio <= 0):
        raise ValueError("loss ratio q/m is not positive where p is positive")
    return float(np.sum(w[live] * pv[live] * np.asarray(loss(ratio), dtype=float)))


def redundancy(p, q):
    """Expected extra code length, in nats, of coding ``p``-distributed symbols with ``q``."""
    if not (isinstance(p, Categorical) and isinstance(q, Categorical)):
        raise TypeError("redundancy: defined for categorical distributions")
    h_pq = cross_entropy_m(p, q)
    if math.isinf(h_pq):
        return math.inf
    return h_pq - cross_entropy_m(p, p)


def elbo_decomposition(joint, d, q):
    """Split ``ln p(d)`` into the evidence lower bound and ``KL(q, posterior)``."""
    row = joint.table[d]
    z = float(row.sum())
    if not z > 0:
        raise ValueError(f"data index {d}: zero marginal probability")
    qv = q.weights
    if qv.size != row.size:
        raise ValueError("q: outcome count differs from the latent dimension")
    live = qv > 0
    if np.any(row[live] <= 0):
        elbo = -math.inf
    else:
        elbo = float(np.sum(qv[live] * (np.log(row[live]) - np.log(qv[live]))))
    return ElboDecomposition(elbo, kl(q, joint.posterior(d)), math.log(z))


# the loss zoo: two members of the -C ln x + D family and four outsiders
def _neg_log(x):
    return -_log(x)


LOG_LOSS = LocalLoss("-ln x", _neg_log)
SCALED_LOG_LOSS = LocalLoss("-2 ln x + 5", lambda x: -2.0 * _log(x) + 5.0)
LINEAR_LOSS = LocalLoss("x", lambda x: np.asarray(x, dtype=float))
SQUARE_LOSS = LocalLoss("x^2", lambda x: np.asarray(x, dtype=float) ** 2)
NEG_SQRT_LOSS = LocalLoss("-sqrt x", lambda x: -np.sqrt(x))
INVERSE_LOSS = LocalLoss("1/x", lambda x: 1.0 / np.asarray(x, dtype=float))

LOSS_ZOO = (LOG_LOSS, SCALED_LOG_LOSS, LINEAR_LOSS, SQUARE_LOSS, NEG_SQRT_LOSS, INVERSE_LOSS)


def _log_score(q, s0):
    return -_log(np.asarray(q, dtype=float)[..., s0])


def _brier_score(q, s0):
    q = np.asarray(q, dtype=float)
    return -2.0 * q[..., s0] + np.sum(q * q, axis=-1)


def _linear_score(q, s0):
    return -np.asarray(q, dtype=float)[..., s0]


LOG_SCORE = GeneralScore("log", _log_score)
BRIER_SCORE = GeneralScore("brier", _brier_score)
LINEAR_SCORE = GeneralScore("linear", _linear_score)
