"""One-dimensional and finite-outcome beliefs plus reference measures.

Every density is an immutable value object. Continuous densities expose
``pdf``/``logpdf``/``cdf`` and a default quadrature ``window``; categorical
densities are evaluated by outcome index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.special import logsumexp, ndtr

from . import _quadrature

LOG_2PI = math.log(2.0 * math.pi)

# window half-width in standard deviations and default point count
WINDOW_SIGMAS = 8.0
DEFAULT_N = 4096
MIN_DISCRETIZE_N = 16
MAX_TRUNCATION = 1e-8
NORMALIZATION_TOL = 1e-12


def _frozen_array(values, dtype=float):
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Categorical:
    """Probability vector over a finite set of outcomes."""

    weights: np.ndarray
    labels: Optional[tuple] = None

    def __post_init__(self):
        w = _frozen_array(self.weights)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights: must be a non-empty vector")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights: entries must be finite and nonnegative")
        if abs(w.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"weights: sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != w.size:
                raise ValueError("labels: length differs from weights")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def normalized(cls, values, labels=None):
        v = np.asarray(values, dtype=float)
        return cls(v / v.sum(), labels)

    @property
    def size(self):
        return self.weights.size

    def pdf(self, index):
        if not 0 <= int(index) < self.size or int(index) != index:
            raise IndexError(f"outcome index {index} out of range for {self.size} outcomes")
        return float(self.weights[int(index)])

    def logpdf(self, index):
        p = self.pdf(index)
        return math.log(p) if p > 0 else -math.inf

    def numeric_labels(self):
        """Labels as floats, or None when absent or non-numeric."""
        if self.labels is None:
            return None
        try:
            return np.array([float(x) for x in self.labels])
        except (TypeError, ValueError):
            return None

    def __eq__(self, other):
        return (isinstance(other, Categorical)
                and np.array_equal(self.weights, other.weights)
                and self.labels == other.labels)

    __hash__ = None


@dataclass(frozen=True)
class Gaussian1D:
    mean: float
    variance: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)):
            raise ValueError("gaussian parameters must be finite")
        if not self.variance > 0:
            raise ValueError(f"variance: must be > 0, got {self.variance!r}")
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "variance", float(self.variance))

    @property
    def std(self):
        return math.sqrt(self.variance)

    def logpdf(self, s):
        s = np.asarray(s, dtype=float)
        out = -0.5 * (LOG_2PI + math.log(self.variance) + (s - self.mean) ** 2 / self.variance)
        return out if out.ndim else float(out)

    def pdf(self, s):
        return np.exp(self.logpdf(s))

    def cdf(self, s):
        out = ndtr((np.asarray(s, dtype=float) - self.mean) / self.std)
        return out if np.ndim(out) else float(out)

    def window(self):
        return (self.mean - WINDOW_SIGMAS * self.std, self.mean + WINDOW_SIGMAS * self.std)


@dataclass(frozen=True, eq=False)
class Mixture1D:
    component_weights: np.ndarray
    components: tuple

    def __post_init__(self):
        w = _frozen_array(self.component_weights)
        comps = tuple(self.components)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights: mixture needs at least one component")
        if len(comps) != w.size:
            raise ValueError("components: count differs from weights")
        if not all(isinstance(c, Gaussian1D) for c in comps):
            raise TypeError("components: must be Gaussian1D")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError("weights: must be positive and sum to 1")
        object.__setattr__(self, "component_weights", w)
        object.__setattr__(self, "components", comps)

    @property
    def means(self):
        return np.array([c.mean for c in self.components])

    @property
    def variances(self):
        return np.array([c.variance for c in self.components])

    def logpdf(self, s):
        s = np.asarray(s, dtype=float)
        terms = np.stack([c.logpdf(s) for c in self.components], axis=0)
        logw = np.log(self.component_weights).reshape((-1,) + (1,) * s.ndim)
        out = logsumexp(terms + logw, axis=0)
        return out if np.ndim(out) else float(out)

    def pdf(self, s):
        return np.exp(self.logpdf(s))

    def cdf(self, s):
        out = sum(w * c.cdf(s) for w, c in zip(self.component_weights, self.components))
        return out if np.ndim(out) else float(out)

    def window(self):
        sd = np.sqrt(self.variances)
        return (float(np.min(self.means - WINDOW_SIGMAS * sd)),
                float(np.max(self.means + WINDOW_SIGMAS * sd)))

    def __eq__(self, other):
        return (isinstance(other, Mixture1D)
                and np.array_equal(self.component_weights, other.component_weights)
                and self.components == other.components)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Density sampled on a uniform grid and renormalized at construction.

    ``raw_integral`` keeps the integral of the values as supplied, before
    renormalization. Between grid points the density is linear; outside
    the grid it is zero.
    """

    grid: np.ndarray
    values: np.ndarray
    rule: str = "simpson"
    raw_integral: float = field(default=math.nan, init=False)

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("values: must match grid length")
        if grid.size < 3 or not np.all(np.diff(grid) > 0):
            raise ValueError("grid: must be strictly increasing with at least 3 points")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("values: must be finite and nonnegative")
        if self.rule not in _quadrature.RULES:
            raise ValueError(f"rule: unknown integration rule {self.rule!r}")
        w = _quadrature.weights(grid, self.rule)
        total = float(w @ values)
        if not total > 0:
            raise ValueError("values: integrate to zero")
        object.__setattr__(self, "grid", _frozen_array(grid))
        object.__setattr__(self, "values", _frozen_array(values / total))
        object.__setattr__(self, "raw_integral", total)
        object.__setattr__(self, "_weights", _frozen_array(w))

    @classmethod
    def uniform(cls, lo, hi, n, values, rule="simpson"):
        return cls(np.linspace(lo, hi, int(n)), values, rule)

    @property
    def weights(self):
        """Quadrature weights for the grid points."""
        return self._weights

    @property
    def lo(self):
        return float(self.grid[0])

    @property
    def hi(self):
        return float(self.grid[-1])

    @property
    def n(self):
        return self.grid.size

    def integrate(self, f_values):
        return float(self._weights @ f_values)

    def pdf(self, s):
        out = np.interp(s, self.grid, self.values, left=0.0, right=0.0)
        return out if np.ndim(out) else float(out)

    def logpdf(self, s):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(s))

    def log_values(self):
        with np.errstate(divide="ignore"):
            return np.log(self.values)

    def cdf(self, s):
        """CDF of the piecewise-linear density, rescaled to end at 1."""
        cum = _quadrature.cumulative(self.grid, self.values)
        total = cum[-1]
        s = np.asarray(s, dtype=float)
        i = np.clip(np.searchsorted(self.grid, s, side="right") - 1, 0, self.n - 2)
        x0 = self.grid[i]
        h = self.grid[i + 1] - x0
        t = np.clip(s - x0, 0.0, h)
        slope = (self.values[i + 1] - self.values[i]) / h
        part = cum[i] + self.values[i] * t + 0.5 * slope * t * t
        out = np.where(s < self.grid[0], 0.0, np.where(s >= self.grid[-1], 1.0, part / total))
        return out if out.ndim else float(out)

    def window(self):
        return (self.lo, self.hi)

    def same_grid(self, other):
        return self.grid.shape == other.grid.shape and np.allclose(
            self.grid, other.grid, rtol=0.0, atol=1e-12 * max(1.0, np.abs(self.grid).max()))

    def __eq__(self, other):
        return (isinstance(other, GridDensity) and self.rule == other.rule
                and np.array_equal(self.grid, other.grid)
                and np.array_equal(self.values, other.values))

    __hash__ = None


Continuous = (Gaussian1D, Mixture1D, GridDensity)
Density = Union[Categorical, Gaussian1D, Mixture1D, GridDensity]


@dataclass(frozen=True, eq=False)
class ReferenceMeasure:
    """Reference measure ``m``.

    ``counting-uniform`` is m == 1 (counting measure on finite spaces,
    Lebesgue measure on the line). ``grid`` carries explicit values aligned
    with the outcomes of a categorical density or the points of a grid
    density.
    """

    kind: str = "counting-uniform"
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "counting-uniform":
            if self.values is not None:
                raise ValueError("values: counting-uniform measure takes no values")
            return
        if self.kind != "grid":
            raise ValueError(f"kind: unknown reference measure kind {self.kind!r}")
        v = _frozen_array(self.values)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values: must be a non-empty vector")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("values: must be finite and nonnegative")
        object.__setattr__(self, "values", v)

    @classmethod
    def uniform(cls):
        return cls()

    @classmethod
    def of(cls, values):
        return cls("grid", values)

    @classmethod
    def from_density(cls, d):
        """The measure whose values equal a categorical or grid density."""
        if isinstance(d, Categorical):
            return cls("grid", d.weights)
        if isinstance(d, GridDensity):
            return cls("grid", d.values)
        raise TypeError("from_density: needs a Categorical or GridDensity")

    @property
    def is_uniform(self):
        return self.kind == "counting-uniform"

    def values_for(self, n):
        """Values aligned with ``n`` outcomes or grid points."""
        if self.is_uniform:
            return np.ones(n)
        if self.values.size != n:
            raise ValueError(f"reference measure has {self.values.size} values, expected {n}")
        return self.values

    def split(self, index, alpha, n):
        """Split atom ``index`` of an ``n``-outcome measure as ``alpha : 1 - alpha``."""
        return ReferenceMeasure("grid", _split_vector(self.values_for(n), index, alpha))


@dataclass(frozen=True)
class AffineMap:
    """Invertible map ``s -> scale * s + offset``."""

    scale: float
    offset: float = 0.0

    def __post_init__(self):
        if self.scale == 0 or not math.isfinite(self.scale):
            raise ValueError("scale: affine map must have a finite nonzero scale")

    def __call__(self, s):
        return self.scale * np.asarray(s) + self.offset

    def inverse(self):
        return AffineMap(1.0 / self.scale, -self.offset / self.scale)


def pdf(d, s):
    return d.pdf(s)


def moments(d):
    """Mean and variance of a density."""
    if isinstance(d, Gaussian1D):
        return d.mean, d.variance
    if isinstance(d, Mixture1D):
        w, mu, var = d.component_weights, d.means, d.variances
        mean = float(w @ mu)
        # central form avoids cancellation in E[s^2] - mean^2
        return mean, float(w @ (var + (mu - mean) ** 2))
    if isinstance(d, GridDensity):
        mean = d.integrate(d.grid * d.values)
        return mean, d.integrate((d.grid - mean) ** 2 * d.values)
    if isinstance(d, Categorical):
        x = d.numeric_labels()
        if x is None:
            x = np.arange(d.size, dtype=float)
        mean = float(d.weights @ x)
        return mean, float(d.weights @ (x - mean) ** 2)
    raise TypeError(f"moments: unsupported density {type(d).__name__}")


def pushforward_affine(d, u):
    """Distribution of ``u(s)`` when ``s ~ d``."""
    a, b = u.scale, u.offset
    if isinstance(d, Gaussian1D):
        return Gaussian1D(a * d.mean + b, a * a * d.variance)
    if isinstance(d, Mixture1D):
        comps = tuple(pushforward_affine(c, u) for c in d.components)
        w = d.component_weights
        if a < 0:
            # keep components ordered as in the source, left to right
            comps, w = comps[::-1], w[::-1]
        return Mixture1D(w, comps)
    if isinstance(d, GridDensity):
        grid = a * d.grid + b
        values = d.values / abs(a)
        if a < 0:
            grid, values = grid[::-1], values[::-1]
        return GridDensity(grid, values, d.rule)
    raise TypeError(f"pushforward_affine: unsupported density {type(d).__name__}")


def truncated_mass(d, lo, hi):
    """Probability that ``s ~ d`` falls outside ``[lo, hi]``."""
    return float(d.cdf(lo) + (1.0 - d.cdf(hi)))


def default_window(*densities):
    los, his = zip(*(d.window() for d in densities))
    return min(los), max(his)


def discretize(d, lo=None, hi=None, n=DEFAULT_N, rule="simpson"):
    """Sample ``d`` on ``n`` uniform points over ``[lo, hi]`` and renormalize.

    Raises ValueError when more than 1e-8 of the mass lies outside the
    window.
    """
    if isinstance(d, Categorical):
        raise TypeError("discretize: categorical densities have no continuous support")
    if lo is None or hi is None:
        lo, hi = d.window()
    if not lo < hi:
        raise ValueError("window: lo must be below hi")
    if n < MIN_DISCRETIZE_N:
        raise ValueError(f"n: need at least {MIN_DISCRETIZE_N} points")
    lost = truncated_mass(d, lo, hi)
    if lost > MAX_TRUNCATION:
        raise ValueError(f"window [{lo}, {hi}] truncates mass {lost:.6g} > {MAX_TRUNCATION:g}")
    grid = np.linspace(lo, hi, int(n))
    return GridDensity(grid, d.pdf(grid), rule)


def _split_vector(v, index, alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha: must lie in (0, 1), got {alpha!r}")
    if not 0 <= index < len(v):
        raise IndexError(f"index {index} out of range for {len(v)} outcomes")
    w = v[index]
    head = alpha * w
    # w - head rather than (1 - alpha) * w so the halves re-add to w
    return np.concatenate([v[:index], [head, w - head], v[index + 1:]])


def split_event(c, index, alpha):
    """Refine outcome ``index`` into two outcomes carrying ``alpha`` and ``1 - alpha`` of it."""
    labels = None
    if c.labels is not None:
        lab = c.labels[index]
        labels = c.labels[:index] + (lab, lab) + c.labels[index + 1:]
    return Categorical(_split_vector(c.weights, index, alpha), labels)


def outcome_count(d):
    return d.size if isinstance(d, Categorical) else d.n
