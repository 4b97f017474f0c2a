"""Fit a member of a restricted family to a target belief.

``approximation`` minimizes KL(p, q) over q, which is the optimal
criterion for approximating p. ``inference`` minimizes KL(q, p), the
variational-Bayes direction, kept for comparison: on multi-modal targets
it locks onto whichever mode the start point favours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize
from scipy.special import log_softmax

from . import _quadrature
from .densities import (
    DEFAULT_N,
    WINDOW_SIGMAS,
    Categorical,
    Gaussian1D,
    GridDensity,
    Mixture1D,
    discretize,
    moments,
)
from .estimators import quantile
from .scoring import ZERO_DENSITY, kl

APPROXIMATION = "approximation-kl"
INFERENCE = "inference-kl"
_DIRECTIONS = {"approx": APPROXIMATION, "approximation": APPROXIMATION, APPROXIMATION: APPROXIMATION,
               "infer": INFERENCE, "inference": INFERENCE, INFERENCE: INFERENCE}

VARIANCE_FLOOR = 1e-8
XATOL = 1e-8
FATOL = 1e-10
MAX_ITER = 2000
N_STARTS = 8


class FitError(RuntimeError):
    """No usable fit: the objective is infinite at every start."""


def direction_name(direction):
    try:
        return _DIRECTIONS[direction]
    except KeyError:
        raise ValueError(f"direction: expected approx or infer, got {direction!r}") from None


@dataclass(frozen=True)
class ParametricFamily:
    """Candidate approximations and their unconstrained parametrization.

    ``gaussian1d`` uses ``(mean, ln variance)`` with the variance clipped
    below at ``variance_floor``. ``categorical-simplex`` uses ``n_outcomes - 1``
    scores, softmaxed with a last score pinned to zero.
    """

    kind: str = "gaussian1d"
    n_outcomes: int = 0
    variance_floor: float = VARIANCE_FLOOR

    def __post_init__(self):
        if self.kind not in ("gaussian1d", "categorical-simplex"):
            raise ValueError(f"family: unknown kind {self.kind!r}")
        if self.kind == "categorical-simplex" and self.n_outcomes < 2:
            raise ValueError("family: categorical-simplex needs n_outcomes >= 2")

    @classmethod
    def gaussian(cls):
        return cls("gaussian1d")

    @classmethod
    def simplex(cls, n_outcomes):
        return cls("categorical-simplex", n_outcomes)

    @property
    def dim(self):
        return 2 if self.kind == "gaussian1d" else self.n_outcomes - 1

    def variance(self, log_var):
        return max(math.exp(min(log_var, 700.0)), self.variance_floor)

    def density(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.kind == "gaussian1d":
            return Gaussian1D(float(theta[0]), self.variance(float(theta[1])))
        return Categorical(np.exp(self.log_probs(theta)))

    def log_probs(self, theta):
        return log_softmax(np.append(theta, 0.0))

    def parameters(self, q):
        """Inverse of ``density``."""
        if self.kind == "gaussian1d":
            return np.array([q.mean, math.log(q.variance)])
        with np.errstate(divide="ignore"):
            lp = np.log(q.weights)
        return lp[:-1] - lp[-1]


@dataclass(frozen=True)
class StartResult:
    initial_point: tuple
    final_point: tuple
    value: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class FitReport:
    fitted: object
    divergence_value: float
    direction: str
    initial_point: tuple
    iterations: int
    converged: bool
    multistart_results: list = field(default_factory=list)

    def to_dict(self):
        from .specfile import to_dict
        return {
            "direction": self.direction,
            "fitted": to_dict(self.fitted),
            "divergence_value": self.divergence_value,
            "initial_point": list(self.initial_point),
            "iterations": self.iterations,
            "converged": self.converged,
            "multistart_results": [
                {"initial_point": list(r.initial_point), "final_point": list(r.final_point),
                 "value": r.value, "iterations": r.iterations, "converged": r.converged}
                for r in self.multistart_results
            ],
        }


def moment_match_gaussian(p):
    """The Gaussian with the mean and variance of ``p``; the exact minimizer of KL(p, .)."""
    mean, var = moments(p)
    if not (math.isfinite(var) and var > 0):
        raise ValueError(f"moment matching needs a positive variance, got {var!r}")
    return Gaussian1D(mean, var)


def _guard(value):
    return value if math.isfinite(value) else math.inf


def _gaussian_objective(p, family, direction):
    if isinstance(p, Categorical):
        raise ValueError("a gaussian family cannot approximate a categorical target")
    if direction == APPROXIMATION:
        if isinstance(p, Gaussian1D):
            return lambda th: kl(p, family.density(th))
        g = p if isinstance(p, GridDensity) else discretize(p)
        live = g.values > ZERO_DENSITY
        s, pv, w = g.grid[live], g.values[live], g.weights[live]
        neg_entropy = float(np.sum(w * pv * np.log(pv)))

        def approx(th):
            q = family.density(th)
            logq = q.logpdf(s)
            return _guard(neg_entropy - float(np.sum(w * pv * logq)))

        return approx

    # inference direction: integrate in standardized coordinates of q
    z = np.linspace(-WINDOW_SIGMAS, WINDOW_SIGMAS, DEFAULT_N)
    wz = _quadrature.weights(z)
    log_phi = -0.5 * (math.log(2.0 * math.pi) + z * z)
    phi = np.exp(log_phi)

    def infer(th):
        q = family.density(th)
        sd = q.std
        logp = p.logpdf(q.mean + sd * z)
        if np.any(np.isneginf(logp)):
            return math.inf
        return _guard(float(np.sum(wz * phi * (log_phi - math.log(sd) - logp))))

    return infer


def _categorical_objective(p, family, direction):
    if not isinstance(p, Categorical):
        raise ValueError("a categorical family needs a categorical target")
    if p.size != family.n_outcomes:
        raise ValueError(f"family has {family.n_outcomes} outcomes, target has {p.size}")
    with np.errstate(divide="ignore"):
        logp = np.log(p.weights)
    live = p.weights > ZERO_DENSITY

    def objective(th):
        logq = family.log_probs(th)
        if direction == APPROXIMATION:
            return _guard(float(np.sum(p.weights[live] * (logp[live] - logq[live]))))
        q = np.exp(logq)
        on = q > ZERO_DENSITY
        if np.any(p.weights[on] <= ZERO_DENSITY):
            return math.inf
        return _guard(float(np.sum(q[on] * (logq[on] - logp[on]))))

    return objective


def objective(p, family, direction):
    """Divergence as a function of the unconstrained parameter vector."""
    direction = direction_name(direction)
    if family.kind == "gaussian1d":
        return _gaussian_objective(p, family, direction)
    return _categorical_objective(p, family, direction)


def default_starts(p, family):
    """Deterministic start points spread over the target's support."""
    if family.kind == "gaussian1d":
        _, var = moments(p)
        probs = np.linspace(0.1, 0.9, N_STARTS // 2)
        means = [quantile(p, float(pr)) for pr in probs]
        return [np.array([mu, lv]) for lv in (0.0, math.log(var)) for mu in means]
    starts = [np.zeros(family.dim)]
    for sign in (1.0, -1.0):
        for k in range(family.dim):
            e = np.zeros(family.dim)
            e[k] = 2.0 * sign
            starts.append(e)
    return starts[:N_STARTS]


def _initial_simplex(x0, p, family):
    if family.kind == "gaussian1d":
        _, var = moments(p)
        steps = np.array([0.25 * math.sqrt(var), 0.5])
    else:
        steps = np.full(family.dim, 0.5)
    return np.vstack([x0] + [x0 + np.eye(len(x0))[i] * steps[i] for i in range(len(x0))])


def _descend(f, x0, p, family):
    res = minimize(f, x0, method="Nelder-Mead",
                   options={"initial_simplex": _initial_simplex(x0, p, family),
                            "xatol": XATOL, "fatol": FATOL, "maxiter": MAX_ITER,
                            "maxfev": 10 * MAX_ITER, "adaptive": False})
    return StartResult(tuple(float(v) for v in x0), tuple(float(v) for v in res.x),
                       float(res.fun), int(res.nit), bool(res.success))


def fit(p, family=None, direction=APPROXIMATION, init=None):
    """Minimize the chosen KL direction over ``family`` by simplex descent.

    ``init`` is one unconstrained start point; without it the default
    multistart set is used and every endpoint is kept in the report.
    Raises FitError when the objective is infinite at every start.
    """
    family = family or ParametricFamily.gaussian()
    direction = direction_name(direction)
    f = objective(p, family, direction)
    starts = [np.asarray(init, dtype=float)] if init is not None else default_starts(p, family)
    for x0 in starts:
        if x0.shape != (family.dim,):
            raise ValueError(f"init: expected {family.dim} parameters, got {x0.size}")
    results = []
    for x0 in starts:
        if not math.isfinite(f(x0)):
            results.append(StartResult(tuple(map(float, x0)), tuple(map(float, x0)), math.inf, 0, False))
            continue
        results.append(_descend(f, x0, p, family))
    best = min(range(len(results)), key=lambda i: (results[i].value, i))
    r = results[best]
    if not math.isfinite(r.value):
        raise FitError("divergence is infinite at every start point (family support mismatch)")
    return FitReport(family.density(r.final_point), max(r.value, 0.0), direction,
                     r.initial_point, r.iterations, r.converged, results)


@dataclass(frozen=True)
class Figure1Result:
    target: Mixture1D
    s: np.ndarray
    p: np.ndarray
    q_approx: np.ndarray
    q_infer: np.ndarray
    approx: FitReport
    infer_plus: FitReport
    infer_minus: FitReport
    kl_p_approx: float
    kl_p_infer: float

    def parameters(self):
        def g(q):
            return {"mean": q.mean, "variance": q.variance}

        return {
            "separation": float(self.target.components[1].mean),
            "component_variance": float(self.target.components[1].variance),
            "approximation": {**g(self.approx.fitted), "kl_approximation": self.approx.divergence_value,
                              "kl_p_q": self.kl_p_approx},
            "inference_plus": {**g(self.infer_plus.fitted), "initial_mean": self.infer_plus.initial_point[0],
                               "kl_inference": self.infer_plus.divergence_value, "kl_p_q": self.kl_p_infer},
            "inference_minus": {**g(self.infer_minus.fitted), "initial_mean": self.infer_minus.initial_point[0],
                                "kl_inference": self.infer_minus.divergence_value,
                                "kl_p_q": kl(self.target, self.infer_minus.fitted)},
        }


def bimodal_target(separation=3.0, component_variance=1.0):
    return Mixture1D([0.5, 0.5], (Gaussian1D(-separation, component_variance),
                                  Gaussian1D(separation, component_variance)))


def figure1_demo(separation=3.0, component_variance=1.0, n_plot=401):
    """Fit one Gaussian to ``0.5 N(-sep, v) + 0.5 N(sep, v)`` in both KL directions.

    The inference fit starts at ``+sep/2`` and ``-sep/2``; the ``q_infer``
    column shows the ``+sep/2`` run.
    """
    if separation < 0 or not component_variance > 0:
        raise ValueError("separation must be >= 0 and component_variance > 0")
    p = bimodal_target(separation, component_variance)
    family = ParametricFamily.gaussian()
    approx = fit(p, family, APPROXIMATION)
    lv = math.log(component_variance)
    plus = fit(p, family, INFERENCE, init=[separation / 2.0, lv])
    minus = fit(p, family, INFERENCE, init=[-separation / 2.0, lv])
    half = separation + 6.0 * math.sqrt(component_variance)
    s = np.linspace(-half, half, n_plot)
    return Figure1Result(p, s, p.pdf(s), approx.fitted.pdf(s), plus.fitted.pdf(s),
                         approx, plus, minus, kl(p, approx.fitted), kl(p, plus.fitted))
