"""Numerical checks of the axioms that single out the log loss.

Locality plus properness (under every reference measure) force a local
loss of the form ``L(x) = -C ln x + D``; adding zero loss for the true
belief turns the expected loss into KL(p, q). Each check below tests one
link of that chain on concrete instances. Losses are black boxes: every
derivative is a central difference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .densities import (
    Categorical,
    GridDensity,
    ReferenceMeasure,
    default_window,
    discretize,
    split_event,
)
from .scoring import (
    BRIER_SCORE,
    LINEAR_SCORE,
    LOG_LOSS,
    LOG_SCORE,
    LOSS_ZOO,
    GeneralScore,
    LocalLoss,
    cross_entropy_m,
    expected_local_loss,
    kl,
)

DERIV_STEP = 1e-6
LOCALITY_TOL = 1e-10
SPLIT_TOL = 1e-12
CRITERION3_TOL = 1e-12
GRID_CRITERION3_TOL = 1e-5
SHAPE_SPREAD_RTOL = 1e-4
SHAPE_RESIDUAL_TOL = 1e-6


def central_derivative(fn, x, rel_step=DERIV_STEP):
    x = np.asarray(x, dtype=float)
    h = rel_step * x
    return (np.asarray(fn(x + h), dtype=float) - np.asarray(fn(x - h), dtype=float)) / (2.0 * h)


def simplex_grid(k, n):
    """All points of the ``k``-outcome simplex with coordinates in multiples of ``1/n``.

    Stars and bars: each choice of ``k - 1`` bar positions among
    ``n + k - 1`` slots is one composition of ``n``.
    """
    if k == 1:
        return np.ones((1, 1))
    bars = np.array(list(combinations(range(n + k - 1), k - 1)), dtype=np.int64)
    edges = np.hstack([np.full((len(bars), 1), -1), bars, np.full((len(bars), 1), n + k - 1)])
    counts = np.diff(edges, axis=1) - 1
    return counts / float(n)


@dataclass(frozen=True)
class PropernessReport:
    tested_p: Categorical
    argmin_q: Categorical
    distance_to_p: float
    grid_resolution: float
    is_proper_at_resolution: bool
    lagrange_residual: Optional[float]
    expected_loss_at_p: float
    expected_loss_at_argmin: float


def _as_score(loss, m):
    if isinstance(loss, LocalLoss):
        return loss.lift(m)
    if isinstance(loss, GeneralScore):
        return loss
    raise TypeError("loss: expected a LocalLoss or GeneralScore")


def expected_score(score, q, p):
    """Expected loss ``sum_s0 p(s0) score(q, s0)`` for each row of ``q``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        total = 0.0
        for s0, w in enumerate(p):
            if w > 0:
                total = total + w * np.asarray(score(q, s0), dtype=float)
    return total


def lagrange_residual(loss, p, m=None):
    """Smallest possible max deviation of ``x L'(x)`` at ``x = p(s)/m(s)`` from one constant.

    Properness needs the gradient of the expected loss at ``q = p``,
    ``p(s) L'(p(s)/m(s)) / m(s)``, to be the same for every outcome.
    """
    m = m if m is not None else ReferenceMeasure.uniform()
    pw = p.weights if isinstance(p, Categorical) else np.asarray(p, dtype=float)
    x = pw / m.values_for(pw.size)
    g = x * central_derivative(loss, x)
    if not np.all(np.isfinite(g)):
        raise ValueError(f"loss {loss.name!r}: non-finite derivative at q = p")
    return 0.5 * float(g.max() - g.min())


def check_properness(loss, p, m=None, grid_n=200):
    """Exhaustive simplex-grid search for the report that minimizes expected loss.

    ``distance_to_p`` is Euclidean; one lattice move (``1/grid_n`` of mass
    between two outcomes) has length ``sqrt(2)/grid_n``, which is the
    resolution the verdict is judged at.
    """
    m = m if m is not None else ReferenceMeasure.uniform()
    if np.any(p.weights <= 0):
        raise ValueError("p: properness is checked at strictly positive beliefs")
    if grid_n < 11:
        raise ValueError("grid_n: need at least 11 subdivisions")
    score = _as_score(loss, m)
    q = simplex_grid(p.size, grid_n)
    values = expected_score(score, q, p.weights)
    if np.any(np.isnan(values)):
        raise ValueError(f"loss {score.name!r} undefined on part of the simplex grid")
    best = int(np.argmin(values))
    q_best = q[best]
    distance = float(np.linalg.norm(q_best - p.weights))
    resolution = math.sqrt(2.0) / grid_n
    residual = lagrange_residual(loss, p, m) if isinstance(loss, LocalLoss) else None
    at_p = float(expected_score(score, p.weights[None, :], p.weights)[0])
    return PropernessReport(p, Categorical(q_best), distance, resolution, distance <= resolution,
                            residual, at_p, float(values[best]))


@dataclass(frozen=True)
class LocalityReport:
    is_local: bool
    trials: int
    witness: Optional[dict] = None


def check_locality(score, outcome_count, trials=100, seed=0):
    """Probe whether ``score(q, s0)`` ignores ``q`` away from ``s0``.

    Off-outcome entries of ``q`` are rescaled by random positive factors
    without renormalizing. The first change larger than 1e-10 is returned
    as the witness.
    """
    if outcome_count < 3:
        raise ValueError("outcome_count: need at least 3 outcomes")
    if isinstance(score, LocalLoss):
        score = score.lift()
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        q = rng.dirichlet(np.ones(outcome_count))
        s0 = int(rng.integers(outcome_count))
        factors = rng.uniform(0.2, 5.0, size=outcome_count)
        factors[s0] = 1.0
        q2 = q * factors
        before = float(score(q, s0))
        after = float(score(q2, s0))
        if abs(after - before) > LOCALITY_TOL:
            return LocalityReport(False, trials, {
                "q": q.tolist(), "s0": s0, "perturbed_q": q2.tolist(),
                "loss_before": before, "loss_after": after,
            })
    return LocalityReport(True, trials)


@dataclass(frozen=True)
class LossShapeReport:
    sample_points: np.ndarray
    xLprime: np.ndarray
    max_spread: float
    fitted_C: float
    fitted_D: float
    residual: float
    is_log_family: bool
    c_positive: bool


def check_loss_shape(loss, x_lo=0.01, x_hi=100.0, n=64):
    """Test whether ``x L'(x)`` is constant and ``L`` fits ``-C ln x + D``.

    ``residual`` is the largest absolute least-squares residual. The family
    is confirmed when the spread of ``x L'(x)`` is below 1e-4 of its median
    magnitude and the residual is below 1e-6. ``c_positive`` records the
    sign of C separately; stationarity alone does not fix it.
    """
    if not 0 < x_lo < x_hi:
        raise ValueError("need 0 < x_lo < x_hi")
    if n < 16:
        raise ValueError("n: need at least 16 sample points")
    x = np.geomspace(x_lo, x_hi, n)
    xl = x * central_derivative(loss, x)
    if not np.all(np.isfinite(xl)):
        raise ValueError(f"loss {loss.name!r}: non-finite derivative estimate")
    spread = float(xl.max() - xl.min())
    design = np.column_stack([-np.log(x), np.ones_like(x)])
    lx = np.asarray(loss(x), dtype=float)
    (c, d), *_ = np.linalg.lstsq(design, lx, rcond=None)
    residual = float(np.max(np.abs(design @ np.array([c, d]) - lx)))
    confirmed = spread < SHAPE_SPREAD_RTOL * abs(float(np.median(xl))) and residual < SHAPE_RESIDUAL_TOL
    return LossShapeReport(x, xl, spread, float(c), float(d), residual, bool(confirmed), bool(c > 0))


@dataclass(frozen=True)
class SplittingReport:
    invariant: bool
    loss_before: float
    loss_after: float
    discrepancy: float


def check_splitting_invariance(p, q, m, loss, index, alpha, beta, measure_aware=True):
    """Split outcome ``index``: q and m by ``alpha``, p by ``beta``; compare expected losses.

    With ``measure_aware=False`` the loss sees raw ``q`` instead of ``q/m``,
    which is what breaks the invariance.
    """
    m = m if m is not None else ReferenceMeasure.uniform()
    p2 = split_event(p, index, beta)
    q2 = split_event(q, index, alpha)
    m2 = m.split(index, alpha, p.size)
    if measure_aware:
        before = expected_local_loss(p, q, m, loss)
        after = expected_local_loss(p2, q2, m2, loss)
    else:
        before = expected_local_loss(p, q, None, loss)
        after = expected_local_loss(p2, q2, None, loss)
    gap = abs(after - before)
    return SplittingReport(gap <= SPLIT_TOL, before, after, gap)


@dataclass(frozen=True)
class Criterion3Report:
    self_loss: float
    cross_entropy_at_m_p: float
    kl: float
    holds: bool


def verify_criterion3(p, q):
    """With ``m = p`` the log loss gives zero for ``q = p`` and equals KL(p, q) otherwise.

    Continuous pairs are first put on one common grid; the comparison with
    closed-form KL then holds to quadrature accuracy (1e-5) only.
    """
    tol = CRITERION3_TOL
    kl_ref = kl(p, q)
    if not isinstance(p, (Categorical, GridDensity)):
        lo, hi = default_window(p, q)
        p, q = discretize(p, lo, hi), discretize(q, lo, hi)
        tol = GRID_CRITERION3_TOL
    m = ReferenceMeasure.from_density(p)
    self_loss = expected_local_loss(p, p, m, LOG_LOSS)
    ce = cross_entropy_m(p, q, m)
    holds = abs(self_loss) <= CRITERION3_TOL and abs(ce - kl(p, q)) <= CRITERION3_TOL \
        and abs(ce - kl_ref) <= tol
    return Criterion3Report(self_loss, ce, kl_ref, bool(holds))


# ---------------------------------------------------------------------------
# suites: each returns a list of (check name, passed, detail) rows


@dataclass
class CheckRow:
    suite: str
    check: str
    passed: bool
    detail: dict = field(default_factory=dict)


def random_beliefs(rng, count, sizes=(2, 3), min_spread=0.2):
    """Strictly positive, visibly non-uniform categorical beliefs."""
    out = []
    while len(out) < count:
        k = sizes[len(out) % len(sizes)]
        w = 0.9 * rng.dirichlet(np.ones(k)) + 0.1 / k
        if w.max() - w.min() >= min_spread:
            out.append(Categorical.normalized(w))
    return out


def random_measures(rng, k, count=5):
    return [ReferenceMeasure.uniform()] + [
        ReferenceMeasure.of(rng.uniform(0.2, 5.0, size=k)) for _ in range(count)]


def zoo_properness(loss, beliefs, seed=1, grid_n=200, n_measures=5):
    """True when ``loss`` is proper for every belief under every tested measure."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in beliefs:
        for m in random_measures(rng, p.size, n_measures):
            r = check_properness(loss, p, m, grid_n)
            worst = max(worst, r.distance_to_p / r.grid_resolution)
            if not r.is_proper_at_resolution:
                return False, worst
    return True, worst


def suite_properness(seed=0, grid_n=200):
    rng = np.random.default_rng(seed)
    beliefs = random_beliefs(rng, 10)
    rows = []
    for p in beliefs:
        for j, m in enumerate(random_measures(rng, p.size)):
            r = check_properness(LOG_LOSS, p, m, grid_n)
            ok = r.is_proper_at_resolution and r.lagrange_residual < 1e-6
            rows.append(CheckRow("properness", f"log loss, p={np.round(p.weights, 3).tolist()}, m#{j}", ok,
                                 {"distance": r.distance_to_p, "resolution": r.grid_resolution,
                                  "lagrange_residual": r.lagrange_residual}))
    p = Categorical([0.3, 0.7])
    brier = check_properness(BRIER_SCORE, p, grid_n=grid_n)
    rows.append(CheckRow("properness", "brier score proper", brier.is_proper_at_resolution,
                         {"distance": brier.distance_to_p}))
    linear = check_properness(LINEAR_SCORE, p, grid_n=grid_n)
    rows.append(CheckRow("properness", "linear score improper", not linear.is_proper_at_resolution,
                         {"distance": linear.distance_to_p, "argmin": linear.argmin_q.weights.tolist()}))
    return rows


def suite_shape(seed=0, grid_n=200):
    """The zoo biconditional: proper under all measures iff in the log family."""
    rng = np.random.default_rng(seed)
    beliefs = random_beliefs(rng, 10)
    known_c = {LOSS_ZOO[0].name: 1.0, LOSS_ZOO[1].name: 2.0}
    rows = []
    for loss in LOSS_ZOO:
        shape = check_loss_shape(loss, 0.01, 100.0, 64)
        proper, worst = zoo_properness(loss, beliefs, seed=seed + 1, grid_n=grid_n)
        ok = proper == shape.is_log_family
        if loss.name in known_c:
            ok = ok and shape.is_log_family and abs(shape.fitted_C - known_c[loss.name]) < 1e-6
        rows.append(CheckRow("shape", f"{loss.name}: proper={proper}, log-family={shape.is_log_family}", ok,
                             {"fitted_C": shape.fitted_C, "fitted_D": shape.fitted_D,
                              "max_spread": shape.max_spread, "residual": shape.residual,
                              "worst_distance_in_steps": worst}))
    return rows


def suite_locality(trials=100):
    rows = []
    log_verdicts = {check_locality(LOG_SCORE, 4, seed=s).is_local for s in range(trials)}
    rows.append(CheckRow("locality", "log score local in every trial", log_verdicts == {True}))
    brier = [check_locality(BRIER_SCORE, 4, seed=s) for s in range(trials)]
    rows.append(CheckRow("locality", "brier score non-local in every trial",
                         all(not r.is_local and r.witness for r in brier), {"witness": brier[0].witness}))
    lifted = all(check_locality(loss.lift(), 4, seed=s).is_local for loss in LOSS_ZOO for s in range(10))
    rows.append(CheckRow("locality", "lifted local losses are local", lifted))
    return rows


def suite_splitting(seed=0, instances=100):
    rng = np.random.default_rng(seed)
    r = check_splitting_invariance(Categorical([0.5, 0.5]), Categorical([0.25, 0.75]), None, LOG_LOSS, 1, 0.4, 0.7)
    rows = [CheckRow("splitting", "worked example", r.invariant, {"discrepancy": r.discrepancy})]
    worst = 0.0
    for _ in range(instances):
        k = int(rng.integers(2, 6))
        p = Categorical.normalized(rng.uniform(0.05, 1.0, k))
        q = Categorical.normalized(rng.uniform(0.05, 1.0, k))
        m = ReferenceMeasure.of(rng.uniform(0.1, 3.0, k))
        loss = LOSS_ZOO[int(rng.integers(len(LOSS_ZOO)))]
        res = check_splitting_invariance(p, q, m, loss, int(rng.integers(k)),
                                         float(rng.uniform(0.05, 0.95)), float(rng.uniform(0.05, 0.95)))
        worst = max(worst, res.discrepancy)
    rows.append(CheckRow("splitting", f"{instances} random instances", worst <= SPLIT_TOL,
                         {"worst_discrepancy": worst}))
    raw = check_splitting_invariance(Categorical([0.5, 0.5]), Categorical([0.25, 0.75]), None, LOG_LOSS,
                                     1, 0.4, 0.7, measure_aware=False)
    rows.append(CheckRow("splitting", "loss of raw q is not invariant", not raw.invariant,
                         {"discrepancy": raw.discrepancy}))
    return rows


def suite_criterion3(seed=0):
    from .densities import Gaussian1D

    rows = []
    r = verify_criterion3(Categorical([0.5, 0.5]), Categorical([0.25, 0.75]))
    rows.append(CheckRow("criterion3", "categorical pair", r.holds, {"kl": r.kl}))
    rng = np.random.default_rng(seed)
    ok = True
    for _ in range(20):
        k = int(rng.integers(2, 6))
        res = verify_criterion3(Categorical.normalized(rng.uniform(0.05, 1, k)),
                                Categorical.normalized(rng.uniform(0.05, 1, k)))
        ok = ok and res.holds
    rows.append(CheckRow("criterion3", "20 random categorical pairs", ok))
    g = verify_criterion3(Gaussian1D(0.0, 1.0), Gaussian1D(1.0, 2.0))
    rows.append(CheckRow("criterion3", "gaussian pair on a common grid", g.holds,
                         {"cross_entropy": g.cross_entropy_at_m_p, "kl": g.kl}))
    return rows


SUITES = {
    "properness": suite_properness,
    "locality": suite_locality,
    "shape": suite_shape,
    "splitting": suite_splitting,
    "criterion3": suite_criterion3,
}


def run_suite(name):
    if name == "all":
        return [row for fn in SUITES.values() for row in fn()]
    if name not in SUITES:
        raise ValueError(f"suite: unknown suite {name!r}")
    return SUITES[name]()
