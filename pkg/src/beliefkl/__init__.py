"""Optimal approximation of beliefs by minimizing KL(p, q), with checks of
the locality and properness axioms that make the log loss unique."""

__version__ = "0.1.0"

from .densities import (  # noqa: F401
    AffineMap,
    Categorical,
    Gaussian1D,
    GridDensity,
    Mixture1D,
    ReferenceMeasure,
    discretize,
    moments,
    pdf,
    pushforward_affine,
    split_event,
)
from .scoring import (  # noqa: F401
    DiscreteJoint,
    GeneralScore,
    LocalLoss,
    cross_entropy_m,
    elbo_decomposition,
    expected_local_loss,
    kl,
    redundancy,
)
from .estimators import EstimationLoss, estimate, expected_estimation_loss  # noqa: F401
from .approximators import FitReport, ParametricFamily, figure1_demo, fit, moment_match_gaussian  # noqa: F401
