import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from beliefkl.densities import (
    AffineMap,
    Categorical,
    Gaussian1D,
    Mixture1D,
    ReferenceMeasure,
    discretize,
    pushforward_affine,
    split_event,
)
from beliefkl.scoring import (
    LOG_LOSS,
    SCALED_LOG_LOSS,
    DiscreteJoint,
    LocalLoss,
    cross_entropy_m,
    elbo_decomposition,
    entropy,
    expected_local_loss,
    kl,
    quadrature_kl,
    redundancy,
)

P = Categorical([0.5, 0.5])
Q = Categorical([0.25, 0.75])

positive_vectors = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6)


def quad_kl(p, q):
    """Adaptive-quadrature KL, independent of the Simpson path."""
    lo, hi = p.window()
    val, _ = integrate.quad(lambda s: p.pdf(s) * (p.logpdf(s) - q.logpdf(s)), lo, hi,
                            limit=400, epsabs=1e-13, epsrel=1e-12)
    return val


class TestKL:
    def test_identity(self):
        for d in [P, Q, Gaussian1D(1, 3), Mixture1D([0.3, 0.7], (Gaussian1D(0, 1), Gaussian1D(4, 2)))]:
            assert kl(d, d) == pytest.approx(0.0, abs=1e-15)

    def test_two_outcomes(self):
        expected = 0.5 * math.log(0.5 / 0.25) + 0.5 * math.log(0.5 / 0.75)
        assert kl(P, Q) == pytest.approx(expected, abs=1e-15)
        assert kl(P, Q) == pytest.approx(0.143841, abs=1e-6)

    def test_gaussian_closed_form(self):
        assert kl(Gaussian1D(0, 1), Gaussian1D(1, 1)) == pytest.approx(0.5, abs=1e-15)
        assert quad_kl(Gaussian1D(0, 1), Gaussian1D(1, 1)) == pytest.approx(0.5, abs=1e-6)

    def test_infinite_when_q_vanishes(self):
        assert kl(P, Categorical([1.0, 0.0])) == math.inf

    def test_zero_p_terms_vanish(self):
        assert kl(Categorical([1.0, 0.0]), P) == pytest.approx(math.log(2.0))

    def test_mismatched_spaces(self):
        with pytest.raises(ValueError):
            kl(P, Categorical([0.2, 0.3, 0.5]))
        with pytest.raises(ValueError):
            kl(P, Gaussian1D(0, 1))

    def test_grids_must_match(self):
        a = discretize(Gaussian1D(0, 1), -8, 8, 1001)
        b = discretize(Gaussian1D(0, 1), -8, 8, 1025)
        with pytest.raises(ValueError, match="identical grid"):
            kl(a, b)

    def test_closed_form_vs_quadrature_random_pairs(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            p = Gaussian1D(rng.uniform(-5, 5), rng.uniform(0.1, 10))
            q = Gaussian1D(rng.uniform(-5, 5), rng.uniform(0.1, 10))
            assert quadrature_kl(p, q) == pytest.approx(kl(p, q), abs=1e-6)
            assert quad_kl(p, q) == pytest.approx(kl(p, q), abs=1e-6)

    def test_far_tail_of_q_stays_finite(self):
        # q's density underflows inside p's window; the log-space integrand does not
        p, q = Gaussian1D(0.86, 7.2), Gaussian1D(-4.3, 0.366)
        assert float(q.pdf(p.window()[1])) == 0.0
        assert quadrature_kl(p, q) == pytest.approx(kl(p, q), abs=1e-6)

    def test_mixture_vs_adaptive_quadrature(self):
        p = Mixture1D([0.5, 0.5], (Gaussian1D(-3, 1), Gaussian1D(3, 1)))
        q = Gaussian1D(0.0, 10.0)
        assert kl(p, q) == pytest.approx(quad_kl(p, q), abs=1e-9)

    @settings(max_examples=200, deadline=None)
    @given(a=positive_vectors, b=positive_vectors)
    def test_gibbs(self, a, b):
        k = min(len(a), len(b))
        p, q = Categorical.normalized(a[:k]), Categorical.normalized(b[:k])
        d = kl(p, q)
        assert d >= -1e-15
        if np.max(np.abs(p.weights - q.weights)) < 1e-12:
            assert d == pytest.approx(0.0, abs=1e-12)
        else:
            assert d > 0


class TestCrossEntropy:
    def test_two_outcomes(self):
        expected = -0.5 * math.log(0.25) - 0.5 * math.log(0.75)
        assert cross_entropy_m(P, Q) == pytest.approx(expected, abs=1e-15)
        assert expected == pytest.approx(0.836988, abs=1e-6)

    def test_entropy_of_uniform(self):
        u = Categorical([0.25] * 4)
        assert entropy(u) == pytest.approx(math.log(4), abs=1e-15)

    def test_m_equal_p_gives_kl(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            k = int(rng.integers(2, 7))
            p = Categorical.normalized(rng.uniform(0.01, 1, k))
            q = Categorical.normalized(rng.uniform(0.01, 1, k))
            assert cross_entropy_m(p, q, ReferenceMeasure.from_density(p)) == pytest.approx(kl(p, q), abs=1e-12)

    def test_measure_zero_where_q_positive(self):
        with pytest.raises(ValueError):
            cross_entropy_m(P, Q, ReferenceMeasure.of([1.0, 0.0]))

    def test_gaussian_differential_cross_entropy(self):
        # -E_p[ln q] for p = N(0,1), q = N(1,2): 0.5 ln(2 pi 2) + (1 + 1) / (2 * 2)
        expected = 0.5 * math.log(4 * math.pi) + 0.5
        assert cross_entropy_m(Gaussian1D(0, 1), Gaussian1D(1, 2)) == pytest.approx(expected, abs=1e-10)


class TestExpectedLocalLoss:
    def test_log_loss_is_cross_entropy(self):
        m = ReferenceMeasure.of([0.3, 2.0])
        assert expected_local_loss(P, Q, m, LOG_LOSS) == pytest.approx(cross_entropy_m(P, Q, m), abs=1e-15)

    def test_affine_log_family(self):
        m = ReferenceMeasure.of([0.7, 1.1])
        assert expected_local_loss(P, Q, m, SCALED_LOG_LOSS) == pytest.approx(
            2 * cross_entropy_m(P, Q, m) + 5, abs=1e-14)

    def test_identity_ratio(self):
        u = Categorical([0.5, 0.5])
        m = ReferenceMeasure.of([0.5, 0.5])
        assert expected_local_loss(u, u, m, LocalLoss("x", lambda x: x)) == pytest.approx(1.0)

    def test_nonpositive_ratio(self):
        with pytest.raises(ValueError):
            expected_local_loss(P, Categorical([1.0, 0.0]), None, LOG_LOSS)

    def test_continuous_against_adaptive_quadrature(self):
        p, q = Gaussian1D(0.5, 1.5), Gaussian1D(-1, 3)
        loss = LocalLoss("sqrt", np.sqrt)
        lo, hi = p.window()
        oracle, _ = integrate.quad(lambda s: np.sqrt(q.pdf(s)) * p.pdf(s), lo, hi, epsabs=1e-13)
        assert expected_local_loss(p, q, None, loss) == pytest.approx(oracle, abs=1e-10)


class TestRedundancy:
    def test_self(self):
        assert redundancy(P, P) == 0.0

    def test_equals_kl(self):
        assert redundancy(P, Q) == pytest.approx(kl(P, Q), abs=1e-15)

    def test_skewed(self):
        p, q = Categorical([0.9, 0.1]), Categorical([0.5, 0.5])
        expected = 0.9 * math.log(1.8) + 0.1 * math.log(0.2)
        assert redundancy(p, q) == pytest.approx(expected, abs=1e-15)
        assert expected == pytest.approx(0.368064, abs=1e-6)

    @settings(max_examples=200, deadline=None)
    @given(a=positive_vectors, b=positive_vectors)
    def test_identity(self, a, b):
        k = min(len(a), len(b))
        p, q = Categorical.normalized(a[:k]), Categorical.normalized(b[:k])
        assert abs(redundancy(p, q) - kl(p, q)) <= 1e-12


class TestElbo:
    def test_exact_posterior(self):
        joint = DiscreteJoint([[0.1, 0.2], [0.3, 0.4]])
        r = elbo_decomposition(joint, 0, joint.posterior(0))
        assert r.kl_to_posterior == pytest.approx(0.0, abs=1e-15)
        assert r.elbo == pytest.approx(r.log_evidence, abs=1e-15)

    def test_enumerated_example(self):
        joint = DiscreteJoint([[0.1, 0.2], [0.3, 0.4]])
        r = elbo_decomposition(joint, 0, Categorical([0.5, 0.5]))
        assert r.log_evidence == pytest.approx(math.log(0.3), abs=1e-15)
        elbo = 0.5 * math.log(0.2) + 0.5 * math.log(0.4)  # = sum q ln(joint / q)
        kl_post = 0.5 * math.log(0.5 / (1 / 3)) + 0.5 * math.log(0.5 / (2 / 3))
        assert r.elbo == pytest.approx(elbo, abs=1e-15)
        assert r.kl_to_posterior == pytest.approx(kl_post, abs=1e-15)
        assert r.elbo + r.kl_to_posterior == pytest.approx(r.log_evidence, abs=1e-12)

    def test_random_sweep(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            table = rng.uniform(0.01, 1, size=(rng.integers(1, 5), rng.integers(2, 6)))
            joint = DiscreteJoint(table / table.sum())
            d = int(rng.integers(table.shape[0]))
            q = Categorical.normalized(rng.uniform(0.01, 1, table.shape[1]))
            r = elbo_decomposition(joint, d, q)
            assert r.elbo <= r.log_evidence
            assert abs(r.elbo + r.kl_to_posterior - r.log_evidence) <= 1e-12

    def test_zero_marginal(self):
        joint = DiscreteJoint([[0.0, 0.0], [0.5, 0.5]])
        with pytest.raises(ValueError):
            elbo_decomposition(joint, 0, Categorical([0.5, 0.5]))


class TestInvariance:
    @settings(max_examples=100, deadline=None)
    @given(a=st.floats(-4, 4).filter(lambda a: abs(a) > 0.05), b=st.floats(-10, 10),
           m1=st.floats(-5, 5), v1=st.floats(0.1, 10), m2=st.floats(-5, 5), v2=st.floats(0.1, 10))
    def test_affine_closed_form(self, a, b, m1, v1, m2, v2):
        p, q, u = Gaussian1D(m1, v1), Gaussian1D(m2, v2), AffineMap(a, b)
        assert kl(pushforward_affine(p, u), pushforward_affine(q, u)) == pytest.approx(kl(p, q), abs=1e-9)

    def test_affine_grid(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            p = Mixture1D([0.4, 0.6], (Gaussian1D(rng.uniform(-2, 0), 1.0), Gaussian1D(rng.uniform(0, 2), 0.5)))
            q = Gaussian1D(rng.uniform(-1, 1), rng.uniform(1, 4))
            lo, hi = -15.0, 15.0
            gp, gq = discretize(p, lo, hi, 2049), discretize(q, lo, hi, 2049)
            u = AffineMap(rng.choice([-1, 1]) * rng.uniform(0.2, 5), rng.uniform(-10, 10))
            assert kl(pushforward_affine(gp, u), pushforward_affine(gq, u)) == pytest.approx(kl(gp, gq), abs=1e-5)

    def test_event_splitting(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            k = int(rng.integers(2, 6))
            p = Categorical.normalized(rng.uniform(0.05, 1, k))
            q = Categorical.normalized(rng.uniform(0.05, 1, k))
            m = ReferenceMeasure.of(rng.uniform(0.1, 3, k))
            i, alpha, beta = int(rng.integers(k)), rng.uniform(0.01, 0.99), rng.uniform(0.01, 0.99)
            before = expected_local_loss(p, q, m, LOG_LOSS)
            after = expected_local_loss(split_event(p, i, beta), split_event(q, i, alpha),
                                        m.split(i, alpha, k), LOG_LOSS)
            assert abs(after - before) <= 1e-12
