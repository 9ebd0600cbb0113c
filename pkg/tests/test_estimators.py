"""Closed-form, multivariate and Bayes degree estimators."""
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degest.estimators import (
    PriorSupportError,
    bayes_estimate,
    bayes_estimates,
    bayes_poisson_closed_form,
    empirical_bayes_estimate,
    estimate_lambda_hat,
    make_estimator,
    mme,
    multivariate_risk_minimizer,
    optimal_univariate_coefficient,
    plug_in_mrm,
    posterior_sums,
    univariate_plugin,
    univariate_risk_minimizer,
)
from degest.graph import generate_er
from degest.priors import (
    BinomialKernel,
    PoissonPrior,
    PowerLawPrior,
    SamplingKernel,
    point_mass,
    uniform_prior,
)
from degest.risk import eb_approximation_check, perturb_prior
from degest.sampling import induced_subgraph, induced_subgraph_sample

from conftest import complete_graph, random_graph


def explicit_inverse_mrm(d_star, D, p):
    """Oracle: the plug-in formula with a literal matrix inverse on the non-isolated block."""
    d = np.asarray(d_star, dtype=float)
    out = d ** 2 / (p * (d + 1 - p)) + (1 - p) / p
    a = np.flatnonzero(d > 0)
    if len(a):
        da = d[a]
        M = np.outer(da, da) + np.asarray(D, dtype=float)[np.ix_(a, a)]
        out[a] = np.outer(da, da) @ np.linalg.inv(M) @ da / p
    return out


class TestClosedForms:
    def test_mme(self):
        np.testing.assert_array_equal(mme([2, 0, 5], 0.5).values, [4, 0, 10])
        np.testing.assert_array_equal(mme([3, 1], 1.0).values, [3, 1])
        with pytest.raises(ValueError):
            mme([1], 0.0)

    def test_urm_examples(self):
        assert univariate_risk_minimizer([0], 0.5).values[0] == pytest.approx(1.0)
        assert univariate_risk_minimizer([5], 0.5).values[0] == pytest.approx(25 / 2.75 + 1)
        assert univariate_risk_minimizer([7], 1.0).values[0] == pytest.approx(7.0)
        with pytest.raises(ValueError):
            univariate_risk_minimizer([1], 0.0)

    def test_plugin_is_urm_without_correction(self):
        d = np.arange(0, 20)
        diff = univariate_risk_minimizer(d, 0.3).values - univariate_plugin(d, 0.3).values
        np.testing.assert_allclose(diff, 0.7 / 0.3)

    def test_optimal_coefficient(self):
        assert optimal_univariate_coefficient(9, 0.5) == pytest.approx(1.8)
        assert optimal_univariate_coefficient(12, 1.0) == pytest.approx(1.0)
        # the gap to the 1/p limit is exactly 4 (1-p) / (p d0 + 1 - p)
        gap = 4 - optimal_univariate_coefficient(10**6, 0.25)
        assert gap == pytest.approx(3 / 250_000.75, rel=1e-9)
        assert 4 - optimal_univariate_coefficient(10**7, 0.25) < 1e-5

    @settings(max_examples=200)
    @given(d=st.integers(0, 10_000), num=st.integers(1, 99))
    def test_urm_minus_mme_identity(self, d, num):
        p = Fraction(num, 100)
        urm = d * d / (p * (d + 1 - p)) + (1 - p) / p
        identity = (1 - p) ** 2 / (p * (d + 1 - p))
        assert urm - d / p == identity > 0

        pf = num / 100
        diff = univariate_risk_minimizer([d], pf).values[0] - mme([d], pf).values[0]
        # subtracting two values of size d/p costs a few ulps of d/p
        assert diff > 0
        assert abs(diff - float(identity)) <= 8 * np.finfo(float).eps * (d / pf + 1)


class TestMultivariate:
    def test_scalar_case(self):
        est = plug_in_mrm([3], [[3]], 0.5)
        assert est.values[0] == pytest.approx(4.5)

    def test_full_k3(self):
        s = induced_subgraph_sample(complete_graph(3), 1.0, seed=0)
        np.testing.assert_allclose(multivariate_risk_minimizer(s).values, [1.5, 1.5, 1.5])

    def test_all_isolated_falls_back(self):
        s = induced_subgraph(complete_graph(4), np.array([True, False, False, False]), 0.25)
        out = multivariate_risk_minimizer(s)
        np.testing.assert_allclose(out.values, [3.0])
        assert out.warning is None

    def test_singular_consistent_system(self):
        # two isolated edges: the rank-one term plus D is singular but d is in range
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            out = plug_in_mrm([1, 1], [[0, 0], [0, 0]], 0.5)
        assert "least squares" in out.warning
        np.testing.assert_allclose(out.values, [2.0, 2.0])

    def test_inconsistent_system_falls_back_everywhere(self):
        out = plug_in_mrm([1, 2], [[0, -1], [-1, -3]], 0.5)
        assert "fell back" in out.warning
        np.testing.assert_allclose(out.values, univariate_risk_minimizer([1, 2], 0.5).values)

    def test_solve_matches_explicit_inverse(self):
        rng = np.random.default_rng(77)
        checked = 0
        while checked < 50:
            g = random_graph(rng, int(rng.integers(10, 60)), float(rng.uniform(0.05, 0.4)))
            s = induced_subgraph_sample(g, float(rng.uniform(0.2, 0.6)), int(rng.integers(2**31)))
            if not 1 <= s.n <= 30:
                continue
            a = s.d_star > 0
            M = np.outer(s.d_star[a], s.d_star[a]) + s.common_neighbors[np.ix_(a, a)]
            if a.any() and np.linalg.cond(M) > 1e10:
                # a literal inverse only exists for nonsingular systems
                continue
            got = multivariate_risk_minimizer(s).values
            want = explicit_inverse_mrm(s.d_star, s.common_neighbors, s.p)
            np.testing.assert_allclose(got, want, rtol=1e-8)
            checked += 1

    def test_matches_scaled_mme_when_adjacency_invertible(self):
        # with A invertible, d^T (A^2)^-1 d = n, so MRM = n/(n+1) * MME
        s = induced_subgraph_sample(complete_graph(5), 1.0, seed=0)
        n = s.n
        np.testing.assert_allclose(multivariate_risk_minimizer(s).values,
                                   n / (n + 1) * mme(s.d_star, 1.0).values)


class TestBayes:
    def test_point_mass(self):
        assert bayes_estimate(3, 0.3, point_mass(10)) == pytest.approx(10.0)

    def test_uniform_two_terms(self):
        assert bayes_estimate(1, 0.5, uniform_prior(0, 2)) == pytest.approx(1.5)

    def test_poisson_matches_closed_form(self):
        assert abs(bayes_estimate(4, 0.2, PoissonPrior(10.0)) - 12.0) < 1e-9
        assert bayes_poisson_closed_form(4, 0.2, 10.0) == pytest.approx(12.0)
        assert bayes_poisson_closed_form(6, 1.0, 3.0) == 6
        assert bayes_poisson_closed_form(6, 0.4, 0.0) == 6

    def test_support_conflict(self):
        with pytest.raises(PriorSupportError, match="3"):
            bayes_estimate(3, 0.5, point_mass(2))

    def test_large_observed_degree_is_stable(self):
        got = bayes_estimate(2000, 0.5, PoissonPrior(3000.0))
        assert got == pytest.approx(2000 + 1500, rel=1e-9)

    def test_truncation_and_cap_are_reported(self):
        tail = posterior_sums(4, 0.2, PoissonPrior(10.0))
        assert tail.stop == "tail" and tail.last > 4
        capped = posterior_sums(4, 0.2, PoissonPrior(10.0), N=20)
        assert capped.stop == "cap" and capped.last == 19
        assert posterior_sums(1, 0.5, uniform_prior(0, 2)).stop == "support"

    @pytest.mark.parametrize("prior", [PoissonPrior(8.0), uniform_prior(0, 40), PowerLawPrior(2.0, 1, 200)])
    def test_monotone_in_observed_degree(self, prior):
        ks = np.arange(0, 40)
        est = bayes_estimates(ks, 0.3, prior)
        assert np.all(np.diff(est) >= -1e-12)

    def test_vectorised_matches_scalar(self):
        ks = np.array([5, 0, 5, 3])
        prior = PowerLawPrior(2.5, 1, 100)
        want = [bayes_estimate(int(k), 0.25, prior) for k in ks]
        np.testing.assert_allclose(bayes_estimates(ks, 0.25, prior), want, rtol=0, atol=0)


class HalvedKernel(SamplingKernel):
    """Binomial thinning at p/2, written independently of BinomialKernel."""

    def __init__(self, p):
        self.q = p / 2

    def log_pmf(self, k, d):
        d = np.asarray(d, dtype=float)
        out = np.full(d.shape, -np.inf)
        for idx, dv in np.ndenumerate(d):
            if dv >= k:
                out[idx] = (math.log(math.comb(int(dv), k)) + k * math.log(self.q)
                            + (dv - k) * math.log(1 - self.q))
        return out


class TestEmpiricalBayes:
    def test_true_prior_reproduces_bayes(self):
        prior = PowerLawPrior(2.0, 1, 50)
        for k in range(10):
            assert empirical_bayes_estimate(k, 0.4, prior) == bayes_estimate(k, 0.4, prior)

    def test_lambda_hat_plug_in(self):
        g = generate_er(400, 0.05, seed=8)
        s = induced_subgraph_sample(g, 0.3, seed=2)
        lam = estimate_lambda_hat(s)
        for k in range(0, 25, 3):
            got = empirical_bayes_estimate(k, 0.3, PoissonPrior(lam))
            assert abs(got - (k + lam * 0.7)) / (k + lam * 0.7) < 1e-9

    def test_generic_kernel(self):
        # a kernel thinning at p/2 must give the Poisson closed form at p/2
        p, lam = 0.6, 7.0
        for k in range(6):
            got = empirical_bayes_estimate(k, p, PoissonPrior(lam), kernel=HalvedKernel(p))
            assert got == pytest.approx(k + lam * (1 - p / 2), rel=1e-9)
        assert empirical_bayes_estimate(2, p, PoissonPrior(lam), kernel=BinomialKernel(p)) \
            == pytest.approx(2 + lam * (1 - p), rel=1e-9)

    def test_small_perturbation_obeys_ratio_bound(self):
        prior = PoissonPrior(5.0)
        res = eb_approximation_check(prior, perturb_prior(prior, 1e-6), 1e-6, 2, 0.3)
        assert res.relative_change < res.relative_bound


class TestLambdaHat:
    def test_complete_sample(self):
        s = induced_subgraph_sample(complete_graph(10), 1.0, seed=0)
        assert estimate_lambda_hat(s, N=100) == pytest.approx(100.0)

    def test_empty_sample_edges(self):
        g = generate_er(10, 0.0, seed=0)
        assert estimate_lambda_hat(induced_subgraph_sample(g, 1.0, seed=0)) == 0.0

    def test_needs_two_nodes(self):
        s = induced_subgraph(complete_graph(3), np.array([True, False, False]), 0.3)
        with pytest.raises(ValueError):
            estimate_lambda_hat(s)

    def test_concentration(self):
        g = generate_er(2000, 0.05, seed=13)
        close = 0
        for seed in range(100):
            lam = estimate_lambda_hat(induced_subgraph_sample(g, 0.3, seed))
            close += abs(lam - 100) <= 10
        assert close >= 95


ALL_ESTIMATORS = [
    make_estimator("mme"),
    make_estimator("urm"),
    make_estimator("urm_plugin"),
    make_estimator("mrm"),
    make_estimator("eb_poisson"),
    make_estimator("bayes", PoissonPrior(4.0)),
    make_estimator("bayes", uniform_prior(0, 60)),
]


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), data=st.data())
def test_permutation_equivariance(seed, data):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, 30, 0.15)
    s = induced_subgraph_sample(g, 0.6, seed)
    order = np.array(data.draw(st.permutations(range(s.n))), dtype=np.int64)
    t = s.permuted(order)
    for est in ALL_ESTIMATORS:
        np.testing.assert_allclose(est(t), est(s)[order], rtol=1e-10, atol=1e-12)


def test_make_estimator_errors():
    with pytest.raises(ValueError, match="prior"):
        make_estimator("bayes")
    with pytest.raises(ValueError, match="unknown"):
        make_estimator("mle")
