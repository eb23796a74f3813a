# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from ispdcorr.distributions import Betoidal
from ispdcorr.distributions.specfun import norm_logpdf
from ispdcorr.errors import InputError
from ispdcorr.models.cohort import Cohort, IspdGrid, ObservationKind
from ispdcorr.models.corrmodel import THETA_2017, ModelTheta, SizeContext, sigma_d
from ispdcorr.models.likelihoods import (
    PROB_FLOOR,
    CoarseLikelihood,
    ScaledAvgLikelihood,
    TruncatedCoarseLikelihood,
    cell_prob,
    cell_prob_trunc,
    cell_probs,
    make_likelihood,
    release_probability,
)

THETA_OFF = ModelTheta(3.0, -0.003)


def numeric_score(lik, theta):
    h = np.array([1e-5 * (1.0 + abs(theta.alpha)), 1e-7])
    grad = np.zeros(2)
    for k in range(2):
        step = np.zeros(2)
        step[k] = h[k]
        up = lik.loglik(ModelTheta(*(theta.as_array() + step)))
        down = lik.loglik(ModelTheta(*(theta.as_array() - step)))
        grad[k] = (up - down) / (2 * h[k])
    return grad


def numeric_hessian(lik, theta):
    h = np.array([1e-5 * (1.0 + abs(theta.alpha)), 1e-7])
    hess = np.zeros((2, 2))
    for k in range(2):
        step = np.zeros(2)
        step[k] = h[k]
        up = lik.score(ModelTheta(*(theta.as_array() + step)))
        down = lik.score(ModelTheta(*(theta.as_array() - step)))
        hess[:, k] = (up - down) / (2 * h[k])
    return hess


def relative_error(numeric, analytic):
    return np.linalg.norm(numeric - analytic) / np.linalg.norm(analytic)


MODES = {
    "scaled_cohort": "micro",
    "coarse_cohort": "coarse",
    "truncated_cohort": "coarse-trunc",
}


@pytest.mark.parametrize("fixture", sorted(MODES))
@pytest.mark.parametrize("theta", [THETA_OFF, ModelTheta(4.2, -0.006)])
def test_derivatives_match_finite_differences(request, fixture, theta):
    r"""Analytic score and Hessian against central differences."""
    lik = make_likelihood(request.getfixturevalue(fixture), MODES[fixture])
    ev = lik.evaluate(theta)

    assert ev.loglik == lik.loglik(theta)
    assert relative_error(numeric_score(lik, theta), ev.score) < 1e-6
    assert relative_error(numeric_hessian(lik, theta), ev.hessian) < 1e-4
    assert ev.hessian[0, 1] == ev.hessian[1, 0]


def _random_thetas(count, n_max, seed):
    r"""Draws from [0, 5] x [-0.02, 0] whose link stays above -1 at ``n_max``."""
    rng = np.random.default_rng(seed)
    thetas = []
    while len(thetas) < count:
        alpha, beta = rng.uniform(0.0, 5.0), rng.uniform(-0.02, 0.0)
        if alpha + beta * n_max >= -1.0:
            thetas.append(ModelTheta(alpha, beta))
    return thetas


@pytest.mark.parametrize("fixture", sorted(MODES))
def test_derivatives_over_random_parameters(request, fixture):
    cohort = request.getfixturevalue(fixture)
    lik = make_likelihood(cohort, MODES[fixture])
    for theta in _random_thetas(10, cohort.n_max, seed=10):
        ev = lik.evaluate(theta)
        assert relative_error(numeric_score(lik, theta), ev.score) < 1e-6, theta
        assert relative_error(numeric_hessian(lik, theta), ev.hessian) < 1e-4, theta


def test_null_model_cells_are_grid_widths():
    grid = IspdGrid()
    widths = grid.upper - grid.lower
    probs = cell_probs(ModelTheta(0.0, 0.0), SizeContext(np.array([10, 200]), 464))

    assert probs.shape == (2, 201)
    assert_allclose(probs, np.broadcast_to(widths, probs.shape), atol=1e-13)
    assert widths[0] == pytest.approx(0.0025) and widths[100] == pytest.approx(0.005)


@pytest.mark.parametrize("n_d", [2, 24, 150, 464])
def test_cell_probabilities_sum_to_one(n_d):
    ctx = SizeContext(n_d, 464)
    probs = cell_prob(THETA_2017, ctx, np.arange(201))
    assert math.fsum(probs) == pytest.approx(1.0, abs=1e-12)
    assert np.all(probs > 0)

    trunc = cell_prob_trunc(THETA_2017, ctx, np.arange(146, 201), 73.0)
    assert math.fsum(trunc) == pytest.approx(1.0, abs=1e-12)


def test_cell_probabilities_sum_to_one_over_random_settings():
    rng = np.random.default_rng(50)
    for _ in range(50):
        n_max = int(rng.integers(50, 701))
        n_d = int(rng.integers(2, n_max + 1))
        theta = _random_thetas(1, n_max, seed=int(rng.integers(2 ** 31)))[0]
        ctx = SizeContext(n_d, n_max)

        probs = cell_prob(theta, ctx, np.arange(201))
        assert math.fsum(probs) == pytest.approx(1.0, abs=1e-10), (theta, ctx)
        trunc = cell_prob_trunc(theta, ctx, np.arange(146, 201), 73.0)
        assert math.fsum(trunc) == pytest.approx(1.0, abs=1e-10), (theta, ctx)


def test_cells_agree_with_betoidal_cdf():
    grid = IspdGrid()
    ctx = SizeContext(300, 464)
    dist = Betoidal(float(sigma_d(THETA_2017, ctx)))
    expected = dist.cdf(grid.upper) - dist.cdf(grid.lower)
    assert_allclose(cell_prob(THETA_2017, ctx, np.arange(201)), expected, atol=1e-14)


def test_null_truncation_matches_complete_release(coarse_cohort):
    untruncated = CoarseLikelihood(coarse_cohort)
    at_zero = Cohort(
        coarse_cohort.records,
        ObservationKind.ISPD,
        n_max=coarse_cohort.n_max,
        truncation=0.0,
    )
    truncated = TruncatedCoarseLikelihood(at_zero)

    a = untruncated.evaluate(THETA_OFF)
    b = truncated.evaluate(THETA_OFF)
    assert a.loglik == b.loglik
    assert_array_equal(a.score, b.score)
    assert_array_equal(a.hessian, b.hessian)


def test_null_model_loglik(scaled_cohort):
    lik = ScaledAvgLikelihood(scaled_cohort)
    expected = math.fsum(norm_logpdf(scaled_cohort.values))
    assert lik.loglik(ModelTheta(0.0, 0.0)) == expected


def test_order_does_not_matter(coarse_cohort):
    records = coarse_cohort.records[::-1]
    reverse = Cohort(records, ObservationKind.ISPD, n_max=coarse_cohort.n_max)
    a = CoarseLikelihood(coarse_cohort).evaluate(THETA_OFF)
    b = CoarseLikelihood(reverse).evaluate(THETA_OFF)

    assert b.loglik == pytest.approx(a.loglik, rel=1e-14)
    assert_allclose(b.score, a.score, rtol=1e-14)
    assert_allclose(b.hessian, a.hessian, rtol=1e-14)


def test_score_vanishes_at_sigma():
    r"""A department whose scaled average equals its sigma adds no score."""
    sizes = np.array([24, 100, 464])
    ctx = SizeContext(sizes, 464)
    values = sigma_d(THETA_2017, ctx)
    cohort = Cohort.from_arrays(sizes, values, ObservationKind.SCALED_AVG)
    assert_allclose(ScaledAvgLikelihood(cohort).score(THETA_2017), 0.0, atol=1e-10)


def test_vanishing_cells_are_floored():
    cohort = Cohort.from_arrays([464], [100.0], ObservationKind.ISPD, n_max=464)
    ev = CoarseLikelihood(cohort).evaluate(ModelTheta(-20.0, 0.0))

    assert ev.floored == ("D0000",)
    assert ev.loglik == pytest.approx(math.log(PROB_FLOOR))
    assert np.all(np.isfinite(ev.score)) and np.all(np.isfinite(ev.hessian))


def test_release_probability():
    ctx = SizeContext(50, 464)
    p_release = release_probability(ModelTheta(0.0, 0.0), ctx, 73.0)
    assert p_release == pytest.approx(0.2725, abs=1e-14)


def test_likelihood_selection(scaled_cohort, coarse_cohort, truncated_cohort):
    lik = make_likelihood(truncated_cohort, "coarse-trunc")
    assert isinstance(lik, TruncatedCoarseLikelihood)

    with pytest.raises(InputError):
        make_likelihood(scaled_cohort, "exact")
    with pytest.raises(InputError):
        make_likelihood(scaled_cohort, "coarse")
    with pytest.raises(InputError):
        make_likelihood(coarse_cohort, "micro")
    with pytest.raises(InputError):
        make_likelihood(truncated_cohort, "coarse")
    with pytest.raises(InputError):
        make_likelihood(coarse_cohort, "coarse-trunc")


def test_simulated_truncated_release(truncated_cohort):
    assert truncated_cohort.truncation == 73.0
    assert np.all(truncated_cohort.values >= 73.0)
    assert truncated_cohort.n_max == 615
