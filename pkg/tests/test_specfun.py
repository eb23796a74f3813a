# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ispdcorr.distributions import specfun
from ispdcorr.errors import DomainError


def test_erf_inv_inverts_erf():
    x = np.linspace(-3.0, 3.0, 61)
    assert_allclose(specfun.erf_inv(specfun.erf(x)), x, rtol=1e-10, atol=1e-12)
    assert specfun.erf_inv(0.0) == 0.0


@pytest.mark.parametrize("p", [1.0, -1.0, 1.5, np.nan])
def test_erf_inv_rejects_out_of_domain(p):
    with pytest.raises(DomainError):
        specfun.erf_inv(p)


def test_centered_erf_inv_matches_erf_inv():
    x = np.linspace(0.01, 0.99, 99)
    expected = specfun.erf_inv(2.0 * x - 1.0)
    assert_allclose(specfun.centered_erf_inv(x), expected, rtol=1e-10, atol=1e-14)


def test_centered_erf_inv_boundaries():
    assert specfun.centered_erf_inv(0.5) == 0.0
    assert specfun.centered_erf_inv(0.0) == -np.inf
    assert specfun.centered_erf_inv(1.0) == np.inf
    with pytest.raises(DomainError):
        specfun.centered_erf_inv(1.0025)


def test_normal_functions():
    assert specfun.norm_cdf(0.0) == 0.5
    assert specfun.norm_quantile(0.975) == pytest.approx(1.959964, abs=1e-6)
    assert specfun.norm_pdf(0.0) == pytest.approx(1.0 / np.sqrt(2.0 * np.pi), rel=1e-15)
    log_density = np.log(specfun.norm_pdf(1.0))
    assert specfun.norm_logpdf(1.0) == pytest.approx(log_density, rel=1e-14)
    with pytest.raises(DomainError):
        specfun.norm_quantile(0.0)


def test_owens_t_at_zero():
    assert specfun.owens_t_h0(1.0) == pytest.approx(0.125, rel=1e-15)
    assert specfun.owens_t_h0(0.0) == 0.0


def test_chi2_sf():
    assert specfun.chi2_sf(3.841459, 1) == pytest.approx(0.05, abs=1e-6)
    assert specfun.chi2_sf(0.0, 2) == 1.0
    x = np.array([0.5, 2.0, 7.0])
    assert_allclose(specfun.chi2_sf(x, 2), np.exp(-x / 2.0), rtol=1e-13)

    with pytest.raises(DomainError):
        specfun.chi2_sf(-1.0, 1)
    with pytest.raises(DomainError):
        specfun.chi2_sf(1.0, 0)
