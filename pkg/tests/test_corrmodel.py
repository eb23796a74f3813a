# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ispdcorr.errors import DomainError
from ispdcorr.models.corrmodel import (
    THETA_2017,
    ModelKind,
    ModelTheta,
    SizeContext,
    delta_alpha,
    link_curvature,
    linpred_from_rho,
    rho_d,
    rho_from_linpred,
    sigma_d,
)


def test_published_2017_values():
    r"""Correlation and spread at the extremes of the 2017 size range."""
    ctx = SizeContext(np.array([24, 464]), 464)
    rho = rho_d(THETA_2017, ctx)
    sigma = sigma_d(THETA_2017, ctx)

    assert rho[0] == pytest.approx(0.075686, abs=1e-5)
    assert sigma[0] == pytest.approx(1.6555, abs=1e-4)
    assert rho[1] == pytest.approx(0.013726, abs=1e-5)


def test_null_model_has_unit_spread():
    ctx = SizeContext(np.arange(2, 465), 464)
    assert_allclose(rho_d(ModelTheta(0.0, 0.0), ctx), 0.0, atol=1e-16)
    assert_allclose(sigma_d(ModelTheta(0.0, 0.0), ctx), 1.0, atol=1e-15)


def test_link_round_trip():
    rho = np.linspace(-1.0 / 464 + 1e-6, 0.99, 50)
    again = rho_from_linpred(linpred_from_rho(rho, 464), 464)
    assert_allclose(again, rho, rtol=1e-9, atol=1e-14)


def test_link_saturates_without_overflow():
    assert rho_from_linpred(1e6, 100) == pytest.approx(1.0)
    assert rho_from_linpred(-1e6, 100) == pytest.approx(-0.01)
    assert np.isfinite(delta_alpha(ModelTheta(1e6, 0.0), SizeContext(10, 100)))


def test_delta_alpha_is_the_derivative():
    ctx = SizeContext(np.array([24, 120, 464]), 464)
    theta = ModelTheta(3.0, -0.002)
    h = 1e-6
    numeric = (
        rho_d(ModelTheta(theta.alpha + h, theta.beta), ctx)
        - rho_d(ModelTheta(theta.alpha - h, theta.beta), ctx)
    ) / (2 * h)
    assert_allclose(delta_alpha(theta, ctx), numeric, rtol=1e-7)

    numeric_log = (
        np.log(delta_alpha(ModelTheta(theta.alpha + h, theta.beta), ctx))
        - np.log(delta_alpha(ModelTheta(theta.alpha - h, theta.beta), ctx))
    ) / (2 * h)
    assert_allclose(link_curvature(theta, ctx), numeric_log, rtol=1e-6, atol=1e-9)


def test_models_are_nested():
    theta = ModelTheta(2.0, -0.01)
    assert ModelKind.FCM.constrain(theta) == theta
    assert ModelKind.CCM.constrain(theta) == ModelTheta(2.0, 0.0)
    assert ModelKind.NCM.constrain(theta) == ModelTheta(0.0, 0.0)
    assert [k.free_params for k in ModelKind] == [2, 1, 0]


def test_parse_theta():
    assert ModelTheta.parse("3.752,-0.00376") == THETA_2017
    for text in ("3.7", "a,b", "1,2,3", "nan,0"):
        with pytest.raises(DomainError):
            ModelTheta.parse(text)


def test_size_context_bounds():
    with pytest.raises(DomainError):
        SizeContext(np.array([1, 10]), 10)
    with pytest.raises(DomainError):
        SizeContext(np.array([5, 11]), 10)
