# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

r"""
The Betoidal distribution is the law of ``X = Phi(Z)`` with ``Z ~ N(0, sigma^2)``.
It is Uniform(0, 1) for ``sigma = 1``, U-shaped for ``sigma > 1`` and
bell-shaped for ``sigma < 1``, resembling a symmetric ``Beta(a, a)``. A
department's ``x_d = Phi(z_d)`` follows it when its scaled average has
standard deviation ``sigma_d``. The left-truncated version describes a release
of the upper tail of the index only.
"""

from typing import NamedTuple

import numpy as np
from scipy import integrate

from ispdcorr.distributions import specfun
from ispdcorr.distributions.specfun import ArrayLike
from ispdcorr.errors import DegenerateError, DomainError


def _probit(x: ArrayLike) -> ArrayLike:
    # Phi^{-1} on the closed interval, mapping {0, 1} to -inf and +inf.
    return np.sqrt(2.0) * specfun.centered_erf_inv(x)


def _check_interior(x: np.ndarray, name: str = "x"):
    if np.any(~((x > 0.0) & (x < 1.0))):
        raise DomainError(f"{name} must lie strictly inside (0, 1), got {x}")


class Betoidal(object):
    r"""
    Betoidal distribution indexed by the standard deviation of its latent
    normal variable.

    Args:
        sigma: Standard deviation of the latent ``N(0, sigma^2)``. Must be
            positive and finite.
    """

    def __init__(self, sigma: float):
        if not (np.isfinite(sigma) and sigma > 0):
            raise DomainError(f"Betoidal requires sigma > 0, got {sigma}")
        self.sigma = float(sigma)

    def __repr__(self) -> str:
        return f"Betoidal(sigma={self.sigma!r})"

    def pdf(self, x: ArrayLike) -> ArrayLike:
        r"""
        Density ``phi(Phi^{-1}(x) / sigma) / {sigma * phi(Phi^{-1}(x))}`` on the
        open unit interval. The boundaries are rejected: the density there is
        0 or infinite depending on ``sigma``.
        """
        x = np.asarray(x, dtype=np.float64)
        _check_interior(x)

        z = specfun.norm_quantile(x)
        log_density = 0.5 * z * z * (1.0 - 1.0 / self.sigma ** 2)
        return (np.exp(log_density) / self.sigma)[()]

    def cdf(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=np.float64)
        if np.any(~((x >= 0.0) & (x <= 1.0))):
            raise DomainError(f"Betoidal cdf requires 0 <= x <= 1, got {x}")
        return specfun.norm_cdf(_probit(x) / self.sigma)

    def sf(self, x: ArrayLike) -> ArrayLike:
        r"""Survival function ``1 - cdf(x)``, accurate in the upper tail."""
        x = np.asarray(x, dtype=np.float64)
        if np.any(~((x >= 0.0) & (x <= 1.0))):
            raise DomainError(f"Betoidal sf requires 0 <= x <= 1, got {x}")
        return specfun.norm_cdf(-_probit(x) / self.sigma)

    def quantile(self, q: ArrayLike) -> ArrayLike:
        q = np.asarray(q, dtype=np.float64)
        _check_interior(q, name="q")
        return specfun.norm_cdf(self.sigma * specfun.norm_quantile(q))

    @property
    def variance(self) -> float:
        return float(np.arctan(np.sqrt(1.0 + 2.0 * self.sigma ** 2)) / np.pi - 0.25)

    @property
    def variance_owens_t(self) -> float:
        r"""The variance written through Owen's T, ``{1 - 8 T(0, c)} / 4``."""
        c = 1.0 / np.sqrt(2.0 * self.sigma ** 2 + 1.0)
        return float((1.0 - 8.0 * specfun.owens_t_h0(c)) / 4.0)

    @property
    def beta_shape_equiv(self) -> float:
        r"""
        Shape ``a`` of the symmetric ``Beta(a, a)`` distribution having the same
        variance, obtained from ``1 / {4 (2a + 1)} = variance``.
        """
        return float((1.0 / (4.0 * self.variance) - 1.0) / 2.0)

    @property
    def beta_shape_equiv_owens_t(self) -> float:
        c = 1.0 / np.sqrt(2.0 * self.sigma ** 2 + 1.0)
        return float((1.0 / (1.0 - 8.0 * specfun.owens_t_h0(c)) - 1.0) / 2.0)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n < 1:
            raise DomainError(f"Sample size must be at least 1, got {n}")
        return specfun.norm_cdf(self.sigma * rng.standard_normal(n))


class LTBetoidal(object):
    r"""
    Betoidal distribution truncated below ``x_star``, with support
    ``[x_star, 1)``. Quantities are normalized by the survival factor
    ``1 - F(x_star; sigma)``.

    Args:
        sigma: Standard deviation of the latent normal variable.
        x_star: Lower truncation point in ``[0, 1)``. Zero means no truncation.
    """

    def __init__(self, sigma: float, x_star: float):
        self.parent = Betoidal(sigma)
        if not (0.0 <= x_star < 1.0):
            raise DomainError(f"Truncation point must lie in [0, 1), got {x_star}")

        self.sigma = self.parent.sigma
        self.x_star = float(x_star)

        # Survival probability of the truncation point; everything is scaled by it.
        self.survival = float(self.parent.sf(self.x_star))
        if not self.survival > 1e-300:
            raise DegenerateError(
                f"Truncation at {x_star} leaves no mass for sigma={sigma}"
            )

    def __repr__(self) -> str:
        return f"LTBetoidal(sigma={self.sigma!r}, x_star={self.x_star!r})"

    def _check_support(self, x: np.ndarray):
        if np.any(~((x >= self.x_star) & (x <= 1.0))):
            raise DomainError(f"x must lie in [{self.x_star}, 1], got {x}")

    def pdf(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=np.float64)
        self._check_support(x)
        return self.parent.pdf(x) / self.survival

    def cdf(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=np.float64)
        self._check_support(x)
        return (1.0 - self.parent.sf(x) / self.survival)[()]

    def quantile(self, q: ArrayLike) -> ArrayLike:
        q = np.asarray(q, dtype=np.float64)
        _check_interior(q, name="q")
        return self._ppf(q)

    def _ppf(self, q: np.ndarray) -> np.ndarray:
        # Solve sf(x) = (1 - q) * survival, working from the upper tail.
        tail = (1.0 - q) * self.survival
        return specfun.norm_cdf(-self.sigma * _probit(tail))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n < 1:
            raise DomainError(f"Sample size must be at least 1, got {n}")
        return self._ppf(rng.uniform(size=n))

    def _expect(self, func) -> float:
        # Integrate on the latent normal scale, where the integrand is smooth.
        z_star = -np.inf
        if self.x_star > 0.0:
            z_star = specfun.norm_quantile(self.x_star) / self.sigma

        def integrand(z):
            return func(specfun.norm_cdf(self.sigma * z)) * specfun.norm_pdf(z)

        value, _ = integrate.quad(integrand, z_star, np.inf)
        return value / self.survival

    @property
    def mean(self) -> float:
        return self._expect(lambda x: x)

    @property
    def variance(self) -> float:
        mean = self.mean
        return self._expect(lambda x: (x - mean) ** 2)


class SigmaEstimate(NamedTuple):
    sigma_hat: float
    variance: float


def mle_sigma_iid(xs: ArrayLike) -> SigmaEstimate:
    r"""
    Maximum likelihood estimate of ``sigma`` from i.i.d. Betoidal draws. Since
    ``Phi^{-1}(x_i)`` are zero-mean normal draws, the estimate is their root
    mean square, and its variance is the inverse Fisher information
    ``sigma^2 / 2n``.

    Args:
        xs: Observations strictly inside ``(0, 1)``. Boundary values are not
            clipped; the caller decides how to treat them.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    if xs.size < 1:
        raise DomainError("mle_sigma_iid requires at least one observation")
    _check_interior(xs, name="xs")

    z = specfun.norm_quantile(xs)
    sum_sq = float(np.sum(z * z))
    if sum_sq == 0.0:
        raise DegenerateError("All observations equal 0.5: the estimate of sigma is 0")

    sigma_hat = np.sqrt(sum_sq / xs.size)
    return SigmaEstimate(sigma_hat, sigma_hat ** 2 / (2 * xs.size))


def iid_loglik(xs: ArrayLike, sigma: float) -> float:
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    _check_interior(xs, name="xs")
    z = specfun.norm_quantile(xs)

    # n log(sqrt(2 pi) / sigma) + sum log phi(z / sigma) + sum e(x)^2, e = z / sqrt(2)
    return float(
        xs.size * np.log(np.sqrt(2.0 * np.pi) / sigma)
        + np.sum(specfun.norm_logpdf(z / sigma))
        + np.sum(0.5 * z * z)
    )


def iid_score(xs: ArrayLike, sigma: float) -> float:
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    _check_interior(xs, name="xs")
    sum_sq = np.sum(specfun.norm_quantile(xs) ** 2)
    return float(-xs.size / sigma + sum_sq / sigma ** 3)


def iid_hessian(xs: ArrayLike, sigma: float) -> float:
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    _check_interior(xs, name="xs")
    sum_sq = np.sum(specfun.norm_quantile(xs) ** 2)
    return float(xs.size / sigma ** 2 - 3.0 * sum_sq / sigma ** 4)


def fisher_information(sigma: float, n: int) -> float:
    return 2.0 * n / sigma ** 2
