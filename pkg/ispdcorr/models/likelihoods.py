# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

r"""
Log-likelihoods of the correlation model with analytic score and Hessian.

Three observation schemes are supported:

    micro:        exact scaled averages, z_d ~ N(0, sigma_d^2)
    coarse:       ISPD values, ie. x_d = Phi(z_d) rounded to the 201-cell grid
    coarse-trunc: ISPD values released only at or above a truncation value

Every department enters through ``sigma_d`` only, so all derivatives are
computed with respect to alpha and the beta-derivatives follow by weighting
with ``N_d - 1``. Per-department contributions are summed with ``math.fsum``
so the totals do not depend on department order.
"""

import math
from typing import NamedTuple, Optional, Tuple, Type

import numpy as np

from ispdcorr.distributions.specfun import erfc, norm_logpdf
from ispdcorr.errors import DegenerateError, DomainError, InputError
from ispdcorr.models.cohort import Cohort, IspdGrid, ObservationKind
from ispdcorr.models.corrmodel import (
    ModelTheta,
    SizeContext,
    delta_alpha,
    link_curvature,
    rho_d,
)
from ispdcorr.models.indices import ispd_original

# Cell probabilities below this value are floored before taking logs.
PROB_FLOOR: float = 1e-300

_SQRT_PI: float = math.sqrt(math.pi)
_GRID = IspdGrid()


class Evaluation(NamedTuple):
    loglik: float
    score: np.ndarray
    hessian: np.ndarray
    # Departments whose cell probability was floored at PROB_FLOOR.
    floored: Tuple[str, ...] = ()


def _variance_terms(theta: ModelTheta, ctx: SizeContext):
    r"""``(v, w, c)``: variance, its alpha-derivative and the link curvature."""
    lag = ctx.lag
    v = 1.0 + rho_d(theta, ctx) * lag
    w = lag * delta_alpha(theta, ctx)
    return v, w, link_curvature(theta, ctx)


def _gauss_tail_terms(e: np.ndarray, sigma: np.ndarray):
    r"""``e exp(-e^2 / sigma^2)`` and ``e^3 exp(-e^2 / sigma^2)``, zero at infinity."""
    finite = np.isfinite(e)
    e0 = np.where(finite, e, 0.0)
    kernel = np.exp(-(e0 * e0) / (sigma * sigma))
    return e0 * kernel, e0 ** 3 * kernel


def _interval_prob(
    e_lower: np.ndarray, e_upper: np.ndarray, sigma: np.ndarray
) -> np.ndarray:
    r"""
    ``(erf(e_upper / sigma) - erf(e_lower / sigma)) / 2`` evaluated through the
    complementary error function on the side away from the mode, so that
    far-tail cells keep their relative precision.
    """
    upper_side = 0.5 * (erfc(e_lower / sigma) - erfc(e_upper / sigma))
    lower_side = 0.5 * (erfc(-e_upper / sigma) - erfc(-e_lower / sigma))
    return np.where(e_lower >= 0, upper_side, lower_side)


def _cell_terms(sigma, w, c, e_lower, e_upper):
    r"""Cell probability ``pi`` and its first two alpha-derivatives ``eta``, ``tau``."""
    pi = _interval_prob(e_lower, e_upper, sigma)

    g_lower, g3_lower = _gauss_tail_terms(e_lower, sigma)
    g_upper, g3_upper = _gauss_tail_terms(e_upper, sigma)

    eta = w / (2.0 * _SQRT_PI * sigma ** 3) * (g_lower - g_upper)
    q = w / (_SQRT_PI * sigma ** 5) * (g3_lower - g3_upper)
    tau = c * eta + w / (2.0 * sigma ** 2) * (q - 3.0 * eta)
    return pi, eta, tau


def _survival_terms(sigma, w, c, e_star):
    r"""
    Survival ``S = 1 - F_X(x_star)`` of the truncation point with its
    alpha-derivatives ``omega`` and ``xi``. A truncation point of 0 has
    ``e_star = -inf`` and gives ``S = 1`` with vanishing derivatives.
    """
    e_star = np.broadcast_to(np.asarray(e_star, dtype=np.float64), np.shape(sigma))
    survival = 0.5 * erfc(e_star / sigma)

    g_star, _ = _gauss_tail_terms(e_star, sigma)
    omega = w / (2.0 * _SQRT_PI * sigma ** 3) * g_star

    e0 = np.where(np.isfinite(e_star), e_star, 0.0)
    xi = omega * (c + w / (2.0 * sigma ** 4) * (2.0 * e0 * e0 - 3.0 * sigma ** 2))
    return survival, omega, xi


def cell_prob(
    theta: ModelTheta, ctx: SizeContext, j, grid: IspdGrid = _GRID
) -> np.ndarray:
    r"""
    Probability that a department's ISPD falls in cell ``j`` (0-based, so
    ``j = 2 * ISPD``). ``j`` may be an index array matching ``ctx.n_d``.
    """
    j = np.asarray(j)
    if np.any((j < 0) | (j >= len(grid))):
        raise DomainError(f"Grid indices must lie in [0, {len(grid) - 1}], got {j}")

    sigma = np.sqrt(1.0 + rho_d(theta, ctx) * ctx.lag)
    return _interval_prob(grid.e_lower[j], grid.e_upper[j], sigma)[()]


def cell_prob_trunc(
    theta: ModelTheta, ctx: SizeContext, j, truncation: float, grid: IspdGrid = _GRID
) -> np.ndarray:
    r"""Cell probability conditional on the ISPD being at least ``truncation``."""
    j_star = grid.index_of(truncation)
    if np.any(np.asarray(j) < j_star):
        raise DomainError(f"Cells below the truncation index {j_star} have no mass")

    sigma = np.sqrt(1.0 + rho_d(theta, ctx) * ctx.lag)
    survival = 0.5 * erfc(grid.e_lower[j_star] / sigma)
    if np.any(survival < PROB_FLOOR):
        raise DegenerateError(f"Survival beyond ISPD {truncation} underflows")
    return (cell_prob(theta, ctx, j, grid) / survival)[()]


def cell_probs(
    theta: ModelTheta, ctx: SizeContext, grid: IspdGrid = _GRID
) -> np.ndarray:
    r"""Matrix of all cell probabilities, one row per department size."""
    n_d = np.atleast_1d(ctx.n_d)
    sigma = np.sqrt(1.0 + rho_d(theta, SizeContext(n_d, ctx.n_max)) * (n_d - 1.0))
    return _interval_prob(grid.e_lower[None, :], grid.e_upper[None, :], sigma[:, None])


class LogLikelihood(object):
    r"""
    Base class of the cohort log-likelihoods. Subclasses provide the
    per-department contributions to the log-likelihood and to its first and
    second alpha-derivatives.

    Args:
        cohort: Departments to evaluate. Its observation kind must match the
            likelihood and its ``n_max`` fixes the correlation link.
    """

    mode: str = ""
    observation: ObservationKind = ObservationKind.SCALED_AVG

    def __init__(self, cohort: Cohort):
        if cohort.kind is not self.observation:
            raise InputError(
                f"Likelihood '{self.mode}' needs a '{self.observation.value}' "
                f"cohort, got '{cohort.kind.value}'"
            )
        self.cohort = cohort
        self.ctx = SizeContext(cohort.sizes, cohort.n_max)

    def contributions(
        self, theta: ModelTheta
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        r"""Per-department ``(l_d, s_d, h_d, floored_mask)``."""
        raise NotImplementedError

    def evaluate(self, theta: ModelTheta) -> Evaluation:
        l_d, s_d, h_d, floored = self.contributions(ModelTheta(*theta))
        lag = self.ctx.lag

        h_ab = math.fsum(lag * h_d)
        score = np.array([math.fsum(s_d), math.fsum(lag * s_d)])
        hessian = np.array([[math.fsum(h_d), h_ab], [h_ab, math.fsum(lag * lag * h_d)]])
        floored_ids = tuple(i for i, f in zip(self.cohort.ids, floored) if f)
        return Evaluation(math.fsum(l_d), score, hessian, floored_ids)

    def loglik(self, theta: ModelTheta) -> float:
        l_d = self.contributions(ModelTheta(*theta))[0]
        return math.fsum(l_d)

    def score(self, theta: ModelTheta) -> np.ndarray:
        return self.evaluate(theta).score

    def hessian(self, theta: ModelTheta) -> np.ndarray:
        return self.evaluate(theta).hessian


class ScaledAvgLikelihood(LogLikelihood):
    r"""``sum_d -log sigma_d + log phi(z_d / sigma_d)`` over exact scaled averages."""

    mode = "micro"
    observation = ObservationKind.SCALED_AVG

    def contributions(self, theta):
        z = self.cohort.values
        v, w, c = _variance_terms(theta, self.ctx)
        sigma = np.sqrt(v)

        l_d = -0.5 * np.log(v) + norm_logpdf(z / sigma)
        s_d = w * (z * z - v) / (2.0 * v * v)
        h_d = s_d * (c - 2.0 * w / v) - w * w / (2.0 * v * v)
        return l_d, s_d, h_d, np.zeros(z.size, dtype=bool)


class CoarseLikelihood(LogLikelihood):
    r"""``sum_d log pi_{d, j(d)}`` over ISPD cells of a complete release."""

    mode = "coarse"
    observation = ObservationKind.ISPD
    truncated = False

    def __init__(self, cohort: Cohort):
        super().__init__(cohort)
        if cohort.truncation is not None and not self.truncated:
            raise InputError(
                f"Cohort is truncated at {cohort.truncation}; "
                "use the 'coarse-trunc' likelihood"
            )
        grid = cohort.grid
        self.e_lower = grid.e_lower[cohort.cells]
        self.e_upper = grid.e_upper[cohort.cells]

    def _cell_terms(self, theta):
        v, w, c = _variance_terms(theta, self.ctx)
        sigma = np.sqrt(v)
        pi, eta, tau = _cell_terms(sigma, w, c, self.e_lower, self.e_upper)
        return sigma, w, c, pi, eta, tau

    @staticmethod
    def _log_terms(pi, eta, tau):
        floored = pi < PROB_FLOOR
        pi = np.maximum(pi, PROB_FLOOR)
        s_d = eta / pi
        h_d = tau / pi - s_d * s_d
        return np.log(pi), s_d, h_d, floored

    def contributions(self, theta):
        _, _, _, pi, eta, tau = self._cell_terms(theta)
        return self._log_terms(pi, eta, tau)


class TruncatedCoarseLikelihood(CoarseLikelihood):
    r"""
    ISPD cells of a release that only publishes values at or above the
    cohort's truncation value. Each cell probability is renormalized by the
    survival of the truncation point ``x_star`` (eg. 0.7275 for ISPD 73).
    """

    mode = "coarse-trunc"
    truncated = True

    def __init__(self, cohort: Cohort):
        if cohort.kind is ObservationKind.ISPD and cohort.truncation is None:
            raise InputError("The 'coarse-trunc' likelihood needs a truncation value")
        super().__init__(cohort)
        self.e_star = cohort.grid.e_lower[cohort.truncation_index]

    def contributions(self, theta):
        sigma, w, c, pi, eta, tau = self._cell_terms(theta)
        survival, omega, xi = _survival_terms(sigma, w, c, self.e_star)
        if np.any(survival < PROB_FLOOR):
            bad = [i for i, s in zip(self.cohort.ids, survival) if s < PROB_FLOOR]
            raise DegenerateError(
                f"Survival beyond ISPD {self.cohort.truncation} underflows "
                f"for {bad[:5]}"
            )

        pi_t = pi / survival
        eta_t = (eta - pi_t * omega) / survival
        tau_t = (tau - 2.0 * eta_t * omega - pi_t * xi) / survival
        return self._log_terms(pi_t, eta_t, tau_t)


LIKELIHOOD_MODES = {
    cls.mode: cls
    for cls in (ScaledAvgLikelihood, CoarseLikelihood, TruncatedCoarseLikelihood)
}


def make_likelihood(cohort: Cohort, mode: str) -> LogLikelihood:
    try:
        cls: Type[LogLikelihood] = LIKELIHOOD_MODES[mode]
    except KeyError:
        raise InputError(
            f"Unknown likelihood mode '{mode}', choose from {sorted(LIKELIHOOD_MODES)}"
        )
    return cls(cohort)


def simulate_scaled(
    theta: ModelTheta, sizes, n_max: Optional[int], rng: np.random.Generator
) -> Cohort:
    r"""Draw one scaled average ``z_d ~ N(0, sigma_d^2)`` per department."""
    sizes = np.asarray(sizes, dtype=np.int64)
    n_max = int(sizes.max()) if n_max is None else n_max
    sigma = np.sqrt(1.0 + rho_d(theta, SizeContext(sizes, n_max)) * (sizes - 1.0))
    z = sigma * rng.standard_normal(sizes.size)
    return Cohort.from_arrays(sizes, z, ObservationKind.SCALED_AVG, n_max=n_max)


def simulate_coarse(
    theta: ModelTheta,
    sizes,
    n_max: Optional[int],
    rng: np.random.Generator,
    truncation: Optional[float] = None,
) -> Cohort:
    r"""
    Draw scaled averages and publish them as original ISPD values. With a
    ``truncation`` only departments at or above it are kept, as in a top-tail
    release; department ids still follow the full cohort order.
    """
    scaled = simulate_scaled(theta, sizes, n_max, rng)
    ispd = ispd_original(scaled.values)
    cohort = Cohort.from_arrays(
        scaled.sizes, np.atleast_1d(ispd), ObservationKind.ISPD, n_max=scaled.n_max
    )
    if truncation is not None:
        cohort = cohort.truncate(truncation)
    return cohort


def release_probability(
    theta: ModelTheta, ctx: SizeContext, truncation: float
) -> np.ndarray:
    r"""Probability that a department's ISPD is at least ``truncation``."""
    sigma = np.sqrt(1.0 + rho_d(theta, ctx) * ctx.lag)
    e_star = _GRID.e_lower[_GRID.index_of(truncation)]
    return (0.5 * erfc(e_star / sigma))[()]
