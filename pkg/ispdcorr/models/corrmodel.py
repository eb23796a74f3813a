# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

r"""
Size-dependent intra-departmental correlation model. The average correlation
``rho_d`` of a department with ``N_d`` products is linked to a linear
predictor through a pseudo-Fisher transformation,

    F(rho_d) = log{(1 + N_max rho_d) / (1 - rho_d)} = alpha + beta (N_d - 1),

where ``N_max`` is the largest department size in the cohort. The link keeps
every correlation in ``(-1 / N_max, 1)`` so the variance of a scaled average,
``sigma_d^2 = 1 + rho_d (N_d - 1)``, is always positive.

All functions are vectorized over department sizes: ``SizeContext.n_d`` may be
an integer or an integer array.
"""

import enum
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from ispdcorr.errors import DomainError

# Linear predictor values beyond this bound saturate the link.
_F_BOUND: float = 700.0


class ModelTheta(NamedTuple):
    alpha: float
    beta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=np.float64)

    @classmethod
    def parse(cls, text: str) -> "ModelTheta":
        r"""Parse ``"A,B"`` as used on the command line."""
        try:
            alpha, beta = (float(part) for part in text.split(","))
        except ValueError:
            raise DomainError(f"Expected parameters as 'ALPHA,BETA', got '{text}'")
        if not (np.isfinite(alpha) and np.isfinite(beta)):
            raise DomainError(f"Model parameters must be finite, got '{text}'")
        return cls(alpha, beta)


# Published FCM estimates of the 2017 and 2022 exercises.
THETA_2017 = ModelTheta(3.752, -0.00376)
THETA_2022 = ModelTheta(3.6793, -0.0023)


class ModelKind(enum.Enum):
    r"""Full, Constant and Null Correlation Models, nested as NCM < CCM < FCM."""

    FCM = "fcm"
    CCM = "ccm"
    NCM = "ncm"

    @property
    def free_params(self) -> int:
        return {"fcm": 2, "ccm": 1, "ncm": 0}[self.value]

    def constrain(self, theta: ModelTheta) -> ModelTheta:
        if self is ModelKind.CCM:
            return ModelTheta(theta.alpha, 0.0)
        if self is ModelKind.NCM:
            return ModelTheta(0.0, 0.0)
        return ModelTheta(*theta)


@dataclass(frozen=True)
class SizeContext:
    r"""
    Department sizes (count of submitted products) together with the cohort
    maximum ``n_max`` that enters the link. ``n_max`` must stay fixed between
    fitting and adjustment of the same cohort.
    """

    n_d: Union[int, np.ndarray]
    n_max: int

    def __post_init__(self):
        n_d = np.asarray(self.n_d)
        if n_d.size and (np.any(n_d < 2) or np.any(n_d > self.n_max)):
            raise DomainError(
                f"Department sizes must lie in [2, n_max={self.n_max}], "
                f"got min {n_d.min()} and max {n_d.max()}"
            )

    @property
    def lag(self) -> np.ndarray:
        r"""``N_d - 1``, the factor between beta- and alpha-derivatives."""
        return np.asarray(self.n_d, dtype=np.float64) - 1.0


def linpred(theta: ModelTheta, ctx: SizeContext) -> np.ndarray:
    return (theta.alpha + theta.beta * ctx.lag)[()]


def rho_from_linpred(f: np.ndarray, n_max: int) -> np.ndarray:
    r"""
    Invert the link: ``rho = (e^F - 1) / (e^F + N_max)``. Evaluated with
    ``e^{-F}`` for positive ``F`` so that large predictors saturate at 1 and
    very negative ones at ``-1 / N_max`` without overflow.
    """
    if n_max < 2:
        raise DomainError(f"n_max must be at least 2, got {n_max}")

    f = np.clip(np.asarray(f, dtype=np.float64), -_F_BOUND, _F_BOUND)
    positive = f > 0
    ef = np.exp(np.where(positive, -f, f))

    rho = np.where(
        positive,
        (1.0 - ef) / (1.0 + n_max * ef),
        (ef - 1.0) / (ef + n_max),
    )
    return rho[()]


def linpred_from_rho(rho: np.ndarray, n_max: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.float64)
    return np.log((1.0 + n_max * rho) / (1.0 - rho))[()]


def rho_d(theta: ModelTheta, ctx: SizeContext) -> np.ndarray:
    return rho_from_linpred(linpred(theta, ctx), ctx.n_max)


def sigma_from_rho(rho: np.ndarray, n_d: Union[int, np.ndarray]) -> np.ndarray:
    r"""Standard deviation of a scaled average, ``sqrt(1 + rho (N_d - 1))``."""
    lag = np.asarray(n_d, dtype=np.float64) - 1.0
    return np.sqrt(1.0 + np.asarray(rho) * lag)[()]


def sigma_d(theta: ModelTheta, ctx: SizeContext) -> np.ndarray:
    return sigma_from_rho(rho_d(theta, ctx), ctx.n_d)


def delta_alpha(theta: ModelTheta, ctx: SizeContext) -> np.ndarray:
    r"""
    Derivative of ``rho_d`` with respect to alpha,
    ``e^F (N_max + 1) / (e^F + N_max)^2``. The derivative with respect to beta
    is this quantity times ``N_d - 1``.
    """
    f = np.clip(np.asarray(linpred(theta, ctx), dtype=np.float64), -_F_BOUND, _F_BOUND)
    positive = f > 0
    ef = np.exp(np.where(positive, -f, f))
    n_max = ctx.n_max

    delta = np.where(
        positive,
        ef * (n_max + 1.0) / (1.0 + n_max * ef) ** 2,
        ef * (n_max + 1.0) / (ef + n_max) ** 2,
    )
    return delta[()]


def link_curvature(theta: ModelTheta, ctx: SizeContext) -> np.ndarray:
    r"""
    ``(N_max - e^F) / (N_max + e^F)``, the derivative of ``log delta_alpha``
    with respect to alpha. It appears in every Hessian of the model.
    """
    f = np.clip(np.asarray(linpred(theta, ctx), dtype=np.float64), -_F_BOUND, _F_BOUND)
    # Same quantity as -tanh((F - log N_max) / 2).
    return (-np.tanh(0.5 * (f - np.log(ctx.n_max))))[()]
