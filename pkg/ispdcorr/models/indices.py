# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

r"""
The department performance index (ISPD) and its adjusted variants. Every
index maps a department's scaled average ``z_d`` to ``x_d = Phi(z_d / s_d)``
and rounds ``100 x_d`` to the nearest half-integer; the variants differ in the
standard deviation ``s_d`` they divide by:

    original: 1 (scores assumed independent)
    theo:     the true sigma_d (infeasible benchmark)
    np:       from the non-parametric cross-product estimate of rho_d
    rim:      from one pooled intraclass correlation
    fcm:      from the fitted size-dependent correlation model
"""

import enum
import math
from typing import Sequence

import numpy as np

from ispdcorr.distributions.specfun import ArrayLike, norm_cdf
from ispdcorr.errors import DegenerateError, DomainError
from ispdcorr.models.corrmodel import ModelTheta, SizeContext, sigma_d, sigma_from_rho

# Largest pooled intraclass correlation reported; 1 itself would make the
# adjusted index degenerate.
RIM_UPPER: float = 1.0 - 1e-12


class IndexKind(enum.Enum):
    THEO = "theo"
    ORIGINAL = "original"
    NP = "np"
    RIM = "rim"
    FCM = "fcm"


def ispd_round(x: ArrayLike) -> ArrayLike:
    r"""``floor(200 x + 0.5) / 2``: the index on the grid ``0, 0.5, ..., 100``."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(~((x >= 0.0) & (x <= 1.0))):
        raise DomainError(f"ispd_round requires 0 <= x <= 1, got {x}")
    return (np.floor(200.0 * x + 0.5) / 2.0)[()]


def scaled_average(scores: Sequence[float]) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise DomainError("scaled_average requires at least one score")
    return float(np.sum(scores) / np.sqrt(scores.size))


def ispd_original(z: ArrayLike) -> ArrayLike:
    return ispd_round(norm_cdf(z))


def ispd_theo(z: ArrayLike, sigma: ArrayLike) -> ArrayLike:
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(~(sigma > 0)):
        raise DomainError(f"Standard deviations must be positive, got {sigma}")
    return ispd_round(norm_cdf(np.asarray(z, dtype=np.float64) / sigma))


def rho_np(scores: Sequence[float]) -> float:
    r"""
    Average cross-product ``sum_{i != i'} z_i z_i' / {N (N - 1)}`` of one
    department's standardized scores. This is the unbiased estimate and is
    returned unclamped; it may fall outside ``[-1 / (N - 1), 1]``.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.size
    if n < 2:
        raise DomainError(f"rho_np requires at least 2 scores, got {n}")

    total = np.sum(scores)
    cross = total * total - np.sum(scores * scores)
    return float(cross / (n * (n - 1)))


def ispd_np(z: float, scores: Sequence[float]) -> float:
    rho = min(max(rho_np(scores), 0.0), 1.0)
    return ispd_theo(z, sigma_from_rho(rho, len(scores)))


def rho_rim(groups: Sequence[Sequence[float]]) -> float:
    r"""
    Pooled intraclass correlation of a one-way random intercept model with
    departments as groups, by the ANOVA method of moments on the unbalanced
    design:

        rho = (MSB - MSW) / {MSB + (n0 - 1) MSW},
        n0  = {N - sum(n_g^2) / N} / (G - 1),

    clamped to ``[0, 1)``.
    """
    if len(groups) < 2:
        raise DomainError(f"rho_rim requires at least 2 departments, got {len(groups)}")

    sizes = np.array([len(g) for g in groups], dtype=np.float64)
    if np.any(sizes < 1):
        raise DomainError("rho_rim received an empty department")

    means = np.array([np.mean(g) for g in groups])
    n_total, n_groups = sizes.sum(), len(groups)
    grand_mean = np.sum(sizes * means) / n_total

    ss_between = np.sum(sizes * (means - grand_mean) ** 2)
    ss_within = math.fsum(
        float(np.sum((np.asarray(g) - m) ** 2)) for g, m in zip(groups, means)
    )

    ms_between = ss_between / (n_groups - 1)
    ms_within = ss_within / (n_total - n_groups) if n_total > n_groups else 0.0
    n0 = (n_total - np.sum(sizes ** 2) / n_total) / (n_groups - 1)

    denominator = ms_between + (n0 - 1.0) * ms_within
    if not denominator > 0:
        raise DegenerateError("rho_rim: scores have no variance")

    rho = (ms_between - ms_within) / denominator
    return float(min(max(rho, 0.0), RIM_UPPER))


def ispd_rim(z: ArrayLike, n_d: ArrayLike, rho: float) -> ArrayLike:
    return ispd_theo(z, sigma_from_rho(rho, n_d))


def ispd_fcm(z: ArrayLike, ctx: SizeContext, theta_hat: ModelTheta) -> ArrayLike:
    return ispd_theo(z, sigma_d(theta_hat, ctx))
