# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

r"""
Generator of standardized product scores with a target intra-departmental
correlation. A department of ``N`` products is filled with ``M`` draws that
are each replicated ``k`` times, one partial block of ``k_check`` identical
draws, and independent draws for the remaining products. Every draw comes
from a discrete score distribution with mean 0 and variance 1, and the
average pairwise correlation of the department is

    rho = {M k (k - 1) + k_check (k_check - 1)} / {N (N - 1)}.

The module also holds the perturbation scenarios of the simulation study and
the department size summaries of the 2017 and 2022 evaluation exercises.
"""

import enum
import json
import math
import os
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import optimize, special

from ispdcorr.errors import DomainError, InfeasibleError, InputError

DEFAULT_SUPPORT: Tuple[float, ...] = (-1.69580, -1.06773, -0.12561, 0.81650, 1.44457)
DEFAULT_PROBS: Tuple[float, ...] = (0.1, 0.2, 0.3, 0.25, 0.15)

# The published support is rounded to 5 decimals, so its moments are off by
# about 1e-6.
MOMENT_TOLERANCE: float = 1e-5

# Relative error of the achieved correlation tolerated before a triplet is
# reported as capped.
TRIPLET_TOLERANCE: float = 0.05


@dataclass(frozen=True)
class ScoreDist:
    r"""
    Discrete marginal distribution of standardized scores.

    Args:
        support: Score values.
        probs: Their probabilities; must sum to 1 and give mean 0 and
            variance 1.
    """

    support: Tuple[float, ...] = DEFAULT_SUPPORT
    probs: Tuple[float, ...] = DEFAULT_PROBS

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.float64)
        probs = np.asarray(self.probs, dtype=np.float64)
        if support.ndim != 1 or support.shape != probs.shape or support.size == 0:
            raise InputError("ScoreDist needs equally long, nonempty support and probs")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise InputError(
                f"ScoreDist probabilities must be >= 0 and sum to 1, got {probs.sum()}"
            )

        mean = float(np.dot(support, probs))
        variance = float(np.dot(support * support, probs)) - mean * mean
        if abs(mean) > MOMENT_TOLERANCE or abs(variance - 1.0) > MOMENT_TOLERANCE:
            raise InputError(
                f"ScoreDist must be standardized, got mean {mean:.3g} "
                f"and variance {variance:.6g}"
            )

    @classmethod
    def from_json(cls, path: str) -> "ScoreDist":
        r"""Load ``{"support": [...], "probs": [...]}``."""
        if not os.path.exists(path):
            raise InputError(f"Score distribution file {path} does not exist")
        with open(path) as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as err:
                raise InputError(f"Could not parse {path}: {err}")

        for key in ("support", "probs"):
            if key not in data:
                raise InputError(f"{path}: missing key '{key}'")
        return cls(tuple(map(float, data["support"])), tuple(map(float, data["probs"])))

    def to_dict(self):
        return {"support": list(self.support), "probs": list(self.probs)}

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(np.asarray(self.support), size=size, p=np.asarray(self.probs))


class ClusterTriplet(NamedTuple):
    m: int
    k: int
    k_check: int
    # The partial block could not take the size its rounding asked for.
    capped: bool = False

    @property
    def relaxed(self) -> bool:
        r"""The partial block is as large as a full one."""
        return self.k_check == self.k

    def validate(self, n: int):
        if n < 2:
            raise DomainError(f"Departments need at least 2 products, got {n}")
        if self.k < 2 or self.m < 0 or self.k_check < 0 or self.k_check > self.k:
            raise DomainError(f"Invalid cluster triplet {tuple(self[:3])}")
        if self.m * self.k + self.k_check > n:
            raise DomainError(
                f"Cluster triplet {tuple(self[:3])} needs more than {n} products"
            )


def achieved_rho(t: ClusterTriplet, n: int) -> float:
    t.validate(n)
    pairs = t.m * t.k * (t.k - 1) + t.k_check * (t.k_check - 1)
    return pairs / (n * (n - 1))


def scaled_average_variance(t: ClusterTriplet, n: int) -> float:
    r"""
    Variance ``1 + {M k (k - 1) + k_check (k_check - 1)} / N`` of a generated
    scaled average.
    """
    return 1.0 + achieved_rho(t, n) * (n - 1)


def triplet_select(rho_target: float, n: int) -> ClusterTriplet:
    r"""
    Pick the cluster triplet whose correlation is closest to ``rho_target``:

        k       = smallest integer >= 1 + rho (N - 1), at least 2
        M       = largest integer with M k (k - 1) <= rho N (N - 1)
        k_check = nearest integer to the positive root of
                  k_check (k_check - 1) = rho N (N - 1) - M k (k - 1),
                  at most N - M k

    ``k_check`` may equal ``k``. A zero target gives ``(0, 2, 0)``.
    """
    if n < 2:
        raise DomainError(f"Departments need at least 2 products, got {n}")
    if not rho_target >= 0:
        raise DomainError(f"Target correlation must be nonnegative, got {rho_target}")
    if rho_target >= 1:
        raise InfeasibleError(
            f"Target correlation {rho_target} cannot be reached with {n} products"
        )
    if rho_target == 0:
        return ClusterTriplet(0, 2, 0)

    target_pairs = rho_target * n * (n - 1)
    k = max(2, math.ceil(1.0 + rho_target * (n - 1) - 1e-12))
    m = int(math.floor(target_pairs / (k * (k - 1)) + 1e-12))

    residual = max(target_pairs - m * k * (k - 1), 0.0)
    k_check_s = 0.5 + math.sqrt(0.25 + residual)
    wanted = min(int(math.floor(k_check_s + 0.5)), k)
    k_check = min(wanted, n - m * k)

    capped = False
    if k_check < wanted:
        achieved = (m * k * (k - 1) + k_check * (k_check - 1)) / (n * (n - 1))
        capped = abs(achieved - rho_target) > TRIPLET_TOLERANCE * rho_target
    return ClusterTriplet(m, k, k_check, capped)


def gen_scores(
    n: int,
    rho_target: float,
    dist: ScoreDist,
    rng: np.random.Generator,
    triplet: Optional[ClusterTriplet] = None,
) -> np.ndarray:
    r"""
    Standardized scores of one department. Replicated blocks come first,
    then the partial block, then the independent draws.
    """
    t = triplet if triplet is not None else triplet_select(rho_target, n)
    t.validate(n)

    n_free = n - t.m * t.k - t.k_check
    n_partial = 1 if t.k_check > 0 else 0
    draws = dist.sample(t.m + n_partial + n_free, rng)

    blocks = [np.repeat(draws[: t.m], t.k)]
    if n_partial:
        blocks.append(np.repeat(draws[t.m : t.m + 1], t.k_check))
    blocks.append(draws[t.m + n_partial :])
    return np.concatenate(blocks)


class PerturbationLevel(enum.Enum):
    NULL = "null"
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"

    @property
    def bounds(self) -> Tuple[float, float]:
        return {
            "null": (1.0, 1.0),
            "small": (0.9, 1.1),
            "medium": (0.75, 1.25),
            "large": (0.5, 1.5),
        }[self.value]


def perturb_rho(rho, level: PerturbationLevel, rng: np.random.Generator):
    r"""Multiply ``rho`` by a uniform draw from the level's range."""
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(~(rho >= 0)):
        raise DomainError(f"Correlations to perturb must be nonnegative, got {rho}")
    if level is PerturbationLevel.NULL:
        return rho[()]
    low, high = level.bounds
    return (rho * rng.uniform(low, high, size=rho.shape))[()]


class SizeSummary(NamedTuple):
    r"""Six-number summary of department sizes and the number of departments."""

    min: int
    q1: float
    median: float
    mean: float
    q3: float
    max: int
    d: int


SIZES_2017 = SizeSummary(24, 96.0, 120.0, 130.6, 153.5, 464, 766)
SIZES_2022 = SizeSummary(78, 159.0, 198.0, 219.8, 254.2, 615, 350)


def _shifted_lognormal_fit(summary: SizeSummary) -> Tuple[float, float, float]:
    r"""``(shift, mu, s)`` fitted by relative least squares to Q1, Q2, mean and Q3."""
    z_q1, z_q3 = special.ndtri(0.25), special.ndtri(0.75)
    targets = np.array([summary.q1, summary.median, summary.mean, summary.q3])

    def residuals(params):
        shift, mu, s = params
        model = np.array(
            [
                shift + np.exp(mu + s * z_q1),
                shift + np.exp(mu),
                shift + np.exp(mu + 0.5 * s * s),
                shift + np.exp(mu + s * z_q3),
            ]
        )
        return (model - targets) / targets

    shift0 = 0.5 * summary.min
    x0 = np.array([shift0, np.log(summary.median - shift0), 0.4])
    res = optimize.least_squares(
        residuals,
        x0,
        bounds=([0.0, -np.inf, 1e-3], [summary.min, np.inf, 5.0]),
    )
    return tuple(float(v) for v in res.x)


def moment_matched_sizes(summary: SizeSummary, d: Optional[int] = None) -> np.ndarray:
    r"""
    Deterministic department sizes resembling ``summary``: quantiles at
    ``(i - 1/2) / d`` of a shifted log-normal fitted to the summary, rounded
    and clamped to ``[min, max]``, with the smallest and largest sizes pinned
    to ``min`` and ``max``. Returned in ascending order.
    """
    d = summary.d if d is None else d
    if d < 2:
        raise DomainError(f"Need at least 2 departments, got {d}")

    shift, mu, s = _shifted_lognormal_fit(summary)
    positions = (np.arange(1, d + 1) - 0.5) / d
    sizes = shift + np.exp(mu + s * special.ndtri(positions))
    sizes = np.clip(np.floor(sizes + 0.5), summary.min, summary.max).astype(np.int64)
    sizes.sort()
    sizes[0], sizes[-1] = summary.min, summary.max
    return sizes


def read_sizes(path: str) -> np.ndarray:
    r"""Department sizes from a CSV with an ``n_products`` column or one per line."""
    if not os.path.exists(path):
        raise InputError(f"Sizes file {path} does not exist")
    frame = pd.read_csv(path)
    column = "n_products" if "n_products" in frame.columns else None
    if column is None:
        frame = pd.read_csv(path, header=None)
        if frame.shape[1] != 1:
            raise InputError(
                f"{path}: need an 'n_products' column or a single column of sizes"
            )
        column = frame.columns[0]

    sizes = pd.to_numeric(frame[column], errors="coerce").to_numpy()
    bad = ~np.isfinite(sizes) | (sizes != np.round(sizes)) | (sizes < 2)
    if np.any(bad):
        rows = (np.flatnonzero(bad) + 1).tolist()
        raise InputError(f"{path}: invalid department sizes in rows {rows[:5]}")
    if sizes.size < 2:
        raise InputError(f"{path}: need at least 2 departments")
    return sizes.astype(np.int64)
