# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

r"""
Monte Carlo comparison of the department indices. Each replication generates
standardized product scores for every department at its (perturbed) model
correlation, computes the original, NP, RIM and FCM indices from the same
data and scores them against the THEO benchmark, which uses the true
standard deviations.
"""

import multiprocessing as mp
import os
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import special, stats
from tqdm import tqdm

import ispdcorr._color_print as cprint
from ispdcorr.errors import ConvergenceError, DegenerateError, DomainError, InputError
from ispdcorr.models.cohort import Cohort, IspdGrid, ObservationKind
from ispdcorr.models.corrmodel import (
    THETA_2017,
    ModelKind,
    ModelTheta,
    SizeContext,
    rho_d,
    sigma_from_rho,
)
from ispdcorr.models.estimation import FitConfig, fit_likelihood
from ispdcorr.models.indices import (
    IndexKind,
    ispd_fcm,
    ispd_original,
    ispd_rim,
    ispd_theo,
    rho_np,
    rho_rim,
    scaled_average,
)
from ispdcorr.models.likelihoods import ScaledAvgLikelihood
from ispdcorr.simulation.simgen import (
    SIZES_2017,
    PerturbationLevel,
    ScoreDist,
    gen_scores,
    moment_matched_sizes,
    perturb_rho,
    triplet_select,
)

# Indices compared against THEO, in the order of the summary table.
COMPARED: Tuple[IndexKind, ...] = (
    IndexKind.ORIGINAL,
    IndexKind.NP,
    IndexKind.RIM,
    IndexKind.FCM,
)
METRICS: Tuple[str, ...] = ("mad", "pdc")
# Indices whose pooled values are tested against the uniform distribution.
UNIFORMITY_CHECKED: Tuple[IndexKind, ...] = (IndexKind.ORIGINAL, IndexKind.FCM)

# Polynomial coefficients, highest degree first, of the limiting Anderson-Darling
# distribution below and above 2.
_AD_SMALL = (0.00168691, -0.011672, 0.0347962, -0.0649821, 0.247105, 2.00012)
_AD_LARGE = (-0.0003146, 0.008056, -0.082433, 0.43424, -2.30695, 1.0776)


@dataclass
class ScenarioConfig:
    r"""
    One simulation scenario.

    Args:
        perturbation: Multiplicative perturbation of each department's model
            correlation.
        replications: Number of simulated datasets.
        seed: Master seed. Department ``d`` of replication ``r`` draws from
            ``default_rng([seed, r, d])``.
        theta0: Correlation model generating the data.
        sizes: Department sizes. Defaults to sizes matched to the 2017 summary.
        score_dist: Marginal distribution of product scores.
        n_max: ``N_max`` of the link, defaults to the largest size.
        fit: Optimizer settings of the per-replication FCM refit.
    """

    perturbation: PerturbationLevel = PerturbationLevel.NULL
    replications: int = 1000
    seed: int = 0
    theta0: ModelTheta = THETA_2017
    sizes: Optional[Sequence[int]] = None
    score_dist: ScoreDist = field(default_factory=ScoreDist)
    n_max: Optional[int] = None
    fit: FitConfig = field(default_factory=FitConfig)

    def __post_init__(self):
        if self.replications < 1:
            raise DomainError(f"Need at least one replication, got {self.replications}")
        if self.sizes is None:
            self.sizes = moment_matched_sizes(SIZES_2017)
        self.sizes = np.asarray(self.sizes, dtype=np.int64)
        if self.sizes.size < 2:
            raise InputError("A scenario needs at least 2 departments")
        if np.any(self.sizes < 2):
            raise InputError("Department sizes must be at least 2")
        if self.n_max is None:
            self.n_max = int(self.sizes.max())
        # Validates n_max against the sizes.
        SizeContext(self.sizes, self.n_max)

    def to_dict(self):
        return {
            "perturbation": self.perturbation.value,
            "replications": self.replications,
            "seed": self.seed,
            "theta0": list(self.theta0),
            "n_depts": int(self.sizes.size),
            "n_max": self.n_max,
            "score_dist": self.score_dist.to_dict(),
            "fit_method": self.fit.method,
        }


class SummaryRow(NamedTuple):
    min: float
    q1: float
    q2: float
    mean: float
    q3: float
    max: float


class ReplicationResult(NamedTuple):
    replication: int
    # (mad, pdc) per compared index; FCM entries are NaN when the refit failed.
    metrics: Dict[IndexKind, Tuple[float, float]]
    theta_hat: Optional[ModelTheta]
    flagged: bool
    message: str
    n_relaxed: int
    n_capped: int
    # z_d / sigma_d of the smallest and the largest department.
    std_small: float
    std_large: float
    ispd_original: np.ndarray
    ispd_fcm: np.ndarray


def mad(a: Sequence[float], b: Sequence[float]) -> float:
    r"""Mean absolute deviation between two index vectors."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.size == 0:
        raise DomainError(f"mad needs equal nonempty vectors, got {a.size}, {b.size}")
    return float(np.mean(np.abs(a - b)))


def pdc(a: Sequence[float], b: Sequence[float]) -> float:
    r"""
    Percentage of department pairs ordered differently by ``a`` and ``b``.
    Pairs are compared by the sign of their difference, so a tie in one vector
    against a strict order in the other counts as discordant.
    """
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.size < 2:
        raise DomainError(f"pdc needs equal vectors, 2+ items, got {a.size}, {b.size}")

    d = a.size
    sign_a = np.sign(a[:, None] - a[None, :])
    sign_b = np.sign(b[:, None] - b[None, :])
    # Each unordered pair appears twice in the full matrix.
    discordant = np.count_nonzero(sign_a != sign_b)
    return float(100.0 * discordant / (d * (d - 1)))


def summarize(values: Sequence[float]) -> SummaryRow:
    r"""Six-number summary with linearly interpolated quartiles."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise DomainError("Cannot summarize an empty sample")
    q1, q2, q3 = np.quantile(values, [0.25, 0.5, 0.75])
    return SummaryRow(
        float(values.min()),
        float(q1),
        float(q2),
        float(values.mean()),
        float(q3),
        float(values.max()),
    )


def anderson_darling_normal(x: Sequence[float]) -> Tuple[float, float]:
    r"""
    Anderson-Darling statistic of ``x`` against the standard normal (no
    estimated parameters) and its asymptotic p-value.
    """
    x = np.sort(np.asarray(x, dtype=np.float64))
    n = x.size
    if n < 2:
        raise DomainError("Anderson-Darling needs at least 2 observations")

    i = np.arange(1, n + 1)
    log_cdf = special.log_ndtr(x)
    log_sf = special.log_ndtr(-x[::-1])
    a2 = -n - np.sum((2 * i - 1) * (log_cdf + log_sf)) / n
    return float(a2), float(1.0 - _ad_limit_cdf(a2))


def _ad_limit_cdf(z: float) -> float:
    r"""Limiting distribution of the Anderson-Darling statistic (Marsaglia's ADinf)."""
    if z <= 0:
        return 0.0
    if z < 2:
        poly = np.polyval(_AD_SMALL, z)
        return float(np.exp(-1.2337141 / z) / np.sqrt(z) * poly)
    inner = np.polyval(_AD_LARGE, z)
    return float(np.exp(-np.exp(inner)))


def grid_histogram(
    values: Sequence[float], grid: Optional[IspdGrid] = None
) -> np.ndarray:
    r"""Counts of ISPD values over the 201 grid cells."""
    grid = grid or IspdGrid()
    cells = np.atleast_1d(grid.index_of(np.asarray(values, dtype=np.float64)))
    return np.bincount(cells, minlength=len(grid))


def uniformity_statistic(
    values: Sequence[float], bins: int = 20
) -> Tuple[float, int, float]:
    r"""
    Chi-square statistic of ISPD values against the uniform distribution over
    ``bins`` equal bins of [0, 100], with its degrees of freedom and p-value.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0 or bins < 2:
        raise DomainError("uniformity_statistic needs values and at least 2 bins")
    counts, _ = np.histogram(values, bins=bins, range=(0.0, 100.0))
    stat, p_value = stats.chisquare(counts)
    return float(stat), bins - 1, float(p_value)


def _replication_worker(args) -> ReplicationResult:
    r"""Helper method for parallelizing replications."""
    cfg, rep = args
    sizes, n_max = cfg.sizes, cfg.n_max
    model_rho = np.atleast_1d(rho_d(cfg.theta0, SizeContext(sizes, n_max)))

    true_rho = np.empty(sizes.size)
    z = np.empty(sizes.size)
    groups: List[np.ndarray] = []
    n_relaxed = n_capped = 0
    for dept, n in enumerate(sizes):
        rng = np.random.default_rng([cfg.seed, rep, dept])
        true_rho[dept] = perturb_rho(model_rho[dept], cfg.perturbation, rng)

        triplet = triplet_select(true_rho[dept], int(n))
        n_relaxed += int(triplet.relaxed)
        n_capped += int(triplet.capped)

        scores = gen_scores(int(n), true_rho[dept], cfg.score_dist, rng, triplet)
        groups.append(scores)
        z[dept] = scaled_average(scores)

    sigma_true = sigma_from_rho(true_rho, sizes)
    theo = ispd_theo(z, sigma_true)

    np_rho = np.clip([rho_np(g) for g in groups], 0.0, 1.0)
    indices = {
        IndexKind.ORIGINAL: ispd_original(z),
        IndexKind.NP: ispd_theo(z, sigma_from_rho(np_rho, sizes)),
    }

    flagged, message = False, ""
    try:
        indices[IndexKind.RIM] = ispd_rim(z, sizes, rho_rim(groups))
    except DegenerateError as err:
        flagged, message = True, f"RIM: {err}"
        indices[IndexKind.RIM] = np.full(sizes.size, np.nan)

    theta_hat = None
    cohort = Cohort.from_arrays(sizes, z, ObservationKind.SCALED_AVG, n_max=n_max)
    try:
        result = fit_likelihood(ScaledAvgLikelihood(cohort), ModelKind.FCM, cfg.fit)
        theta_hat = result.theta_hat
        indices[IndexKind.FCM] = ispd_fcm(z, SizeContext(sizes, n_max), theta_hat)
    except ConvergenceError as err:
        flagged, message = True, f"FCM: {err}"
        indices[IndexKind.FCM] = np.full(sizes.size, np.nan)

    metrics = {}
    for kind in COMPARED:
        if np.any(np.isnan(indices[kind])):
            metrics[kind] = (np.nan, np.nan)
        else:
            metrics[kind] = (mad(indices[kind], theo), pdc(indices[kind], theo))

    small, large = int(np.argmin(sizes)), int(np.argmax(sizes))
    return ReplicationResult(
        replication=rep,
        metrics=metrics,
        theta_hat=theta_hat,
        flagged=flagged,
        message=message,
        n_relaxed=n_relaxed,
        n_capped=n_capped,
        std_small=float(z[small] / sigma_true[small]),
        std_large=float(z[large] / sigma_true[large]),
        ispd_original=np.asarray(indices[IndexKind.ORIGINAL]),
        ispd_fcm=np.asarray(indices[IndexKind.FCM]),
    )


@dataclass
class StudyResult:
    config: ScenarioConfig
    replications: List[ReplicationResult]

    @property
    def flagged(self) -> List[int]:
        return [r.replication for r in self.replications if r.flagged]

    def replication_table(self) -> pd.DataFrame:
        rows = [
            {
                "replication": r.replication,
                "index_kind": kind.value,
                "mad": r.metrics[kind][0],
                "pdc": r.metrics[kind][1],
                "flagged": r.flagged,
            }
            for r in self.replications
            for kind in COMPARED
        ]
        columns = ["replication", "index_kind", "mad", "pdc", "flagged"]
        return pd.DataFrame(rows, columns=columns)

    def summary_table(self) -> pd.DataFrame:
        r"""Six-number summaries of MAD and PDC over unflagged replications."""
        table = self.replication_table()
        table = table[~table["flagged"]]

        rows = []
        for metric in METRICS:
            for kind in COMPARED:
                values = table.loc[table["index_kind"] == kind.value, metric].to_numpy()
                row = summarize(values) if values.size else SummaryRow(*([np.nan] * 6))
                rows.append(
                    {"metric": metric, "index_kind": kind.value, **row._asdict()}
                )
        return pd.DataFrame(rows)

    def mean_metric(self, kind: IndexKind, metric: str = "mad") -> float:
        if kind not in COMPARED:
            raise DomainError(f"No metrics for {kind.name}, it is the reference index")
        if metric not in METRICS:
            raise DomainError(f"Unknown metric '{metric}', choose from {METRICS}")
        column = METRICS.index(metric)
        values = [r.metrics[kind][column] for r in self.replications if not r.flagged]
        return float(np.mean(values))

    def scaled_std_samples(self) -> Tuple[np.ndarray, np.ndarray]:
        r"""Standardized scaled averages of the smallest and largest department."""
        return (
            np.array([r.std_small for r in self.replications]),
            np.array([r.std_large for r in self.replications]),
        )

    def pooled_ispd(self, kind: IndexKind = IndexKind.FCM) -> np.ndarray:
        r"""ISPD values of all unflagged replications, for ORIGINAL or FCM."""
        if kind not in UNIFORMITY_CHECKED:
            raise DomainError(f"Only ORIGINAL and FCM values are kept, got {kind.name}")
        attr = "ispd_original" if kind is IndexKind.ORIGINAL else "ispd_fcm"
        pooled = [getattr(r, attr) for r in self.replications if not r.flagged]
        return np.concatenate(pooled) if pooled else np.zeros(0)


def run_scenario(
    cfg: ScenarioConfig, workers: int = 1, verbose: bool = True
) -> StudyResult:
    r"""
    Run all replications of a scenario. Results are returned in replication
    order whatever the number of workers.
    """
    worker_args = [(cfg, rep) for rep in range(cfg.replications)]
    results: List[ReplicationResult] = []

    desc = f"Scenario {cfg.perturbation.value}"
    with tqdm(total=len(worker_args), desc=desc, disable=not verbose) as pbar:
        if workers > 1:
            with mp.Pool(processes=workers, initializer=cprint.set_quiet) as p:
                for _result in p.imap(_replication_worker, worker_args):
                    results.append(_result)
                    pbar.update()
        else:
            for args in worker_args:
                results.append(_replication_worker(args))
                pbar.update()

    study = StudyResult(cfg, results)
    n_relaxed = sum(r.n_relaxed for r in results)
    n_capped = sum(r.n_capped for r in results)
    if n_relaxed:
        cprint.yellow(f"{n_relaxed} departments used a partial block of size k.")
    if n_capped:
        cprint.yellow(f"{n_capped} departments missed their target correlation by 5%+.")
    if study.flagged:
        cprint.yellow(f"Flagged replications: {study.flagged[:10]}")
    return study


def _write_csv(frame: pd.DataFrame, path: str):
    os.makedirs(os.path.dirname(path) or os.curdir, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")


def write_study(study: StudyResult, save_to: str) -> List[str]:
    r"""
    Write the replication table, the summary table and the histogram data of
    a study into ``save_to``. Returns the written paths.
    """
    paths = {
        "replications": os.path.join(save_to, "replications.csv"),
        "summary": os.path.join(save_to, "summary.csv"),
        "ispd_hist": os.path.join(save_to, "ispd_histogram.csv"),
        "std_hist": os.path.join(save_to, "scaled_std_histogram.csv"),
        "normality": os.path.join(save_to, "normality.csv"),
        "uniformity": os.path.join(save_to, "uniformity.csv"),
    }
    _write_csv(study.replication_table(), paths["replications"])
    _write_csv(study.summary_table(), paths["summary"])

    # Original and FCM values pooled over the same replications.
    grid = IspdGrid()
    pooled = {kind: study.pooled_ispd(kind) for kind in UNIFORMITY_CHECKED}
    histogram = {"ispd": grid.values}
    for kind, values in pooled.items():
        histogram[f"count_{kind.value}"] = grid_histogram(values, grid)
    _write_csv(pd.DataFrame(histogram), paths["ispd_hist"])

    small, large = study.scaled_std_samples()
    edges = np.linspace(-4.0, 4.0, 41)
    hist_small, _ = np.histogram(small, bins=edges)
    hist_large, _ = np.histogram(large, bins=edges)
    _write_csv(
        pd.DataFrame(
            {
                "bin_lower": edges[:-1],
                "bin_upper": edges[1:],
                "count_smallest": hist_small,
                "count_largest": hist_large,
            }
        ),
        paths["std_hist"],
    )

    sizes = study.config.sizes
    rows = []
    samples = (("smallest", small, sizes.min()), ("largest", large, sizes.max()))
    for label, sample, n in samples:
        a2, p_value = np.nan, np.nan
        if sample.size >= 2:
            a2, p_value = anderson_darling_normal(sample)
        rows.append(
            {
                "department": label,
                "n_products": int(n),
                "ad_stat": a2,
                "ad_p_value": p_value,
            }
        )
    _write_csv(pd.DataFrame(rows), paths["normality"])

    rows = []
    for kind, values in pooled.items():
        stat, df, p_value = np.nan, 19, np.nan
        if values.size:
            stat, df, p_value = uniformity_statistic(values)
        rows.append(
            {"index_kind": kind.value, "statistic": stat, "df": df, "p_value": p_value}
        )
    _write_csv(pd.DataFrame(rows), paths["uniformity"])
    return list(paths.values())
