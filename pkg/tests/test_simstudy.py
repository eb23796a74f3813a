# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import os

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_array_equal
from scipy import special

from ispdcorr.errors import DomainError, InputError
from ispdcorr.models.corrmodel import ModelTheta
from ispdcorr.models.estimation import FitConfig
from ispdcorr.models.indices import IndexKind
from ispdcorr.simulation.simgen import PerturbationLevel
from ispdcorr.simulation.simstudy import (
    ScenarioConfig,
    anderson_darling_normal,
    grid_histogram,
    mad,
    pdc,
    run_scenario,
    summarize,
    uniformity_statistic,
    write_study,
)

SMALL_SIZES = [10, 20, 30, 40, 50, 60, 80, 100]
QUICK_FIT = FitConfig(starts=[(0.0, 0.0), (3.0, -0.005)])


def test_mad():
    assert mad([1.0, 2.0], [2.0, 4.0]) == 1.5
    assert mad([50.0], [50.0]) == 0.0
    with pytest.raises(DomainError):
        mad([1.0], [1.0, 2.0])


def test_pdc():
    assert pdc([10.0, 10.0], [10.0, 20.0]) == 100.0
    assert pdc([1.0, 2.0, 3.0], [5.0, 6.0, 7.0]) == 0.0
    assert pdc([1.0, 2.0, 3.0], [3.0, 2.0, 1.0]) == 100.0
    # One of three pairs swapped.
    assert pdc([1.0, 2.0, 3.0], [2.0, 1.0, 3.0]) == pytest.approx(100.0 / 3.0)
    with pytest.raises(DomainError):
        pdc([1.0], [1.0])


def test_summarize():
    row = summarize([1.0, 2.0, 3.0, 4.0])
    assert row.min == 1.0 and row.max == 4.0
    assert row.q2 == 2.5 and row.mean == 2.5
    assert row.q1 == 1.75 and row.q3 == 3.25
    with pytest.raises(DomainError):
        summarize([])


def test_anderson_darling():
    n = 200
    quantiles = special.ndtri((np.arange(1, n + 1) - 0.5) / n)
    stat, p_value = anderson_darling_normal(quantiles)
    assert stat < 0.2 and p_value > 0.95

    stat, p_value = anderson_darling_normal(quantiles + 1.0)
    assert stat > 10.0 and p_value < 1e-3


def test_grid_histogram():
    counts = grid_histogram([73.0, 73.0, 0.5])
    assert counts.size == 201 and counts.sum() == 3
    assert counts[146] == 2 and counts[1] == 1


def test_uniformity_statistic():
    stat, df, p_value = uniformity_statistic(np.arange(0.0, 100.0, 0.5))
    assert stat == 0.0 and df == 19 and p_value == 1.0
    counts, _ = np.histogram(np.arange(0.0, 100.0, 0.5), bins=20, range=(0.0, 100.0))
    assert np.all(counts == 10)

    stat, _, p_value = uniformity_statistic(np.full(200, 50.0))
    assert p_value < 1e-10


def test_scenario_config():
    cfg = ScenarioConfig(replications=1)
    assert cfg.sizes.size == 766 and cfg.n_max == 464
    with pytest.raises(DomainError):
        ScenarioConfig(replications=0)
    with pytest.raises(InputError):
        ScenarioConfig(sizes=[10])
    with pytest.raises(DomainError):
        ScenarioConfig(sizes=[10, 20], n_max=15)


def test_independent_scores_leave_original_index_exact():
    cfg = ScenarioConfig(
        replications=2, theta0=ModelTheta(0.0, 0.0), sizes=SMALL_SIZES, fit=QUICK_FIT
    )
    study = run_scenario(cfg, verbose=False)
    for result in study.replications:
        assert result.metrics[IndexKind.ORIGINAL] == (0.0, 0.0)
        assert result.n_relaxed == 0 and result.n_capped == 0


def test_runs_are_reproducible(tmp_path):
    cfg = ScenarioConfig(
        perturbation=PerturbationLevel.MEDIUM,
        replications=3,
        seed=11,
        sizes=SMALL_SIZES,
        fit=QUICK_FIT,
    )
    first = run_scenario(cfg, verbose=False)
    second = run_scenario(cfg, verbose=False)

    assert [r.replication for r in first.replications] == [0, 1, 2]
    pd.testing.assert_frame_equal(first.replication_table(), second.replication_table())

    paths = write_study(first, str(tmp_path / "study"))
    assert all(os.path.exists(p) for p in paths)
    summary = pd.read_csv(os.path.join(tmp_path, "study", "summary.csv"))
    assert list(summary["metric"].unique()) == ["mad", "pdc"]
    assert len(summary) == 8
    histogram = pd.read_csv(os.path.join(tmp_path, "study", "ispd_histogram.csv"))
    assert len(histogram) == 201


def test_replication_seeds_do_not_depend_on_count():
    base = dict(seed=5, sizes=SMALL_SIZES, fit=QUICK_FIT)
    short = run_scenario(ScenarioConfig(replications=1, **base), verbose=False)
    longer = run_scenario(ScenarioConfig(replications=2, **base), verbose=False)
    pd.testing.assert_frame_equal(
        short.replication_table(),
        longer.replication_table().iloc[:4].reset_index(drop=True),
    )


@pytest.mark.slow
def test_fcm_beats_original_index():
    cfg = ScenarioConfig(perturbation=PerturbationLevel.SMALL, replications=20, seed=3)
    study = run_scenario(cfg, workers=2, verbose=False)
    assert study.mean_metric(IndexKind.FCM) < study.mean_metric(IndexKind.ORIGINAL)
    pdc_fcm = study.mean_metric(IndexKind.FCM, "pdc")
    assert pdc_fcm < study.mean_metric(IndexKind.ORIGINAL, "pdc")


def test_study_writes_original_and_fcm_histograms(tmp_path):
    cfg = ScenarioConfig(replications=2, seed=2, sizes=SMALL_SIZES, fit=QUICK_FIT)
    study = run_scenario(cfg, verbose=False)
    write_study(study, str(tmp_path / "study"))
    n_kept = len(SMALL_SIZES) * (cfg.replications - len(study.flagged))

    histogram = pd.read_csv(os.path.join(tmp_path, "study", "ispd_histogram.csv"))
    assert list(histogram.columns) == ["ispd", "count_original", "count_fcm"]
    assert histogram["count_original"].sum() == n_kept
    assert histogram["count_fcm"].sum() == n_kept

    original = study.pooled_ispd(IndexKind.ORIGINAL)
    assert_array_equal(histogram["count_original"], grid_histogram(original))

    uniformity = pd.read_csv(os.path.join(tmp_path, "study", "uniformity.csv"))
    assert uniformity["index_kind"].tolist() == ["original", "fcm"]
    assert uniformity["df"].tolist() == [19, 19]
    stat, _, p_value = uniformity_statistic(original)
    assert uniformity["statistic"][0] == pytest.approx(stat, rel=1e-15)
    assert uniformity["p_value"][0] == pytest.approx(p_value, rel=1e-15)


def test_reference_index_has_no_metrics():
    cfg = ScenarioConfig(replications=1, seed=4, sizes=SMALL_SIZES, fit=QUICK_FIT)
    study = run_scenario(cfg, verbose=False)
    with pytest.raises(DomainError):
        study.mean_metric(IndexKind.THEO)
    with pytest.raises(DomainError):
        study.mean_metric(IndexKind.FCM, "rmse")
    with pytest.raises(DomainError):
        study.pooled_ispd(IndexKind.NP)


@pytest.mark.slow
def test_index_ordering_without_perturbation():
    cfg = ScenarioConfig(replications=10, seed=8)
    null = run_scenario(cfg, workers=2, verbose=False)
    mad_by_kind = [
        null.mean_metric(kind)
        for kind in (IndexKind.FCM, IndexKind.RIM, IndexKind.NP, IndexKind.ORIGINAL)
    ]
    assert mad_by_kind == sorted(mad_by_kind) and len(set(mad_by_kind)) == 4
    assert mad_by_kind[0] < 1.0

    pdc_by_kind = [
        null.mean_metric(kind, "pdc")
        for kind in (IndexKind.FCM, IndexKind.RIM, IndexKind.ORIGINAL, IndexKind.NP)
    ]
    assert pdc_by_kind == sorted(pdc_by_kind) and len(set(pdc_by_kind)) == 4

    cfg = ScenarioConfig(perturbation=PerturbationLevel.LARGE, replications=10, seed=8)
    large = run_scenario(cfg, workers=2, verbose=False)
    assert large.mean_metric(IndexKind.FCM) > null.mean_metric(IndexKind.FCM)
