# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import json
import os

import numpy as np
import pytest
from scipy import stats

from ispdcorr.errors import DomainError, InfeasibleError, InputError
from ispdcorr.models.corrmodel import THETA_2017, SizeContext, rho_d
from ispdcorr.models.indices import rho_np, rho_rim, scaled_average
from ispdcorr.simulation.simgen import (
    SIZES_2017,
    SIZES_2022,
    ClusterTriplet,
    PerturbationLevel,
    ScoreDist,
    achieved_rho,
    gen_scores,
    moment_matched_sizes,
    perturb_rho,
    read_sizes,
    scaled_average_variance,
    triplet_select,
)
from ispdcorr.simulation.simstudy import anderson_darling_normal

ROOT = os.path.join(os.path.dirname(__file__), os.pardir)
TEMPLATE = os.path.join(ROOT, "score_dist.template.json")


def test_achieved_rho():
    assert achieved_rho(ClusterTriplet(3, 3, 1), 10) == pytest.approx(0.2)
    assert achieved_rho(ClusterTriplet(6, 3, 3), 24) == pytest.approx(0.07609, abs=1e-5)
    assert scaled_average_variance(ClusterTriplet(3, 3, 1), 10) == pytest.approx(2.8)


def test_triplet_validation():
    with pytest.raises(DomainError):
        ClusterTriplet(4, 3, 0).validate(10)
    with pytest.raises(DomainError):
        ClusterTriplet(1, 3, 4).validate(10)
    with pytest.raises(DomainError):
        ClusterTriplet(1, 1, 0).validate(10)


def test_triplet_select_edge_cases():
    assert triplet_select(0.0, 50) == ClusterTriplet(0, 2, 0)
    with pytest.raises(InfeasibleError):
        triplet_select(1.0, 50)
    with pytest.raises(DomainError):
        triplet_select(-0.1, 50)
    with pytest.raises(DomainError):
        triplet_select(0.1, 1)


def test_triplets_reach_model_correlations():
    r"""Every size of the 2017 range is generated within 5% of its model correlation."""
    sizes = np.arange(24, 465)
    targets = rho_d(THETA_2017, SizeContext(sizes, 464))
    for n, target in zip(sizes, targets):
        t = triplet_select(float(target), int(n))
        t.validate(int(n))
        assert not t.capped
        assert abs(achieved_rho(t, int(n)) - target) <= 0.05 * target


def test_default_score_dist():
    dist = ScoreDist()
    support, probs = np.asarray(dist.support), np.asarray(dist.probs)
    assert probs.sum() == pytest.approx(1.0)
    assert np.dot(support, probs) == pytest.approx(0.0, abs=1e-5)
    assert np.dot(support ** 2, probs) == pytest.approx(1.0, abs=1e-5)


def test_score_dist_template():
    assert ScoreDist.from_json(TEMPLATE) == ScoreDist()


def test_score_dist_errors(tmp_path):
    with pytest.raises(InputError):
        ScoreDist(support=(-1.0, 1.0), probs=(0.3, 0.7))
    with pytest.raises(InputError):
        ScoreDist(support=(-1.0, 1.0), probs=(0.5,))

    path = tmp_path / "dist.json"
    path.write_text(json.dumps({"support": [-1.0, 1.0]}))
    with pytest.raises(InputError):
        ScoreDist.from_json(str(path))
    symmetric = ScoreDist.from_json(_write(tmp_path, [-1.0, 1.0], [0.5, 0.5]))
    assert symmetric.support == (-1.0, 1.0)


def _write(tmp_path, support, probs):
    path = tmp_path / "ok.json"
    path.write_text(json.dumps({"support": support, "probs": probs}))
    return str(path)


def test_generated_blocks(rng):
    dist = ScoreDist()
    scores = gen_scores(10, 0.2, dist, rng, ClusterTriplet(3, 3, 1))

    assert scores.size == 10
    assert set(scores) <= set(dist.support)
    for block in range(3):
        assert np.all(scores[3 * block : 3 * block + 3] == scores[3 * block])

    # Independent scores only at zero correlation.
    assert gen_scores(40, 0.0, dist, rng).size == 40


def test_perturbation(rng):
    rho = np.full(1000, 0.04)
    assert np.array_equal(perturb_rho(rho, PerturbationLevel.NULL, rng), rho)
    for level in list(PerturbationLevel)[1:]:
        low, high = level.bounds
        perturbed = perturb_rho(rho, level, rng)
        assert np.all((perturbed >= low * 0.04) & (perturbed <= high * 0.04))
    with pytest.raises(DomainError):
        perturb_rho(-0.1, PerturbationLevel.SMALL, rng)


def test_moment_matched_sizes():
    sizes = moment_matched_sizes(SIZES_2017)
    assert sizes.size == 766
    assert sizes.min() == 24 and sizes.max() == 464
    assert np.all(np.diff(sizes) >= 0)
    assert np.median(sizes) == pytest.approx(120.0, abs=2.0)
    assert sizes.mean() == pytest.approx(130.6, abs=3.0)
    q1, q3 = np.quantile(sizes, [0.25, 0.75])
    assert q1 == pytest.approx(96.0, abs=3.0)
    assert q3 == pytest.approx(153.5, abs=3.0)

    small = moment_matched_sizes(SIZES_2022, 50)
    assert small.size == 50 and small[0] == 78 and small[-1] == 615
    np.testing.assert_array_equal(moment_matched_sizes(SIZES_2022, 50), small)


def test_read_sizes(tmp_path):
    with_header = tmp_path / "a.csv"
    with_header.write_text("dept_id,n_products\nA,30\nB,40\n")
    np.testing.assert_array_equal(read_sizes(str(with_header)), [30, 40])

    bare = tmp_path / "b.csv"
    bare.write_text("30\n40\n50\n")
    np.testing.assert_array_equal(read_sizes(str(bare)), [30, 40, 50])

    bad = tmp_path / "c.csv"
    bad.write_text("n_products\n30\n1\n")
    with pytest.raises(InputError):
        read_sizes(str(bad))


@pytest.mark.slow
def test_scaled_average_variance_is_reached():
    rng = np.random.default_rng(7)
    dist = ScoreDist()
    t = triplet_select(0.1, 50)
    z = np.array(
        [scaled_average(gen_scores(50, 0.1, dist, rng, t)) for _ in range(20000)]
    )
    expected = scaled_average_variance(t, 50)
    assert z.var() == pytest.approx(expected, rel=0.06)


@pytest.mark.parametrize(
    "rho, n, expected",
    [(0.2, 10, ClusterTriplet(3, 3, 1)), (0.0757, 24, ClusterTriplet(6, 3, 3))],
)
def test_triplet_select_by_hand(rho, n, expected):
    t = triplet_select(rho, n)
    assert tuple(t[:3]) == tuple(expected[:3])
    assert not t.capped


def test_score_marginal_matches_distribution(rng):
    dist = ScoreDist()
    t = triplet_select(0.1, 30)
    # One score per department keeps the draws independent.
    firsts = np.array([gen_scores(30, 0.1, dist, rng, t)[0] for _ in range(10000)])
    counts = np.array([np.sum(firsts == value) for value in dist.support])
    assert counts.sum() == firsts.size

    _, p_value = stats.chisquare(counts, f_exp=np.asarray(dist.probs) * firsts.size)
    assert p_value > 0.001


def test_estimators_on_generated_scores(rng):
    dist = ScoreDist()
    t = triplet_select(0.05, 40)
    assert achieved_rho(t, 40) == pytest.approx(0.05, rel=1e-12)
    groups = [gen_scores(40, 0.05, dist, rng, t) for _ in range(2000)]

    assert rho_rim(groups) == pytest.approx(0.05, abs=0.01)

    estimates = np.array([rho_np(g) for g in groups])
    error = estimates.std(ddof=1) / np.sqrt(estimates.size)
    assert abs(estimates.mean() - 0.05) < 4 * error


@pytest.mark.slow
def test_largest_department_scaled_averages_are_normal():
    rng = np.random.default_rng(464)
    dist = ScoreDist()
    rho = float(rho_d(THETA_2017, SizeContext(np.array([464]), 464))[0])
    t = triplet_select(rho, 464)
    z = np.array(
        [scaled_average(gen_scores(464, rho, dist, rng, t)) for _ in range(10000)]
    )
    _, p_value = anderson_darling_normal(z / np.sqrt(scaled_average_variance(t, 464)))
    assert p_value > 0.001
