# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import numpy as np
import pytest

from ispdcorr.models.cohort import Cohort
from ispdcorr.models.corrmodel import THETA_2017, THETA_2022
from ispdcorr.models.likelihoods import simulate_coarse, simulate_scaled


def pytest_addoption(parser):
    parser.addoption(
        "--runslow",
        action="store_true",
        default=False,
        help="run slow Monte Carlo tests",
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte Carlo check, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def sizes_2017(rng):
    r"""100 department sizes spanning the 2017 range, with the maximum present."""
    sizes = rng.integers(24, 465, size=100)
    sizes[0] = 464
    return sizes


@pytest.fixture
def scaled_cohort(rng, sizes_2017) -> Cohort:
    return simulate_scaled(THETA_2017, sizes_2017, 464, rng)


@pytest.fixture
def coarse_cohort(rng, sizes_2017) -> Cohort:
    return simulate_coarse(THETA_2017, sizes_2017, 464, rng)


@pytest.fixture
def truncated_cohort(rng) -> Cohort:
    r"""A top-tail release at ISPD 73, about 100 of 250 simulated departments."""
    sizes = rng.integers(78, 616, size=250)
    sizes[0] = 615
    return simulate_coarse(THETA_2022, sizes, 615, rng, truncation=73.0)


def write_cohort(path, rows, column="scaled_avg"):
    r"""Write ``(dept_id, n_products, value)`` rows as a cohort CSV."""
    lines = [f"dept_id,n_products,{column}"]
    lines += [f"{d},{n},{v}" for d, n, v in rows]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


