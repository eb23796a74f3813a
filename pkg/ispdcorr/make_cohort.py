# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import math
from typing import Optional

import click
import numpy as np

import ispdcorr._color_print as cprint
from ispdcorr.errors import InputError, exit_on_error
from ispdcorr.manifest import build_manifest, manifest_path, write_manifest
from ispdcorr.models.cohort import DEFAULT_TRUNCATION, write_cohort_csv
from ispdcorr.models.corrmodel import THETA_2017, THETA_2022, ModelTheta, SizeContext
from ispdcorr.models.likelihoods import (
    LIKELIHOOD_MODES,
    release_probability,
    simulate_coarse,
    simulate_scaled,
)
from ispdcorr.simulation.simgen import (
    SIZES_2017,
    SIZES_2022,
    moment_matched_sizes,
    read_sizes,
)

# Settings resembling the two published exercises: a complete 2017 release and
# a 2022 release of the top departments only.
PRESETS = {
    "2017": {"summary": SIZES_2017, "theta": THETA_2017, "mode": "coarse"},
    "2022": {"summary": SIZES_2022, "theta": THETA_2022, "mode": "coarse-trunc"},
}


def full_cohort_size(
    theta: ModelTheta, sizes: np.ndarray, n_max: int, released: int, trunc: float
) -> int:
    r"""Number of departments whose expected release above ``trunc`` is ``released``."""
    ctx = SizeContext(sizes, n_max)
    p_release = np.atleast_1d(release_probability(theta, ctx, trunc))
    return int(math.ceil(released / float(np.mean(p_release))))


@click.command("make-cohort")
# fmt: off
@click.option(
    "-p", "--preset", type=click.Choice(sorted(PRESETS)), default="2017",
    help="""Exercise to resemble: department sizes, generating parameters and
    default likelihood mode.""",
)
@click.option(
    "-m", "--mode", type=click.Choice(sorted(LIKELIHOOD_MODES)), default=None,
    help="""'micro' writes scaled averages, 'coarse' ISPD values and
    'coarse-trunc' ISPD values at or above --trunc. Defaults by preset.""",
)
@click.option(
    "--theta", type=str, default=None,
    help="Generating FCM parameters as 'ALPHA,BETA'. Defaults by preset.",
)
@click.option(
    "-d", "--depts", type=int, default=None,
    help="""Departments to simulate. Defaults to the preset count; for
    'coarse-trunc' the full cohort is sized so that about that many are
    released.""",
)
@click.option(
    "--sizes", "sizes_path", type=click.Path(exists=True), default=None,
    help="CSV of department sizes, used instead of the preset summary.",
)
@click.option(
    "--n-max", type=int, default=None,
    help="Largest department size of the link. Defaults to the largest size.",
)
@click.option(
    "--trunc", type=float, default=DEFAULT_TRUNCATION,
    help="Truncation value of 'coarse-trunc' releases.",
)
@click.option("--seed", type=int, default=0, help="Seed of the simulated draws.")
@click.option(
    "-o", "--save-to", type=click.Path(), default="./results/cohort.csv",
    help="Path to save the cohort CSV. A manifest is saved next to it.",
)
# fmt: on
@exit_on_error
def make_cohort(
    preset: str,
    mode: Optional[str],
    theta: Optional[str],
    depts: Optional[int],
    sizes_path: Optional[str],
    n_max: Optional[int],
    trunc: float,
    seed: int,
    save_to: str,
):
    r"""
    Simulate a cohort file from the correlation model, either with exact
    scaled averages or with published ISPD values.
    """
    settings = PRESETS[preset]
    mode = mode or settings["mode"]
    theta_0 = ModelTheta.parse(theta) if theta else settings["theta"]
    summary = settings["summary"]

    if sizes_path:
        sizes = read_sizes(sizes_path)
    else:
        sizes = moment_matched_sizes(summary, depts or summary.d)
    n_max = n_max or int(sizes.max())

    if mode == "coarse-trunc" and not sizes_path:
        # The preset summary describes the released departments.
        released = depts or summary.d
        full = full_cohort_size(theta_0, sizes, n_max, released, trunc)
        sizes = moment_matched_sizes(summary, full)
    if sizes.size < 2:
        raise InputError("Need at least 2 departments")

    rng = np.random.default_rng(seed)
    if mode == "micro":
        cohort = simulate_scaled(theta_0, sizes, n_max, rng)
    else:
        truncation = trunc if mode == "coarse-trunc" else None
        cohort = simulate_coarse(theta_0, sizes, n_max, rng, truncation=truncation)

    write_cohort_csv(cohort, save_to)
    cprint.white(f"Simulated {sizes.size} departments, wrote {len(cohort)} ({mode}).")

    config = {
        "preset": preset,
        "mode": mode,
        "theta": list(theta_0),
        "n_max": n_max,
        "trunc": trunc if mode == "coarse-trunc" else None,
        "n_simulated": int(sizes.size),
    }
    inputs = [sizes_path] if sizes_path else []
    manifest = build_manifest(
        "make-cohort", config, inputs=inputs, seed=seed, outputs=[save_to]
    )
    write_manifest(manifest, manifest_path(save_to))
    cprint.green(f"Saved cohort at {save_to}.")
