# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import os
from typing import Optional

import click
import numpy as np
import pandas as pd

import ispdcorr._color_print as cprint
from ispdcorr.errors import exit_on_error
from ispdcorr.manifest import build_manifest, manifest_path, write_manifest
from ispdcorr.models.cohort import Cohort, ObservationKind, read_cohort_csv
from ispdcorr.models.corrmodel import ModelTheta, SizeContext, rho_d, sigma_d
from ispdcorr.models.indices import ispd_fcm, ispd_original


def adjust_cohort(cohort: Cohort, theta: ModelTheta) -> pd.DataFrame:
    r"""Original and FCM-adjusted index of every department of a scaled cohort."""
    ctx = SizeContext(cohort.sizes, cohort.n_max)
    return pd.DataFrame(
        {
            "dept_id": cohort.ids,
            "n_products": cohort.sizes,
            "ispd_original": np.atleast_1d(ispd_original(cohort.values)),
            "ispd_fcm": np.atleast_1d(ispd_fcm(cohort.values, ctx, theta)),
            "rho_hat": np.atleast_1d(rho_d(theta, ctx)),
            "sigma_hat": np.atleast_1d(sigma_d(theta, ctx)),
        }
    )


@click.command()
# fmt: off
@click.option(
    "-i", "--input", "input_path", type=click.Path(exists=True), required=True,
    help="Cohort CSV with columns dept_id, n_products and scaled_avg.",
)
@click.option(
    "--theta", type=str, required=True,
    help="Fitted FCM parameters as 'ALPHA,BETA', eg. '3.752,-0.00376'.",
)
@click.option(
    "--n-max", type=int, default=None,
    help="""Largest department size of the link; must match the value used for
    fitting. Defaults to the input maximum.""",
)
@click.option(
    "-o", "--save-to", type=click.Path(), default="./results/adjusted.csv",
    help="Path to save the adjusted index CSV. A manifest is saved next to it.",
)
# fmt: on
@exit_on_error
def adjust(input_path: str, theta: str, n_max: Optional[int], save_to: str):
    r"""
    Compute the size-adjusted index ISPD-fcm of each department from its
    scaled average and a fitted correlation model.
    """
    theta_hat = ModelTheta.parse(theta)
    cohort = read_cohort_csv(input_path, expect=ObservationKind.SCALED_AVG, n_max=n_max)

    table = adjust_cohort(cohort, theta_hat)
    moved = int(np.sum(table["ispd_fcm"] != table["ispd_original"]))
    cprint.white(f"Adjustment changed the index of {moved}/{len(table)} departments.")

    os.makedirs(os.path.dirname(save_to) or os.curdir, exist_ok=True)
    table.to_csv(save_to, index=False, float_format="%.17g")

    config = {"theta": list(theta_hat), "n_max": cohort.n_max}
    write_manifest(
        build_manifest("adjust", config, inputs=[input_path], outputs=[save_to]),
        manifest_path(save_to),
    )
    cprint.green(f"Saved adjusted indices at {save_to}.")
