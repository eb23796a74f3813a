# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import os
from typing import List, Optional

import click
import numpy as np
import pandas as pd

import ispdcorr._color_print as cprint
from ispdcorr.distributions import Betoidal, LTBetoidal
from ispdcorr.errors import InputError, exit_on_error
from ispdcorr.manifest import build_manifest, manifest_path, write_manifest

FUNCTIONS = ("pdf", "cdf", "quantile", "var", "shape")


def evaluate(
    function: str, sigma: float, at: List[float], trunc: Optional[float] = None
) -> pd.DataFrame:
    r"""
    Evaluate a Betoidal function. ``var`` and ``shape`` (the Beta shape with
    the same variance) take no arguments and return a single row.
    """
    dist = Betoidal(sigma) if trunc is None else LTBetoidal(sigma, trunc)

    if function in ("var", "shape"):
        if function == "shape" and trunc is not None:
            raise InputError("The Beta shape equivalent needs an untruncated sigma")
        value = dist.variance if function == "var" else dist.beta_shape_equiv
        return pd.DataFrame({"input": [sigma], "output": [value]})

    if not at:
        raise InputError(f"'{function}' needs --at values")
    values = np.asarray(at, dtype=np.float64)
    output = getattr(dist, function)(values)
    return pd.DataFrame({"input": values, "output": np.atleast_1d(output)})


def _parse_values(text: Optional[str]) -> List[float]:
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"Expected comma separated numbers, got '{text}'")


@click.command()
@click.argument("function", type=click.Choice(FUNCTIONS))
# fmt: off
@click.option(
    "--sigma", type=float, required=True,
    help="Standard deviation of the latent normal variable.",
)
@click.option(
    "--trunc", type=float, default=None,
    help="Left truncation point x* in [0, 1) of the LT-Betoidal distribution.",
)
@click.option(
    "--at", type=str, default=None,
    help="Comma separated points (quantile levels for 'quantile').",
)
@click.option(
    "-o", "--save-to", type=click.Path(), default=None,
    help="Save the table as CSV, with a manifest next to it, instead of printing it.",
)
# fmt: on
@exit_on_error
def dist(
    function: str,
    sigma: float,
    trunc: Optional[float],
    at: Optional[str],
    save_to: Optional[str],
):
    r"""Evaluate the Betoidal distribution: pdf, cdf, quantile, var or shape."""
    table = evaluate(function, sigma, _parse_values(at), trunc)

    if save_to:
        os.makedirs(os.path.dirname(save_to) or os.curdir, exist_ok=True)
        table.to_csv(save_to, index=False, float_format="%.17g")

        config = {"function": function, "sigma": sigma, "trunc": trunc, "at": at}
        write_manifest(
            build_manifest("dist", config, outputs=[save_to]), manifest_path(save_to)
        )
        cprint.green(f"Saved table at {save_to}.")
    else:
        click.echo(table.to_csv(index=False, float_format="%.17g"), nl=False)
