# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import json
import os
from typing import Any, Dict, Optional

import click
import numpy as np

import ispdcorr._color_print as cprint
from ispdcorr.errors import InputError, exit_on_error
from ispdcorr.manifest import build_manifest, manifest_path, write_manifest
from ispdcorr.models.cohort import DEFAULT_TRUNCATION, ObservationKind, read_cohort_csv
from ispdcorr.models.corrmodel import ModelKind, SizeContext, rho_d, sigma_d
from ispdcorr.models.estimation import (
    FitConfig,
    FitResult,
    LrtResult,
    fit_likelihood,
    fit_nested,
    lrt,
    std_errors,
    wald_test,
)
from ispdcorr.models.likelihoods import LIKELIHOOD_MODES, make_likelihood
from ispdcorr.simulation.simstudy import summarize


def _lrt_dict(test: Optional[LrtResult]) -> Optional[Dict[str, Any]]:
    if test is None:
        return None
    return {"stat": test.stat, "df": test.df, "p_value": test.p_value}


def _param_entries(result: FitResult, param: str) -> Dict[str, Any]:
    r"""Estimate, standard error and two-sided Wald p-value of one parameter."""
    value = getattr(result.theta_hat, param)
    index = {"alpha": 0, "beta": 1}[param]
    if index >= result.kind.free_params or not result.negative_definite:
        return {param: value, f"se_{param}": None, f"p_{param}": None}
    return {
        param: value,
        f"se_{param}": float(std_errors(result)[index]),
        f"p_{param}": wald_test(result, param, 0.0).p_value,
    }


def build_report(
    result: FitResult,
    ctx: SizeContext,
    lrt_vs_ncm: Optional[LrtResult] = None,
    lrt_vs_ccm: Optional[LrtResult] = None,
) -> Dict[str, Any]:
    r"""Fit report with the fields of a published estimation table."""
    rho = np.atleast_1d(rho_d(result.theta_hat, ctx))
    sigma = np.atleast_1d(sigma_d(result.theta_hat, ctx))

    report: Dict[str, Any] = {"model": result.kind.value, "mode": result.mode}
    report.update(_param_entries(result, "alpha"))
    report.update(_param_entries(result, "beta"))
    report.update(
        {
            "loglik": result.loglik,
            "lrt_vs_ncm": _lrt_dict(lrt_vs_ncm),
            "lrt_vs_ccm": _lrt_dict(lrt_vs_ccm),
            "rho_hat": summarize(rho)._asdict(),
            "sigma_hat": summarize(sigma)._asdict(),
            "n_depts": result.n_depts,
            "n_max": ctx.n_max,
            "converged": result.converged,
            "negative_definite": result.negative_definite,
            "grad_norm": result.grad_norm,
            "iterations": result.iterations,
            "n_starts_used": result.n_starts_used,
            "floored_depts": list(result.floored),
        }
    )
    if result.kind is ModelKind.FCM and result.negative_definite:
        report["p_beta_less"] = wald_test(result, "beta", 0.0, "less").p_value
    return report


def _print_report(report: Dict[str, Any]):
    def fmt(value):
        return "-" if value is None else f"{value:.4f}"

    model, mode, d = report["model"].upper(), report["mode"], report["n_depts"]
    cprint.white(f"{model} fit ({mode}, D={d}):")
    for param in ("alpha", "beta"):
        cprint.white(
            f"  {param:<6} {fmt(report[param])}  se {fmt(report['se_' + param])}"
            f"  p {fmt(report['p_' + param])}"
        )
    cprint.white(f"  loglik {fmt(report['loglik'])}")
    for key in ("lrt_vs_ncm", "lrt_vs_ccm"):
        if report[key] is not None:
            test = report[key]
            cprint.white(f"  {key} {fmt(test['stat'])}  p {fmt(test['p_value'])}")
    for key in ("rho_hat", "sigma_hat"):
        row = "  ".join(f"{name} {value:.4f}" for name, value in report[key].items())
        cprint.white(f"  {key:<9} {row}")


@click.command()
# fmt: off
@click.option(
    "-i", "--input", "input_path", type=click.Path(exists=True), required=True,
    help="""Cohort CSV with columns dept_id, n_products and one of scaled_avg
    or ispd.""",
)
@click.option(
    "-m", "--mode", type=click.Choice(sorted(LIKELIHOOD_MODES)), default="micro",
    help="""Likelihood: 'micro' for scaled averages, 'coarse' for ISPD values,
    'coarse-trunc' for ISPD values released above a truncation value.""",
)
@click.option(
    "--model", type=click.Choice([k.value for k in ModelKind]), default="fcm",
    help="Correlation model to fit. Nested models are fitted too for the LRTs.",
)
@click.option(
    "--n-max", type=int, default=None,
    help="Largest department size of the link. Defaults to the input maximum.",
)
@click.option(
    "--trunc", type=float, default=None,
    help=f"Truncation value of 'coarse-trunc' inputs [default: {DEFAULT_TRUNCATION}].",
)
@click.option(
    "--starts", type=str, default=None,
    help="Starting grid as 'A1,A2,...:B1,B2,...'. Defaults to 0..5 x -0.02..0.",
)
@click.option(
    "--method", type=click.Choice(["newton", "bfgs"]), default="newton",
    help="Optimizer run from every starting point.",
)
@click.option(
    "-o", "--save-to", type=click.Path(), default="./results/fit.json",
    help="Path to save the JSON fit report. A manifest is saved next to it.",
)
# fmt: on
@exit_on_error
def fit(
    input_path: str,
    mode: str,
    model: str,
    n_max: Optional[int],
    trunc: Optional[float],
    starts: Optional[str],
    method: str,
    save_to: str,
):
    r"""
    Fit the size-dependent correlation model to a cohort of departments by
    maximum likelihood, and compare it with its nested models.
    """
    if mode == "coarse-trunc":
        trunc = DEFAULT_TRUNCATION if trunc is None else trunc
    elif trunc is not None:
        raise InputError("--trunc only applies to --mode coarse-trunc")

    expect = ObservationKind.SCALED_AVG if mode == "micro" else ObservationKind.ISPD
    cohort = read_cohort_csv(input_path, expect=expect, n_max=n_max, truncation=trunc)
    cprint.white(
        f"Read {len(cohort)} departments from {input_path} (n_max={cohort.n_max})."
    )

    cfg = FitConfig(method=method, verbose=True)
    if starts is not None:
        cfg.starts = FitConfig.parse_starts(starts)

    lik = make_likelihood(cohort, mode)
    kind = ModelKind(model)
    if kind is ModelKind.FCM:
        nested = fit_nested(lik, cfg)
        result = nested.fits[ModelKind.FCM]
        tests = (nested.lrt_fcm_ncm, nested.lrt_fcm_ccm)
    elif kind is ModelKind.CCM:
        result = fit_likelihood(lik, kind, cfg, extra_starts=[(0.0, 0.0)])
        tests = (lrt(result, fit_likelihood(lik, ModelKind.NCM, cfg)), None)
    else:
        result = fit_likelihood(lik, kind, cfg)
        tests = (None, None)

    if not result.negative_definite:
        cprint.yellow("Hessian is not negative definite at the optimum: no std errors.")
    if result.floored:
        n_floored = len(result.floored)
        cprint.yellow(f"Cell probabilities floored for {n_floored} departments.")

    report = build_report(result, lik.ctx, *tests)
    _print_report(report)

    os.makedirs(os.path.dirname(save_to) or os.curdir, exist_ok=True)
    with open(save_to, "w") as f:
        json.dump(report, f, indent=2)
        f.write("\n")

    config = {
        "mode": mode,
        "model": model,
        "n_max": cohort.n_max,
        "trunc": trunc,
        "starts": [list(s) for s in cfg.starts],
        "method": method,
    }
    write_manifest(
        build_manifest("fit", config, inputs=[input_path], outputs=[save_to]),
        manifest_path(save_to),
    )
    cprint.green(f"Saved fit report at {save_to}.")
