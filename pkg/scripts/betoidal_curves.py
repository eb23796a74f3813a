"""
Write CSV data for Betoidal density plots into an output directory:

    {output_dir}/betoidal_density.csv : pdf on a grid of x for several sigma
    {output_dir}/beta_shape.csv       : sigma and the shape a of Beta(a, a)
                                        with the same variance
    {output_dir}/beta_comparison.csv  : Betoidal(sigma) against Beta(a, a)
                                        at the comparison values of sigma
"""
import argparse
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats

from ispdcorr.distributions import Betoidal

# fmt: off
parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument(
    "--output-dir", default="./results/curves", help="Save CSV files here.",
)
parser.add_argument(
    "--sigmas", default="0.5,0.75,1,1.5,2.5",
    help="Comma separated values of sigma for the density curves.",
)
parser.add_argument(
    "--compare", default="0.5,2.5",
    help="Values of sigma to compare against their variance-matched Beta.",
)
parser.add_argument(
    "-n", "--points", type=int, default=999,
    help="Number of interior x points, at i / (n + 1).",
)
# fmt: on


def main(_A: argparse.Namespace):

    output_dir = Path(_A.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    x = np.arange(1, _A.points + 1) / (_A.points + 1)
    sigmas = [float(s) for s in _A.sigmas.split(",")]

    density = pd.DataFrame({"x": x})
    for sigma in sigmas:
        density[f"sigma_{sigma:g}"] = Betoidal(sigma).pdf(x)
    density.to_csv(
        output_dir / "betoidal_density.csv", index=False, float_format="%.17g"
    )

    # Shape a of the variance-matched Beta over a range of sigma.
    sigma_grid = np.linspace(0.1, 5.0, 50)
    shapes = pd.DataFrame(
        {
            "sigma": sigma_grid,
            "variance": [Betoidal(s).variance for s in sigma_grid],
            "beta_shape": [Betoidal(s).beta_shape_equiv for s in sigma_grid],
        }
    )
    shapes.to_csv(output_dir / "beta_shape.csv", index=False, float_format="%.17g")

    rows = []
    for sigma in (float(s) for s in _A.compare.split(",")):
        betoidal = Betoidal(sigma)
        a = betoidal.beta_shape_equiv
        beta_pdf = stats.beta(a, a).pdf(x)
        print(f"sigma = {sigma:g}: Beta shape a = {a:.4f}")
        rows.append(
            pd.DataFrame(
                {
                    "sigma": sigma,
                    "a": a,
                    "x": x,
                    "betoidal": betoidal.pdf(x),
                    "beta": beta_pdf,
                }
            )
        )
    comparison = pd.concat(rows, ignore_index=True)
    comparison.to_csv(
        output_dir / "beta_comparison.csv", index=False, float_format="%.17g"
    )
    print(f"Saved curves in {output_dir}")


if __name__ == "__main__":
    _A = parser.parse_args()

    print("Command line args:")
    for arg in vars(_A):
        print(f"{arg:<20}: {getattr(_A, arg)}")

    main(_A)
