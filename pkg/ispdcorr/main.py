# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import click

import ispdcorr._color_print as cp
from ispdcorr.adjust import adjust
from ispdcorr.dist import dist
from ispdcorr.fit import fit
from ispdcorr.make_cohort import make_cohort
from ispdcorr.simulate import simulate


@click.version_option()
@click.group(invoke_without_command=True)
@click.option("-q", "--quiet", is_flag=True, help="Only print errors.")
@click.pass_context
def main(ctx, quiet: bool):

    cp.set_quiet(quiet)

    # Using `ispdcorr` command by itself is not allowed.
    if ctx.invoked_subcommand is None:
        cp.yellow("ispdcorr: Use ispdcorr --help for usage instructions.")


# Add subcommands to `ispdcorr` group, in the order of a typical analysis:
# simulate or load a cohort, fit the model, adjust the index.
main.add_command(make_cohort)
main.add_command(fit)
main.add_command(adjust)

main.add_command(simulate)
main.add_command(dist)
