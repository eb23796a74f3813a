# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

r"""
Exceptions raised by ``ispdcorr``. Every exception carries the exit code that
the command line front end uses when it aborts because of it:

    0: success, 2: input error, 3: convergence failure, 4: infeasible setup.
"""

import functools
import sys

import ispdcorr._color_print as cprint


class IspdError(Exception):
    r"""Base class of all errors raised by this package."""

    exit_code: int = 2


class DomainError(IspdError, ValueError):
    r"""An argument lies outside the domain of a function."""


class DegenerateError(IspdError, ValueError):
    r"""Data or parameters make an estimate or a distribution degenerate."""


class InputError(IspdError):
    r"""Malformed input file or inconsistent command line options."""


class ConvergenceError(IspdError):
    r"""Likelihood maximization failed from every starting point."""

    exit_code = 3

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class InfeasibleError(IspdError):
    r"""A requested configuration cannot be realized (eg. a target correlation)."""

    exit_code = 4


def exit_on_error(command):
    r"""
    Wrap a command so that package errors are printed in red and end the
    process with the error's exit code instead of a traceback.
    """

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except IspdError as err:
            cprint.red(f"{type(err).__name__}: {err}")
            for diag in getattr(err, "diagnostics", []):
                cprint.red(f"  {diag}")
            sys.exit(err.exit_code)

    return wrapper
