# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

r"""
Simple module to print colorful text to terminal. Everything except errors
can be silenced with :func:`set_quiet`, which simulation workers do so that
parallel replications do not interleave their messages.
"""

from click import echo, style

_QUIET: bool = False


def set_quiet(quiet: bool = True):
    global _QUIET
    _QUIET = quiet


def red(text: str):
    # Errors are always shown.
    echo(style(text, fg="red", bold=True), err=True)


def green(text: str):
    if not _QUIET:
        echo(style(text, fg="green", bold=True))


def yellow(text: str):
    if not _QUIET:
        echo(style(text, fg="yellow", bold=True))


def white(text: str):
    if not _QUIET:
        echo(style(text, fg="white", bold=True))
