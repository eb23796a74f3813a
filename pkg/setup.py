# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import codecs
import os

from setuptools import find_packages, setup


def get_version(rel_path: str):

    here = os.path.abspath(os.path.dirname(__file__))
    with codecs.open(os.path.join(here, rel_path), "r") as fp:
        for line in fp.read().splitlines():
            if line.startswith("__version__"):
                delim = '"' if '"' in line else "'"
                return line.split(delim)[1]


setup(
    name="ispdcorr",
    version=get_version("ispdcorr/__init__.py"),
    packages=find_packages(exclude=["tests"]),
    python_requires=">=3.8",
    install_requires=[
        "click>=7.0.0",
        "numpy>=1.20.0",
        "pandas>=1.2.0",
        "scipy>=1.6.0",
        "tqdm>=4.36.0",
    ],
    extras_require={"test": ["pytest>=6.0.0"]},
    entry_points={"console_scripts": ["ispdcorr=ispdcorr.main:main"]},
    license="MIT",
    zip_safe=True,
)
