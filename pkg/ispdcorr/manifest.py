# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

r"""
Run manifests: a JSON document written next to every output, recording what
is needed to re-run the command. It carries no timestamp, so re-running a
seeded command reproduces it byte for byte.
"""

import hashlib
import json
import os
from typing import Any, Dict, Optional, Sequence

import ispdcorr


def file_digest(path: str) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            sha.update(chunk)
    return sha.hexdigest()


def build_manifest(
    command: str,
    config: Dict[str, Any],
    inputs: Sequence[str] = (),
    seed: Optional[int] = None,
    outputs: Sequence[str] = (),
) -> Dict[str, Any]:
    return {
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": {path: file_digest(path) for path in inputs},
        "outputs": [os.path.basename(path) for path in outputs],
        "version": ispdcorr.__version__,
    }


def write_manifest(manifest: Dict[str, Any], path: str):
    os.makedirs(os.path.dirname(path) or os.curdir, exist_ok=True)
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def manifest_path(output: str) -> str:
    r"""``results/fit.json`` -> ``results/fit.manifest.json``."""
    return f"{os.path.splitext(output)[0]}.manifest.json"
