# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

from .simgen import (
    ClusterTriplet,
    PerturbationLevel,
    ScoreDist,
    gen_scores,
    triplet_select,
)
from .simstudy import ScenarioConfig, StudyResult, run_scenario

__all__ = [
    "ClusterTriplet",
    "PerturbationLevel",
    "ScoreDist",
    "gen_scores",
    "triplet_select",
    "ScenarioConfig",
    "StudyResult",
    "run_scenario",
]
