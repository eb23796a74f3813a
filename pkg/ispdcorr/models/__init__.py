# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

from .cohort import Cohort, DeptRecord, IspdGrid, ObservationKind, read_cohort_csv
from .corrmodel import ModelKind, ModelTheta, SizeContext
from .estimation import FitConfig, FitResult, fit, fit_likelihood, fit_nested
from .likelihoods import (
    CoarseLikelihood,
    ScaledAvgLikelihood,
    TruncatedCoarseLikelihood,
    make_likelihood,
)

__all__ = [
    "Cohort",
    "DeptRecord",
    "IspdGrid",
    "ObservationKind",
    "read_cohort_csv",
    "ModelKind",
    "ModelTheta",
    "SizeContext",
    "FitConfig",
    "FitResult",
    "fit",
    "fit_likelihood",
    "fit_nested",
    "CoarseLikelihood",
    "ScaledAvgLikelihood",
    "TruncatedCoarseLikelihood",
    "make_likelihood",
]
