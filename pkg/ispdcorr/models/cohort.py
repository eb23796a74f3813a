# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

r"""
Department-level data: the ISPD grid, department records and cohorts, and
reading/writing of cohort CSV files. A cohort file has a header with columns
``dept_id``, ``n_products`` and exactly one of ``scaled_avg`` (scaled
averages) or ``ispd`` (published index values on the half-integer grid).
"""

import enum
import os
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from ispdcorr.distributions.specfun import centered_erf_inv
from ispdcorr.errors import DomainError, InputError

# Default ISPD truncation of a top-tail release (values >= 73 published).
DEFAULT_TRUNCATION: float = 73.0

# Tolerance to accept a value as lying on the half-integer grid.
GRID_TOLERANCE: float = 1e-9


class IspdGrid(object):
    r"""
    The 201 index values ``0, 0.5, ..., 100``. Cell ``j`` (0-based, so
    ``j = 2 s_j``) collects every ``x`` in ``(s_j - 0.25, s_j + 0.25] / 100``;
    the two end cells are clamped to ``[0, 1]`` so that cells partition the
    unit interval. The transformed bounds ``e(x) = erf_inv(2x - 1)`` do not
    depend on model parameters and are computed once here.
    """

    def __init__(self):
        self.values = np.arange(201, dtype=np.float64) / 2.0
        self.lower = np.clip((self.values - 0.25) / 100.0, 0.0, 1.0)
        self.upper = np.clip((self.values + 0.25) / 100.0, 0.0, 1.0)

        # -inf / +inf at the clamped ends.
        self.e_lower = centered_erf_inv(self.lower)
        self.e_upper = centered_erf_inv(self.upper)

    def __len__(self) -> int:
        return self.values.size

    def on_grid(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        doubled = 2.0 * values
        return (
            (np.abs(doubled - np.round(doubled)) <= 2.0 * GRID_TOLERANCE)
            & (values >= -GRID_TOLERANCE)
            & (values <= 100.0 + GRID_TOLERANCE)
        )

    def index_of(self, values: np.ndarray) -> np.ndarray:
        r"""0-based cell index of grid values, rejecting anything off the grid."""
        values = np.asarray(values, dtype=np.float64)
        if not np.all(self.on_grid(values)):
            bad = np.atleast_1d(values)[~np.atleast_1d(self.on_grid(values))]
            raise DomainError(f"Values not on the ISPD half-integer grid: {bad[:5]}")
        return np.round(2.0 * values).astype(np.int64)[()]

    def truncation_point(self, truncation: float) -> float:
        r"""Lower cell bound of a truncation value, eg. 73 -> 0.7275."""
        return float(self.lower[self.index_of(truncation)])


class ObservationKind(enum.Enum):
    SCALED_AVG = "scaled_avg"
    ISPD = "ispd"


@dataclass(frozen=True)
class DeptRecord:
    dept_id: str
    n_products: int
    value: float


@dataclass
class Cohort:
    r"""
    A homogeneous set of department observations: either all scaled averages
    or all ISPD grid values.

    Args:
        records: One record per department.
        kind: Which observation every record carries.
        n_max: The ``N_max`` of the correlation link. Defaults to the largest
            department size; override it when the cohort is a subset.
        truncation: For ISPD cohorts released above a threshold, the smallest
            published grid value (eg. 73). ``None`` means no truncation.
    """

    records: List[DeptRecord]
    kind: ObservationKind
    n_max: Optional[int] = None
    truncation: Optional[float] = None
    grid: IspdGrid = field(default_factory=IspdGrid, repr=False)

    def __post_init__(self):
        if len(self.records) == 0:
            raise InputError("Cohort has no departments")

        ids = [r.dept_id for r in self.records]
        if len(set(ids)) != len(ids):
            dups = sorted({i for i in ids if ids.count(i) > 1})
            raise InputError(f"Duplicate dept_id values: {dups[:5]}")

        self.sizes = np.array([r.n_products for r in self.records], dtype=np.int64)
        self.values = np.array([r.value for r in self.records], dtype=np.float64)

        if np.any(self.sizes < 2):
            bad = self._bad_ids(self.sizes < 2)
            raise InputError(f"Departments need n_products >= 2: {bad}")
        if not np.all(np.isfinite(self.values)):
            bad = self._bad_ids(~np.isfinite(self.values))
            raise InputError(f"Non-finite observations: {bad}")

        if self.n_max is None:
            self.n_max = int(self.sizes.max())
        if self.n_max < self.sizes.max():
            raise InputError(
                f"n_max={self.n_max} is below the largest size {self.sizes.max()}"
            )

        self.cells = None
        if self.kind is ObservationKind.ISPD:
            off_grid = ~self.grid.on_grid(self.values)
            if np.any(off_grid):
                raise InputError(f"ISPD values off the grid: {self._bad_ids(off_grid)}")
            self.cells = self.grid.index_of(self.values)

            if self.truncation is not None:
                self.grid.index_of(self.truncation)
                below = self.values < self.truncation - GRID_TOLERANCE
                if np.any(below):
                    raise InputError(
                        f"ISPD values below truncation {self.truncation}: "
                        f"{self._bad_ids(below)}"
                    )
        elif self.truncation is not None:
            raise InputError("Truncation only applies to cohorts of ISPD values")

    def _bad_ids(self, mask: np.ndarray) -> List[str]:
        return [r.dept_id for r, bad in zip(self.records, mask) if bad][:5]

    def __len__(self) -> int:
        return len(self.records)

    @property
    def ids(self) -> List[str]:
        return [r.dept_id for r in self.records]

    @property
    def truncation_index(self) -> int:
        r"""0-based index of the first published cell (0 without truncation)."""
        if self.truncation is None:
            return 0
        return int(self.grid.index_of(self.truncation))

    @property
    def truncation_point(self) -> float:
        if self.truncation is None:
            return 0.0
        return self.grid.truncation_point(self.truncation)

    @classmethod
    def from_arrays(
        cls,
        sizes: Sequence[int],
        values: Sequence[float],
        kind: ObservationKind,
        n_max: Optional[int] = None,
        truncation: Optional[float] = None,
        ids: Optional[Sequence[str]] = None,
    ) -> "Cohort":
        if ids is None:
            ids = [f"D{idx:04d}" for idx in range(len(sizes))]
        records = [
            DeptRecord(str(_id), int(size), float(value))
            for _id, size, value in zip(ids, sizes, values)
        ]
        return cls(records, kind, n_max=n_max, truncation=truncation)

    def truncate(self, truncation: float) -> "Cohort":
        r"""Keep the departments with ISPD at or above ``truncation``."""
        if self.kind is not ObservationKind.ISPD:
            raise InputError("Only ISPD cohorts can be truncated")

        keep = self.values >= truncation - GRID_TOLERANCE
        records = [r for r, k in zip(self.records, keep) if k]
        return Cohort(records, self.kind, n_max=self.n_max, truncation=truncation)

    def top(self, d_star: int) -> "Cohort":
        r"""
        Keep the ``d_star`` highest ISPD values, truncating at the smallest kept
        value. Ties at that value are all kept, as a published ranking would.
        """
        if self.kind is not ObservationKind.ISPD:
            raise InputError("Only ISPD cohorts can be cut to a top tail")
        if not 1 <= d_star <= len(self):
            raise InputError(f"Cannot keep top {d_star} of {len(self)} departments")

        threshold = float(np.sort(self.values)[::-1][d_star - 1])
        return self.truncate(threshold)


def read_cohort_csv(
    path: str,
    expect: Optional[ObservationKind] = None,
    n_max: Optional[int] = None,
    truncation: Optional[float] = None,
) -> Cohort:
    r"""
    Read a cohort file. Errors name the offending row (1-based, header is row
    1) or column so that malformed files are easy to fix.

    Args:
        path: CSV with columns ``dept_id``, ``n_products`` and one of
            ``scaled_avg`` or ``ispd``.
        expect: Observation kind required by the caller, if any.
        n_max: Override of the link's ``N_max``.
        truncation: Truncation value of an ISPD release.
    """
    if not os.path.exists(path):
        raise InputError(f"Cohort file {path} does not exist")

    try:
        frame = pd.read_csv(path, dtype={"dept_id": str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as err:
        raise InputError(f"Could not parse {path}: {err}")

    for column in ("dept_id", "n_products"):
        if column not in frame.columns:
            raise InputError(f"{path}: missing column '{column}'")

    value_columns = [k.value for k in ObservationKind if k.value in frame.columns]
    if len(value_columns) != 1:
        raise InputError(
            f"{path}: need exactly one of 'scaled_avg' or 'ispd' columns, "
            f"found {value_columns or 'none'}"
        )
    kind = ObservationKind(value_columns[0])
    if expect is not None and kind is not expect:
        raise InputError(
            f"{path}: expected a '{expect.value}' column, found '{kind.value}'"
        )

    # Row-level checks: missing values and non-integer sizes.
    for column in ("dept_id", "n_products", kind.value):
        missing = frame[column].isna().to_numpy()
        if np.any(missing):
            rows = (np.flatnonzero(missing) + 2).tolist()
            raise InputError(f"{path}: missing '{column}' in rows {rows[:5]}")

    sizes = pd.to_numeric(frame["n_products"], errors="coerce").to_numpy()
    bad_size = ~np.isfinite(sizes) | (sizes != np.round(sizes))
    if np.any(bad_size):
        rows = (np.flatnonzero(bad_size) + 2).tolist()
        raise InputError(f"{path}: 'n_products' is not an integer in rows {rows[:5]}")

    values = pd.to_numeric(frame[kind.value], errors="coerce").to_numpy()
    if not np.all(np.isfinite(values)):
        rows = (np.flatnonzero(~np.isfinite(values)) + 2).tolist()
        raise InputError(f"{path}: '{kind.value}' is not numeric in rows {rows[:5]}")

    return Cohort.from_arrays(
        sizes.astype(np.int64),
        values,
        kind,
        n_max=n_max,
        truncation=truncation,
        ids=frame["dept_id"].tolist(),
    )


def write_cohort_csv(cohort: Cohort, path: str):
    frame = pd.DataFrame(
        {
            "dept_id": cohort.ids,
            "n_products": cohort.sizes,
            cohort.kind.value: cohort.values,
        }
    )
    os.makedirs(os.path.dirname(path) or os.curdir, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
