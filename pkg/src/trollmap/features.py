"""Feature scoring, correlation inspection and row normalization.

Chi-square scoring here follows the summed-value contingency construction
used for ranking count features: per feature, the observed value for a
class is the feature's total over that class, the expected value is the
feature's grand total shared out by class frequency.  Scores are used for
ranking only; no p-values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Hashable, Optional, Sequence

import numpy as np

from .errors import FeatureError
from .ingest import FEATURE_NAMES

if TYPE_CHECKING:
    from .ingest import AccountProfile


@dataclass(frozen=True)
class FeatureMatrix:
    """n accounts x d named features, finite and non-negative."""

    row_ids: tuple[str, ...]
    columns: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "row_ids", tuple(self.row_ids))
        object.__setattr__(self, "columns", tuple(self.columns))
        if values.ndim != 2:
            raise FeatureError("feature matrix must be 2-dimensional")
        n, d = values.shape
        if n < 1 or d < 1:
            raise FeatureError("feature matrix must have at least one row and one column")
        if len(self.row_ids) != n:
            raise FeatureError("row_ids length does not match matrix rows")
        if len(self.columns) != d:
            raise FeatureError("columns length does not match matrix width")
        if len(set(self.columns)) != d:
            raise FeatureError("column names must be unique")
        if not np.all(np.isfinite(values)):
            raise FeatureError("feature values must be finite")
        if np.any(values < 0):
            raise FeatureError("feature values must be non-negative")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]


def matrix_from_profiles(
    profiles: Sequence["AccountProfile"], order: Optional[Sequence[str]] = None
) -> FeatureMatrix:
    """Build the n x 8 matrix from profiles, optionally in a given id order."""
    by_id = {p.user_id: p for p in profiles}
    ids = list(order) if order is not None else sorted(by_id)
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise FeatureError(f"no profile for user_id(s): {', '.join(missing[:5])}")
    rows = np.array([by_id[i].features.as_tuple() for i in ids], dtype=np.float64)
    return FeatureMatrix(row_ids=tuple(ids), columns=FEATURE_NAMES, values=rows)


@dataclass(frozen=True)
class FeatureScoreReport:
    """Per-feature chi-square scores, sorted descending (ties keep column order)."""

    ranking: tuple[tuple[str, float], ...]
    selected: Optional[tuple[str, ...]] = None

    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.ranking)


def chi2_scores(X: FeatureMatrix, y: Sequence[Hashable]) -> FeatureScoreReport:
    """Score each feature by the summed-value chi-square statistic.

    Per feature f and class c: observed O_c = sum of f over class-c rows,
    expected E_c = (grand total of f) * n_c / n; the score sums
    (O_c - E_c)^2 / E_c over classes, skipping classes with E_c = 0.
    """
    if len(y) != X.n:
        raise FeatureError(f"label count {len(y)} does not match matrix rows {X.n}")
    classes = sorted(set(y), key=repr)
    if len(classes) < 2:
        raise FeatureError("chi-square scoring needs at least two classes")

    labels = np.asarray([classes.index(v) for v in y])
    n = X.n
    totals = X.values.sum(axis=0)
    scores = np.zeros(X.d, dtype=np.float64)
    for code in range(len(classes)):
        mask = labels == code
        n_c = int(mask.sum())
        observed = X.values[mask].sum(axis=0)
        expected = totals * (n_c / n)
        nonzero = expected > 0
        scores[nonzero] += (observed[nonzero] - expected[nonzero]) ** 2 / expected[nonzero]

    order = sorted(range(X.d), key=lambda j: (-scores[j], j))
    ranking = tuple((X.columns[j], float(scores[j])) for j in order)
    return FeatureScoreReport(ranking=ranking)


def select_top_k(report: FeatureScoreReport, k: int) -> list[str]:
    """First k feature names of the sorted report."""
    if k <= 0:
        raise FeatureError("k must be positive")
    if k > len(report.ranking):
        raise FeatureError(f"k={k} exceeds the {len(report.ranking)} scored features")
    return [name for name, _ in report.ranking[:k]]


@dataclass(frozen=True)
class CorrelationResult:
    """Pairwise Pearson coefficients; undefined entries are NaN and flagged."""

    columns: tuple[str, ...]
    matrix: np.ndarray
    zero_variance: tuple[str, ...] = field(default=())


def pearson_correlation_matrix(X: FeatureMatrix) -> CorrelationResult:
    """d x d symmetric Pearson matrix with exact 1.0 diagonal.

    Zero-variance columns cannot be correlated; their entries are reported
    as NaN and the column names are returned in ``zero_variance`` rather
    than fabricating a value.
    """
    values = X.values
    centered = values - values.mean(axis=0)
    scale = np.sqrt((centered**2).sum(axis=0))
    valid_idx = np.nonzero(scale > 0)[0]

    matrix = np.full((X.d, X.d), np.nan, dtype=np.float64)
    if valid_idx.size:
        normalized = centered[:, valid_idx] / scale[valid_idx]
        sub = normalized.T @ normalized
        sub = np.clip(0.5 * (sub + sub.T), -1.0, 1.0)
        np.fill_diagonal(sub, 1.0)
        matrix[np.ix_(valid_idx, valid_idx)] = sub
    flagged = tuple(X.columns[j] for j in range(X.d) if scale[j] == 0)
    return CorrelationResult(columns=X.columns, matrix=matrix, zero_variance=flagged)


def l1_normalize(X: FeatureMatrix) -> FeatureMatrix:
    """Divide each row by its L1 norm so every account's row sums to 1."""
    sums = np.abs(X.values).sum(axis=1)
    zero_rows = np.nonzero(sums == 0)[0]
    if zero_rows.size:
        offenders = ", ".join(X.row_ids[i] for i in zero_rows[:5])
        raise FeatureError(f"all-zero feature row(s) cannot be normalized: {offenders}")
    return FeatureMatrix(
        row_ids=X.row_ids, columns=X.columns, values=X.values / sums[:, None]
    )
