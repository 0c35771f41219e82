"""Splits, metrics and the two cross-dataset validation procedures.

Zero-denominator metrics are reported as 0.0 with an explicit flag rather
than NaN, so aggregates stay finite even when a class never gets predicted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from . import rng as rngmod
from .errors import EvaluationError
from .taxonomy import CATEGORIES, CATEGORY_INDEX, Category, LabelSet

N_CLASSES = len(CATEGORIES)


@dataclass(frozen=True)
class ConfusionMatrix:
    """4x4 counts: rows are true categories, columns predicted."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.shape != (N_CLASSES, N_CLASSES):
            raise EvaluationError(f"confusion matrix must be {N_CLASSES}x{N_CLASSES}")
        if np.any(counts < 0):
            raise EvaluationError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion_matrix(y_true: Sequence[Category], y_pred: Sequence[Category]) -> ConfusionMatrix:
    if len(y_true) != len(y_pred):
        raise EvaluationError(
            f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted"
        )
    if len(y_true) == 0:
        raise EvaluationError("cannot evaluate zero samples")
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        counts[CATEGORY_INDEX[t], CATEGORY_INDEX[p]] += 1
    return ConfusionMatrix(counts=counts)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassificationReport:
    per_class: Mapping[Category, ClassMetrics]
    weighted_f1: float
    zero_division: tuple[str, ...]
    confusion: ConfusionMatrix

    def to_json_dict(self) -> dict:
        return {
            "per_class": {
                c.value: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for c, m in self.per_class.items()
            },
            "weighted_f1": self.weighted_f1,
            "zero_division": list(self.zero_division),
            "confusion": [[int(v) for v in row] for row in self.confusion.counts],
        }

    def to_text(self) -> str:
        lines = [f"{'category':<22}{'precision':>10}{'recall':>10}{'f1':>10}{'support':>10}"]
        for c in CATEGORIES:
            m = self.per_class[c]
            lines.append(
                f"{c.value:<22}{m.precision:>10.4f}{m.recall:>10.4f}{m.f1:>10.4f}{m.support:>10d}"
            )
        lines.append(f"{'weighted f1':<22}{'':>10}{'':>10}{self.weighted_f1:>10.4f}")
        return "\n".join(lines)


def report_from_confusion(cm: ConfusionMatrix) -> ClassificationReport:
    per_class: dict[Category, ClassMetrics] = {}
    flags: list[str] = []
    weighted_sum = 0.0
    total_support = 0
    for idx, category in enumerate(CATEGORIES):
        tp = int(cm.counts[idx, idx])
        fp = int(cm.counts[:, idx].sum()) - tp
        fn = int(cm.counts[idx, :].sum()) - tp
        support = tp + fn
        if tp + fp > 0:
            precision = tp / (tp + fp)
        else:
            precision = 0.0
            flags.append(f"precision:{category.value}")
        if tp + fn > 0:
            recall = tp / (tp + fn)
        else:
            recall = 0.0
            flags.append(f"recall:{category.value}")
        if precision + recall > 0:
            f1 = 2.0 * precision * recall / (precision + recall)
        else:
            f1 = 0.0
            flags.append(f"f1:{category.value}")
        per_class[category] = ClassMetrics(precision=precision, recall=recall, f1=f1, support=support)
        weighted_sum += support * f1
        total_support += support
    weighted_f1 = weighted_sum / total_support if total_support else 0.0
    return ClassificationReport(
        per_class=per_class,
        weighted_f1=weighted_f1,
        zero_division=tuple(flags),
        confusion=cm,
    )


def classification_report(
    y_true: Sequence[Category], y_pred: Sequence[Category]
) -> ClassificationReport:
    """Per-class precision/recall/f1 plus the support-weighted f1."""
    return report_from_confusion(confusion_matrix(y_true, y_pred))


# ---------------------------------------------------------------------------
# Stratified splitting

def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def _class_indices(y: Sequence[Category]) -> dict[Category, list[int]]:
    groups: dict[Category, list[int]] = {}
    for i, label in enumerate(y):
        groups.setdefault(label, []).append(i)
    return groups


def stratified_split(
    y: Sequence[Category], test_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint covering (train, test) index arrays, class-proportional.

    Per-class test quotas start from n_c * test_fraction and are corrected
    by largest remainder so the test size equals round(n * test_fraction).
    """
    if not 0.0 < test_fraction < 1.0:
        raise EvaluationError("test_fraction must be in (0, 1)")
    n = len(y)
    if n == 0:
        raise EvaluationError("cannot split zero samples")
    groups = _class_indices(y)
    for category, members in groups.items():
        if len(members) < 2:
            raise EvaluationError(
                f"class {category.value} has {len(members)} sample(s); need at least 2"
            )

    target_total = _round_half_up(n * test_fraction)
    ordered = sorted(groups, key=CATEGORY_INDEX.get)
    quotas = {c: len(groups[c]) * test_fraction for c in ordered}
    take = {c: int(np.floor(quotas[c])) for c in ordered}
    remaining = target_total - sum(take.values())
    # hand out the remainder by largest fractional part; never exceed a class
    priority = sorted(
        ordered,
        key=lambda c: (-(quotas[c] - np.floor(quotas[c])), -len(groups[c]), CATEGORY_INDEX[c]),
    )
    cursor = 0
    while remaining > 0 and any(take[c] < len(groups[c]) for c in ordered):
        c = priority[cursor % len(priority)]
        if take[c] < len(groups[c]):
            take[c] += 1
            remaining -= 1
        cursor += 1

    test: list[int] = []
    for c in ordered:
        members = np.asarray(groups[c])
        shuffled = members[rngmod.stream(seed, "split", CATEGORY_INDEX[c]).permutation(len(members))]
        test.extend(int(i) for i in shuffled[: take[c]])
    test_set = set(test)
    train = np.asarray([i for i in range(n) if i not in test_set], dtype=np.int64)
    return train, np.asarray(sorted(test), dtype=np.int64)


def stratified_kfold(
    y: Sequence[Category], k: int, seed: int
) -> list[tuple[np.ndarray, np.ndarray]]:
    """k disjoint covering folds; per-class fold counts differ by at most 1."""
    if k < 2:
        raise EvaluationError("k must be at least 2")
    groups = _class_indices(y)
    for category, members in groups.items():
        if len(members) < k:
            raise EvaluationError(
                f"class {category.value} has {len(members)} sample(s); need at least k={k}"
            )
    fold_members: list[list[int]] = [[] for _ in range(k)]
    for c in sorted(groups, key=CATEGORY_INDEX.get):
        members = np.asarray(groups[c])
        shuffled = members[rngmod.stream(seed, "fold", CATEGORY_INDEX[c]).permutation(len(members))]
        base, extra = divmod(len(members), k)
        start = 0
        for fold in range(k):
            size = base + (1 if fold < extra else 0)
            fold_members[fold].extend(int(i) for i in shuffled[start : start + size])
            start += size
    n = len(y)
    folds = []
    for fold in range(k):
        test = np.asarray(sorted(fold_members[fold]), dtype=np.int64)
        test_set = set(fold_members[fold])
        train = np.asarray([i for i in range(n) if i not in test_set], dtype=np.int64)
        folds.append((train, test))
    return folds


# ---------------------------------------------------------------------------
# Cross-dataset validation

@dataclass(frozen=True)
class OverlapReport:
    """Agreement of one of our categories with a reference handle group."""

    target_category: Category
    total: int
    matched: int
    rate: Optional[float]
    misclassified: tuple[tuple[str, Category], ...]
    warning: Optional[str] = None

    def to_json_dict(self) -> dict:
        return {
            "target_category": self.target_category.value,
            "total": self.total,
            "matched": self.matched,
            "rate": self.rate,
            "misclassified": [[uid, c.value] for uid, c in self.misclassified],
            "warning": self.warning,
        }


def overlap_validation(
    our_labels: LabelSet,
    target_category: Category,
    reference_handles: set[str],
) -> OverlapReport:
    """Check our labels against a reference group of handles.

    The joinable universe is the reference handles we also labeled; a match
    is a joint account we put in ``target_category``.  Misses carry the
    category our labels actually assign.  An empty join yields total 0 with
    a warning instead of a fabricated rate.
    """
    if not reference_handles:
        raise EvaluationError("reference handle set is empty")
    joint = sorted(h for h in reference_handles if h in our_labels)
    if not joint:
        return OverlapReport(
            target_category=target_category,
            total=0,
            matched=0,
            rate=None,
            misclassified=(),
            warning="no overlap between reference handles and labeled accounts",
        )
    misses = [
        (uid, our_labels.category_of(uid))
        for uid in joint
        if our_labels.category_of(uid) is not target_category
    ]
    matched = len(joint) - len(misses)
    return OverlapReport(
        target_category=target_category,
        total=len(joint),
        matched=matched,
        rate=matched / len(joint),
        misclassified=tuple(misses),
    )


@dataclass(frozen=True)
class AgreementReport:
    """Category agreement between two labelings over their shared accounts."""

    total: int
    matches: int
    rate: float
    per_category: Mapping[Category, tuple[int, int]]  # (actual count, predicted count)

    def to_json_dict(self) -> dict:
        return {
            "total": self.total,
            "matches": self.matches,
            "rate": self.rate,
            "per_category": {
                c.value: {"actual": a, "predicted": p}
                for c, (a, p) in self.per_category.items()
            },
        }

    def counts_csv(self) -> str:
        lines = ["category,actual,predicted"]
        for c in CATEGORIES:
            actual, predicted = self.per_category[c]
            lines.append(f"{c.value},{actual},{predicted}")
        return "\n".join(lines) + "\n"


def agreement_validation(manual: LabelSet, predicted: LabelSet) -> AgreementReport:
    """Compare a reference labeling with predictions on the shared accounts."""
    shared = sorted(manual.ids() & predicted.ids())
    if not shared:
        raise EvaluationError("manual and predicted label sets share no accounts")
    matches = sum(1 for uid in shared if manual.category_of(uid) is predicted.category_of(uid))
    per_category = {}
    for c in CATEGORIES:
        actual = sum(1 for uid in shared if manual.category_of(uid) is c)
        pred = sum(1 for uid in shared if predicted.category_of(uid) is c)
        per_category[c] = (actual, pred)
    return AgreementReport(
        total=len(shared),
        matches=matches,
        rate=matches / len(shared),
        per_category=per_category,
    )
