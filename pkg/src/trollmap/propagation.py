"""Temporal hashtag label propagation.

The timeline is tiled into fixed six-calendar-month spans.  Within each
span, every active account becomes a binary column vector over that span's
hashtag vocabulary (used at least once -> 1).  Each unlabeled account gets
a provisional per-span category from its most cosine-similar labeled
account, and the final category is the mode of those provisional labels
across spans.  Vocabularies are rebuilt per span on purpose: tag usage is
bursty, and a tag that dominates one span may vanish from the next.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import EmptyInputError, SpanConfigError, TrollmapError
from .hashtags import EMPTY_MARKER, canonicalize_hashtag  # noqa: F401  (re-export)
from .ingest import AccountProfile
from .taxonomy import CATEGORY_INDEX, Category, Label, LabelSet, LabelSource

SPAN_MONTHS = 6


@dataclass(frozen=True)
class TimeSpan:
    index: int
    start: datetime
    end: datetime

    def contains(self, moment: datetime) -> bool:
        return self.start <= moment < self.end


def _month_aligned(moment: datetime) -> bool:
    return (
        moment.day == 1
        and moment.hour == 0
        and moment.minute == 0
        and moment.second == 0
        and moment.microsecond == 0
    )


def _add_months(moment: datetime, months: int) -> datetime:
    total = moment.year * 12 + (moment.month - 1) + months
    return moment.replace(year=total // 12, month=total % 12 + 1)


def partition_spans(range_start: datetime, range_end: datetime) -> list[TimeSpan]:
    """Tile [range_start, range_end) into whole six-calendar-month spans."""
    if range_start.tzinfo is None:
        range_start = range_start.replace(tzinfo=timezone.utc)
    if range_end.tzinfo is None:
        range_end = range_end.replace(tzinfo=timezone.utc)
    if range_start >= range_end:
        raise SpanConfigError("range_start must precede range_end")
    if not _month_aligned(range_start) or not _month_aligned(range_end):
        raise SpanConfigError("span range boundaries must be month-aligned (first of month, midnight)")
    months = (range_end.year - range_start.year) * 12 + (range_end.month - range_start.month)
    if months % SPAN_MONTHS != 0:
        raise SpanConfigError(
            f"range covers {months} months; must be a whole multiple of {SPAN_MONTHS}"
        )
    spans = []
    cursor = range_start
    for index in range(months // SPAN_MONTHS):
        nxt = _add_months(cursor, SPAN_MONTHS)
        spans.append(TimeSpan(index=index, start=cursor, end=nxt))
        cursor = nxt
    return spans


@dataclass(frozen=True)
class SpanVectorSet:
    """Binary hashtag vectors of one span.

    ``U`` holds unlabeled actors' columns, ``V`` labeled actors' columns;
    both are m x columns arrays over the span vocabulary.  Every column has
    at least one nonzero entry: actors with no in-span tags are excluded.
    """

    span: TimeSpan
    vocabulary: tuple[str, ...]
    U: np.ndarray
    V: np.ndarray
    u_ids: tuple[str, ...]
    v_ids: tuple[str, ...]

    @property
    def skipped(self) -> bool:
        """True when no labeled actor was active, so nothing can propagate."""
        return len(self.v_ids) == 0


def build_span_vectors(
    span: TimeSpan,
    profiles: Iterable[AccountProfile],
    labels: LabelSet,
) -> SpanVectorSet:
    """Assemble the span's vocabulary and binary actor columns.

    Labeled actors (present in ``labels``) become V columns, the rest U
    columns.  Membership is binary: any number of uses maps to 1.  The
    empty canonical marker never enters the vocabulary.
    """
    active_u: dict[str, set[str]] = {}
    active_v: dict[str, set[str]] = {}
    for profile in profiles:
        tags = {
            tag
            for moment, tag in profile.hashtag_history
            if tag != EMPTY_MARKER and span.contains(moment)
        }
        if not tags:
            continue
        bucket = active_v if profile.user_id in labels else active_u
        bucket[profile.user_id] = tags

    vocabulary = sorted(set().union(*active_u.values(), *active_v.values()))
    tag_index = {tag: i for i, tag in enumerate(vocabulary)}
    m = len(vocabulary)

    def columns(active: dict[str, set[str]]) -> tuple[tuple[str, ...], np.ndarray]:
        ids = tuple(sorted(active))
        matrix = np.zeros((m, len(ids)), dtype=np.uint8)
        for j, user_id in enumerate(ids):
            for tag in active[user_id]:
                matrix[tag_index[tag], j] = 1
        return ids, matrix

    u_ids, U = columns(active_u)
    v_ids, V = columns(active_v)
    return SpanVectorSet(span=span, vocabulary=tuple(vocabulary), U=U, V=V, u_ids=u_ids, v_ids=v_ids)


def cosine_similarity(u: Sequence[float], v: Sequence[float]) -> float:
    """Cosine of the angle between two vectors; in [0, 1] for binary inputs.

    The denominator is computed as sqrt(|u||v|) in one root so that equal
    ratios of integer dot products collide exactly.
    """
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise TrollmapError("cosine similarity needs two equal-length vectors")
    na = float(a @ a)
    nb = float(b @ b)
    if na == 0.0 or nb == 0.0:
        raise TrollmapError("cosine similarity is undefined for a zero vector")
    return float(a @ b) / float(np.sqrt(na * nb))


def propagate_span(sv: SpanVectorSet, labels: LabelSet) -> list[tuple[str, Category, float]]:
    """Assign each U column the category of its most similar V column.

    Argmax ties go to the majority category among the tied neighbors, then
    to canonical category order.  Returns (u_id, category, best score) per
    unlabeled actor, in u_id order.
    """
    if sv.skipped:
        raise TrollmapError(f"span {sv.span.index} has no labeled actors; nothing to propagate")
    for v_id in sv.v_ids:
        if v_id not in labels:
            raise TrollmapError(f"labeled column {v_id!r} missing from label set")
    if len(sv.u_ids) == 0:
        return []

    U = sv.U.astype(np.float64)
    V = sv.V.astype(np.float64)
    dots = U.T @ V
    norms = np.sqrt(np.outer(U.sum(axis=0), V.sum(axis=0)))
    similarity = dots / norms

    v_categories = [labels.category_of(v_id) for v_id in sv.v_ids]
    assignments = []
    for i, u_id in enumerate(sv.u_ids):
        row = similarity[i]
        best = row.max()
        tied = np.nonzero(row == best)[0]
        if tied.size == 1:
            category = v_categories[tied[0]]
        else:
            votes = Counter(v_categories[j] for j in tied)
            top = max(votes.values())
            contenders = [c for c, count in votes.items() if count == top]
            category = min(contenders, key=CATEGORY_INDEX.get)
        assignments.append((u_id, category, float(best)))
    return assignments


@dataclass(frozen=True)
class PropagationResult:
    user_id: str
    trail: tuple[tuple[int, Category, float], ...]
    final: Category
    mode_count: int
    span_count: int
    tie_broken: bool

    @property
    def frequency(self) -> float:
        return self.mode_count / self.span_count


def aggregate_modes(
    per_actor: Mapping[str, Sequence[tuple[int, Category, float]]],
) -> tuple[list[PropagationResult], list[str]]:
    """Collapse per-span provisional labels into one category per actor.

    The final category is the most frequent provisional one; multi-mode
    ties are broken by higher mean similarity among the tied categories,
    then canonical order, and flagged.  Actors with no provisional labels
    are returned separately as unresolved.
    """
    results = []
    unresolved = []
    for user_id in sorted(per_actor):
        trail = sorted(per_actor[user_id], key=lambda item: item[0])
        if not trail:
            unresolved.append(user_id)
            continue
        counts = Counter(category for _, category, _ in trail)
        top = max(counts.values())
        modes = [c for c, count in counts.items() if count == top]
        tie_broken = len(modes) > 1
        if tie_broken:
            mean_score = {
                c: float(np.mean([s for _, cat, s in trail if cat is c])) for c in modes
            }
            best_mean = max(mean_score.values())
            modes = [c for c in modes if mean_score[c] == best_mean]
        final = min(modes, key=CATEGORY_INDEX.get)
        results.append(
            PropagationResult(
                user_id=user_id,
                trail=tuple(trail),
                final=final,
                mode_count=top,
                span_count=len(trail),
                tie_broken=tie_broken,
            )
        )
    return results, unresolved


@dataclass(frozen=True)
class PropagationReport:
    results: tuple[PropagationResult, ...]
    unresolved: tuple[str, ...]
    skipped_spans: tuple[int, ...]

    def as_label_set(self) -> LabelSet:
        return LabelSet(
            (r.user_id, Label(r.final, LabelSource.HASHTAG_PROPAGATED)) for r in self.results
        )

    def to_json_dict(self) -> dict:
        return {
            "results": [
                {
                    "user_id": r.user_id,
                    "final": r.final.value,
                    "mode_count": r.mode_count,
                    "span_count": r.span_count,
                    "frequency": r.frequency,
                    "tie_broken": r.tie_broken,
                    "trail": [[s, c.value, score] for s, c, score in r.trail],
                }
                for r in self.results
            ],
            "unresolved": list(self.unresolved),
            "skipped_spans": list(self.skipped_spans),
        }


def propagate_labels(
    profiles: Sequence[AccountProfile],
    labels: LabelSet,
    spans: Sequence[TimeSpan],
    targets: Optional[Iterable[str]] = None,
) -> PropagationReport:
    """Run the full per-span propagation over ``spans``.

    ``targets`` limits which unlabeled actors are tracked; by default every
    hashed profile without a label is a target.  Spans where no labeled
    actor is active are recorded as skipped.  Targets that were never
    active in any usable span come back in ``unresolved``.
    """
    if not profiles:
        raise EmptyInputError("no profiles to propagate over")
    if not labels:
        raise TrollmapError("label set is empty; nothing can propagate")

    if targets is None:
        target_ids = {p.user_id for p in profiles if p.is_hashed and p.user_id not in labels}
    else:
        target_ids = set(targets) - labels.ids()
    pool = [p for p in profiles if p.user_id in labels or p.user_id in target_ids]

    per_actor: dict[str, list[tuple[int, Category, float]]] = {uid: [] for uid in sorted(target_ids)}
    skipped = []
    for span in spans:
        sv = build_span_vectors(span, pool, labels)
        if sv.skipped:
            skipped.append(span.index)
            continue
        for u_id, category, score in propagate_span(sv, labels):
            per_actor[u_id].append((span.index, category, score))

    results, unresolved = aggregate_modes(per_actor)
    return PropagationReport(
        results=tuple(results),
        unresolved=tuple(unresolved),
        skipped_spans=tuple(skipped),
    )
