"""Synthetic fixture generation.

Desk-scale acceptance cannot use the original account dumps, so this
module fabricates datasets with a known ground truth: class-conditional
feature distributions (truncated at zero, features are counts) and
per-category hashtag pools with a controllable cross-pool contamination
rate.  The generator's hidden assignment is the oracle every recovery and
accuracy check is scored against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Mapping, Sequence

import numpy as np

from . import rng as rngmod
from .errors import TrollmapError
from .features import FeatureMatrix
from .ingest import FEATURE_NAMES, AccountProfile, FeatureVector
from .propagation import SPAN_MONTHS, TimeSpan, _add_months, partition_spans
from .taxonomy import CATEGORIES, Category, Label, LabelSet, LabelSource


@dataclass(frozen=True)
class CategorySynthSpec:
    count: int
    feature_means: tuple[float, ...]
    feature_spreads: tuple[float, ...]
    hashtag_pool: tuple[str, ...]


@dataclass(frozen=True)
class SyntheticSpec:
    per_category: Mapping[Category, CategorySynthSpec]
    contamination: float
    seed: int
    labeled_fraction: float = 0.5
    n_spans: int = 18
    span_start: datetime = field(
        default_factory=lambda: datetime(2009, 7, 1, tzinfo=timezone.utc)
    )
    tags_per_span: tuple[int, int] = (3, 8)

    def __post_init__(self):
        if not 0.0 <= self.contamination < 1.0:
            raise TrollmapError("contamination must be in [0, 1)")
        if not 0.0 <= self.labeled_fraction <= 1.0:
            raise TrollmapError("labeled_fraction must be in [0, 1]")
        if self.n_spans < 1:
            raise TrollmapError("need at least one span")
        counts = [s.count for s in self.per_category.values()]
        if any(c < 0 for c in counts):
            raise TrollmapError("category counts must be non-negative")
        if sum(1 for c in counts if c > 0) < 2:
            raise TrollmapError("need at least two categories with samples")
        seen: set[str] = set()
        for spec in self.per_category.values():
            if len(spec.feature_means) != len(FEATURE_NAMES) or len(
                spec.feature_spreads
            ) != len(FEATURE_NAMES):
                raise TrollmapError(f"means/spreads must have {len(FEATURE_NAMES)} entries")
            if any(s < 0 for s in spec.feature_spreads):
                raise TrollmapError("spreads must be non-negative")
            overlap = seen & set(spec.hashtag_pool)
            if overlap:
                raise TrollmapError(f"hashtag pools must be disjoint; shared: {sorted(overlap)[:3]}")
            seen |= set(spec.hashtag_pool)
        lo, hi = self.tags_per_span
        if lo < 1 or hi < lo:
            raise TrollmapError("tags_per_span must satisfy 1 <= lo <= hi")


@dataclass(frozen=True)
class SyntheticDataset:
    matrix: FeatureMatrix
    labels: tuple[Category, ...]  # hidden truth aligned with matrix rows
    histories: Mapping[str, tuple[tuple[datetime, str], ...]]
    truth: LabelSet  # all accounts
    visible: LabelSet  # the labeled subset exposed to the pipeline
    hidden_ids: tuple[str, ...]
    spans: tuple[TimeSpan, ...]

    def profiles(self) -> list[AccountProfile]:
        """Emit account profiles; hidden accounts are the hashed ones."""
        hidden = set(self.hidden_ids)
        out = []
        for i, user_id in enumerate(self.matrix.row_ids):
            history = self.histories[user_id]
            if history:
                first = history[0][0]
                last = history[-1][0]
            else:
                first = last = self.spans[0].start
            out.append(
                AccountProfile(
                    user_id=user_id,
                    is_hashed=user_id in hidden,
                    features=FeatureVector(*self.matrix.values[i]),
                    hashtag_history=history,
                    first_seen=first,
                    last_seen=last,
                )
            )
        return out


def generate_synthetic(spec: SyntheticSpec) -> SyntheticDataset:
    """Draw a dataset with known truth; identical seeds give identical data."""
    span_end = _add_months(spec.span_start, SPAN_MONTHS * spec.n_spans)
    spans = partition_spans(spec.span_start, span_end)

    ordered = [c for c in CATEGORIES if c in spec.per_category and spec.per_category[c].count > 0]
    ids: list[str] = []
    labels: list[Category] = []
    for category in ordered:
        for i in range(spec.per_category[category].count):
            ids.append(f"{category.value.lower()}-{i:05d}")
            labels.append(category)

    feature_rng = rngmod.stream(spec.seed, "features")
    rows = np.zeros((len(ids), len(FEATURE_NAMES)))
    offset = 0
    for category in ordered:
        cat_spec = spec.per_category[category]
        count = cat_spec.count
        means = np.asarray(cat_spec.feature_means)
        spreads = np.asarray(cat_spec.feature_spreads)
        block = means + spreads * feature_rng.standard_normal((count, len(FEATURE_NAMES)))
        for _ in range(100):  # truncate at zero by redrawing the negative cells
            negative = block < 0
            if not negative.any():
                break
            block[negative] = (
                np.broadcast_to(means, block.shape)[negative]
                + np.broadcast_to(spreads, block.shape)[negative]
                * feature_rng.standard_normal(int(negative.sum()))
            )
        np.clip(block, 0.0, None, out=block)
        rows[offset : offset + count] = block
        offset += count

    tag_rng = rngmod.stream(spec.seed, "tags")
    pools = {c: spec.per_category[c].hashtag_pool for c in ordered}
    other_pools = {
        c: [pools[o] for o in ordered if o is not c and pools[o]] for c in ordered
    }
    histories: dict[str, tuple[tuple[datetime, str], ...]] = {}
    lo, hi = spec.tags_per_span
    for user_id, category in zip(ids, labels):
        own_pool = pools[category]
        events: list[tuple[datetime, str]] = []
        for span in spans:
            span_minutes = int((span.end - span.start).total_seconds() // 60)
            n_tags = int(tag_rng.integers(lo, hi + 1))
            for _ in range(n_tags):
                contaminated = (
                    spec.contamination > 0.0
                    and other_pools[category]
                    and tag_rng.random() < spec.contamination
                )
                if contaminated:
                    foreign = other_pools[category]
                    pool = foreign[int(tag_rng.integers(len(foreign)))]
                else:
                    pool = own_pool
                if not pool:
                    continue
                tag = pool[int(tag_rng.integers(len(pool)))]
                moment = span.start + timedelta(minutes=int(tag_rng.integers(span_minutes)))
                events.append((moment, tag))
        histories[user_id] = tuple(sorted(events))

    label_rng = rngmod.stream(spec.seed, "labeled")
    visible_entries: dict[str, Label] = {}
    hidden_ids: list[str] = []
    offset = 0
    for category in ordered:
        count = spec.per_category[category].count
        members = ids[offset : offset + count]
        offset += count
        order = label_rng.permutation(count)
        n_visible = int(np.floor(count * spec.labeled_fraction + 0.5))
        chosen = {members[i] for i in order[:n_visible]}
        for member in members:
            if member in chosen:
                visible_entries[member] = Label(category, LabelSource.MANUAL)
            else:
                hidden_ids.append(member)

    matrix = FeatureMatrix(row_ids=tuple(ids), columns=FEATURE_NAMES, values=rows)
    truth = LabelSet(
        (uid, Label(cat, LabelSource.MANUAL)) for uid, cat in zip(ids, labels)
    )
    return SyntheticDataset(
        matrix=matrix,
        labels=tuple(labels),
        histories=histories,
        truth=truth,
        visible=LabelSet(visible_entries),
        hidden_ids=tuple(hidden_ids),
        spans=tuple(spans),
    )


def default_pools(size: int = 40) -> dict[Category, tuple[str, ...]]:
    """Disjoint per-category hashtag pools of the given size."""
    return {
        c: tuple(f"{c.value.lower()}tag{i:03d}" for i in range(size)) for c in CATEGORIES
    }


# Feature layout for the classifier preset.  The audience-size feature lives
# on a much larger scale than the small count features, like real dumps; the
# two rarest classes share its top rung (outlet-like accounts of both kinds
# attract similar audiences), so telling them apart takes the count features.
_AUDIENCE_SLOT = FEATURE_NAMES.index("followers_count")
_AUDIENCE_RUNG = (2, 2, 1, 0)  # rungs per category, Individuals at the bottom
_BUMP_SLOTS = (0, 1, 3, 4)  # tweets, retweets, followings, replies
_AUDIENCE_BASE = 500.0
_AUDIENCE_SPREAD = 300.0
_COUNT_BASE = 4.0
_COUNT_SPREAD = 2.0


def classifier_spec(
    seed: int,
    total: int = 2400,
    proportions: Sequence[float] = (0.70, 0.15, 0.10, 0.05),
    separation: float = 2.0,
    labeled_fraction: float = 0.85,
    contamination: float = 0.1,
    pool_size: int = 40,
    n_spans: int = 18,
    tags_per_span: tuple[int, int] = (3, 8),
) -> SyntheticSpec:
    """Preset: imbalanced four-class data, class means >= ``separation`` sigma apart.

    Audience-size rungs sit ``separation`` of that feature's sigma apart,
    and every class adds a 0.75 * ``separation`` sigma bump on its own count
    feature.  The two classes sharing the top audience rung differ by their
    count bumps alone (vector distance 1.06 * ``separation`` sigma), and the
    rarest class is a narrow audience spike inside its neighbor's wide band,
    so finding it takes a two-sided cut whose placement is sample-hungry.
    Proportions are assigned largest-first to Individuals downward.
    """
    if len(proportions) != len(CATEGORIES):
        raise TrollmapError(f"need {len(CATEGORIES)} proportions")
    pools = default_pools(pool_size)
    ordered_props = sorted(proportions, reverse=True)
    per_category = {}
    for i, category in enumerate(CATEGORIES):
        share = ordered_props[len(CATEGORIES) - 1 - i]
        count = int(np.floor(total * share + 0.5))
        means = [_COUNT_BASE] * len(FEATURE_NAMES)
        spreads = [_COUNT_SPREAD] * len(FEATURE_NAMES)
        means[_AUDIENCE_SLOT] = _AUDIENCE_BASE + _AUDIENCE_RUNG[i] * separation * _AUDIENCE_SPREAD
        spreads[_AUDIENCE_SLOT] = _AUDIENCE_SPREAD / 5.0 if i == 0 else _AUDIENCE_SPREAD
        means[_BUMP_SLOTS[i]] = _COUNT_BASE + 0.75 * separation * _COUNT_SPREAD
        per_category[category] = CategorySynthSpec(
            count=count,
            feature_means=tuple(means),
            feature_spreads=tuple(spreads),
            hashtag_pool=pools[category],
        )
    return SyntheticSpec(
        per_category=per_category,
        contamination=contamination,
        seed=seed,
        labeled_fraction=labeled_fraction,
        n_spans=n_spans,
        tags_per_span=tags_per_span,
    )
