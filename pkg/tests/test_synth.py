import numpy as np
import pytest

from trollmap.errors import TrollmapError
from trollmap.synth import (
    CategorySynthSpec,
    SyntheticSpec,
    classifier_spec,
    default_pools,
    generate_synthetic,
)
from trollmap.taxonomy import CATEGORIES, Category


def small_spec(seed=0, contamination=0.1, **kwargs):
    return classifier_spec(
        seed=seed, total=120, contamination=contamination, n_spans=4, pool_size=10, **kwargs
    )


def test_counts_follow_proportions():
    dataset = generate_synthetic(classifier_spec(seed=0, total=2400, n_spans=2))
    sizes = {c: sum(1 for lab in dataset.labels if lab is c) for c in CATEGORIES}
    assert sizes[Category.INDIVIDUALS] == 1680
    assert sizes[Category.POLITICAL_AFFILIATES] == 360
    assert sizes[Category.ORGANIZATIONS] == 240
    assert sizes[Category.FAKE_NEWS] == 120


def test_zero_contamination_keeps_tags_in_own_pool():
    dataset = generate_synthetic(small_spec(contamination=0.0))
    pools = {c: set(s.hashtag_pool) for c, s in small_spec().per_category.items()}
    truth = dict(zip(dataset.matrix.row_ids, dataset.labels))
    for uid, history in dataset.histories.items():
        own = pools[truth[uid]]
        assert all(tag in own for _, tag in history)


def test_same_seed_reproduces_dataset():
    a = generate_synthetic(small_spec(seed=5))
    b = generate_synthetic(small_spec(seed=5))
    assert a.matrix.row_ids == b.matrix.row_ids
    assert np.array_equal(a.matrix.values, b.matrix.values)
    assert a.histories == b.histories
    assert a.visible == b.visible


def test_different_seed_changes_features():
    a = generate_synthetic(small_spec(seed=1))
    b = generate_synthetic(small_spec(seed=2))
    assert not np.array_equal(a.matrix.values, b.matrix.values)


def test_features_are_non_negative():
    dataset = generate_synthetic(small_spec(seed=3))
    assert np.all(dataset.matrix.values >= 0)


def test_labeled_fraction_controls_visible_split():
    dataset = generate_synthetic(small_spec(seed=4, labeled_fraction=0.5))
    assert len(dataset.visible) + len(dataset.hidden_ids) == len(dataset.matrix.row_ids)
    for c in CATEGORIES:
        total_c = sum(1 for lab in dataset.labels if lab is c)
        visible_c = sum(1 for uid in dataset.visible if dataset.visible.category_of(uid) is c)
        assert visible_c == round(total_c * 0.5)


def test_profiles_mark_hidden_accounts_as_hashed():
    dataset = generate_synthetic(small_spec(seed=6))
    hidden = set(dataset.hidden_ids)
    for profile in dataset.profiles():
        assert profile.is_hashed == (profile.user_id in hidden)
        assert len(profile.hashtag_history) > 0


def test_history_timestamps_stay_inside_spans():
    dataset = generate_synthetic(small_spec(seed=7))
    start = dataset.spans[0].start
    end = dataset.spans[-1].end
    for history in dataset.histories.values():
        for moment, _ in history:
            assert start <= moment < end


def test_rejects_overlapping_pools():
    pools = default_pools(5)
    per = {
        c: CategorySynthSpec(
            count=10,
            feature_means=tuple([1.0] * 8),
            feature_spreads=tuple([0.5] * 8),
            hashtag_pool=pools[Category.FAKE_NEWS],  # same pool for every class
        )
        for c in CATEGORIES
    }
    with pytest.raises(TrollmapError, match="disjoint"):
        SyntheticSpec(per_category=per, contamination=0.0, seed=0)


def test_rejects_bad_contamination():
    with pytest.raises(TrollmapError, match="contamination"):
        small_spec(contamination=1.0)


def test_rejects_single_populated_class():
    pools = default_pools(5)
    per = {
        Category.FAKE_NEWS: CategorySynthSpec(
            count=10,
            feature_means=tuple([1.0] * 8),
            feature_spreads=tuple([0.5] * 8),
            hashtag_pool=pools[Category.FAKE_NEWS],
        )
    }
    with pytest.raises(TrollmapError, match="two categories"):
        SyntheticSpec(per_category=per, contamination=0.0, seed=0)
