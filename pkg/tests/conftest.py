from datetime import datetime, timezone

import pytest

from trollmap.ingest import TweetRecord


def utc(year, month, day, hour=0, minute=0):
    return datetime(year, month, day, hour, minute, tzinfo=timezone.utc)


def make_record(
    tweet_id="t1",
    user_id="u1",
    time=None,
    hashtags=(),
    mentions=(),
    description=None,
    is_retweet=False,
    followers=0,
    followings=0,
    replies=0,
    likes=0,
):
    return TweetRecord(
        tweet_id=tweet_id,
        user_id=user_id,
        tweet_time=time or utc(2016, 1, 1),
        user_profile_description=description,
        is_retweet=is_retweet,
        follower_count=followers,
        following_count=followings,
        reply_count=replies,
        like_count=likes,
        hashtags=tuple(hashtags),
        user_mentions=tuple(mentions),
    )


@pytest.fixture
def record_factory():
    return make_record
