"""Tweet-dump ingestion.

Parses delimited dump files (CSV or TSV with a header row) into per-tweet
records and aggregates them into one behavioral profile per account.  The
header is matched case-insensitively with underscores ignored, so both
``tweetid`` and ``Tweet_Id`` map onto the same field.  Malformed rows are
collected in a reject log instead of aborting the run; only a missing
mandatory column (tweet_id, user_id, tweet_time) is fatal.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import IO, Iterable, Optional, Sequence, Union

from .errors import EmptyInputError, SchemaError
from .fileio import Source, open_text
from .hashtags import canonicalize_hashtag

#: Canonical order of the eight behavioral features every profile carries.
FEATURE_NAMES: tuple[str, ...] = (
    "tweets_count",
    "retweets_count",
    "followers_count",
    "followings_count",
    "replies_count",
    "likes_count",
    "users_mentioned",
    "hashtags_count",
)

_MANDATORY = ("tweet_id", "user_id", "tweet_time")
_COUNT_FIELDS = ("follower_count", "following_count", "quote_count",
                 "reply_count", "like_count", "retweet_count")
_LIST_FIELDS = ("hashtags", "user_mentions", "urls", "poll_choices")

# Accepted column names, normalized (lowercase, underscores/spaces removed).
_ALIASES = {
    "tweetid": "tweet_id",
    "userid": "user_id",
    "userdisplayname": "user_display_name",
    "userprofiledescription": "user_profile_description",
    "tweettime": "tweet_time",
    "tweetlanguage": "tweet_language",
    "isretweet": "is_retweet",
    "followercount": "follower_count",
    "followingcount": "following_count",
    "quotecount": "quote_count",
    "replycount": "reply_count",
    "likecount": "like_count",
    "retweetcount": "retweet_count",
    "hashtags": "hashtags",
    "usermentions": "user_mentions",
    "urls": "urls",
    "pollchoices": "poll_choices",
}

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_TIME_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    user_id: str
    tweet_time: datetime
    user_display_name: Optional[str] = None
    user_profile_description: Optional[str] = None
    tweet_language: Optional[str] = None
    is_retweet: bool = False
    follower_count: int = 0
    following_count: int = 0
    quote_count: int = 0
    reply_count: int = 0
    like_count: int = 0
    retweet_count: int = 0
    hashtags: tuple[str, ...] = ()
    user_mentions: tuple[str, ...] = ()
    urls: tuple[str, ...] = ()
    poll_choices: tuple[str, ...] = ()


@dataclass(frozen=True)
class RowReject:
    """One rejected input row: 1-based data-row index plus the reason."""

    row: int
    reason: str


@dataclass(frozen=True)
class FeatureVector:
    """The eight aggregated behavioral features, in canonical slot order."""

    tweets_count: float
    retweets_count: float
    followers_count: float
    followings_count: float
    replies_count: float
    likes_count: float
    users_mentioned: float
    hashtags_count: float

    def __post_init__(self):
        for name in FEATURE_NAMES:
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"feature {name} must be finite and non-negative, got {value!r}")

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in FEATURE_NAMES)


@dataclass(frozen=True)
class AccountProfile:
    user_id: str
    is_hashed: bool
    features: FeatureVector
    hashtag_history: tuple[tuple[datetime, str], ...]
    first_seen: datetime
    last_seen: datetime


def parse_timestamp(text: str) -> datetime:
    """Parse a UTC timestamp; naive inputs are assumed UTC."""
    cleaned = text.strip()
    if cleaned.endswith("Z"):
        cleaned = cleaned[:-1] + "+00:00"
    if " " in cleaned and "T" not in cleaned:
        cleaned = cleaned.replace(" ", "T", 1)
    parsed = datetime.fromisoformat(cleaned)
    if parsed.tzinfo is None:
        return parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def _parse_list_cell(cell: str) -> tuple[str, ...]:
    text = cell.strip()
    if not text:
        return ()
    if text.startswith("[") and text.endswith("]"):
        text = text[1:-1]
    tokens = []
    for piece in text.split(","):
        token = piece.strip().strip("'\"").strip()
        if token:
            tokens.append(token)
    return tuple(tokens)


def _parse_bool(cell: str) -> bool:
    lowered = cell.strip().lower()
    if lowered in ("true", "t", "1", "yes"):
        return True
    if lowered in ("false", "f", "0", "no", ""):
        return False
    raise ValueError(f"not a boolean: {cell!r}")


class _RowError(Exception):
    def __init__(self, reason: str):
        self.reason = reason


def _row_to_record(values: dict[str, str], now: datetime) -> TweetRecord:
    tweet_id = values.get("tweet_id", "").strip()
    if not tweet_id:
        raise _RowError("empty tweet_id")
    user_id = values.get("user_id", "").strip()
    if not user_id:
        raise _RowError("empty user_id")

    try:
        tweet_time = parse_timestamp(values["tweet_time"])
    except ValueError:
        raise _RowError(f"bad timestamp: {values['tweet_time']!r}") from None
    if not (_EPOCH <= tweet_time <= now):
        raise _RowError(f"timestamp out of range: {values['tweet_time']!r}")

    counts = {}
    for field in _COUNT_FIELDS:
        cell = values.get(field, "").strip()
        if not cell:
            counts[field] = 0
            continue
        try:
            number = int(cell)
        except ValueError:
            raise _RowError(f"bad count: {field}={cell!r}") from None
        if number < 0:
            raise _RowError(f"negative count: {field}={number}")
        counts[field] = number

    try:
        is_retweet = _parse_bool(values.get("is_retweet", ""))
    except ValueError:
        raise _RowError(f"bad boolean: is_retweet={values.get('is_retweet')!r}") from None

    lists = {field: _parse_list_cell(values.get(field, "")) for field in _LIST_FIELDS}

    def _optional(name: str) -> Optional[str]:
        cell = values.get(name, "").strip()
        return cell or None

    return TweetRecord(
        tweet_id=tweet_id,
        user_id=user_id,
        tweet_time=tweet_time,
        user_display_name=_optional("user_display_name"),
        user_profile_description=_optional("user_profile_description"),
        tweet_language=_optional("tweet_language"),
        is_retweet=is_retweet,
        follower_count=counts["follower_count"],
        following_count=counts["following_count"],
        quote_count=counts["quote_count"],
        reply_count=counts["reply_count"],
        like_count=counts["like_count"],
        retweet_count=counts["retweet_count"],
        hashtags=lists["hashtags"],
        user_mentions=lists["user_mentions"],
        urls=lists["urls"],
        poll_choices=lists["poll_choices"],
    )


def parse_tweet_records(
    source: Source, delimiter: str = ","
) -> tuple[list[TweetRecord], list[RowReject]]:
    """Parse a delimited dump into records plus a reject log.

    Row numbers in the reject log are 1-based over data rows (the header is
    row 0).  Input order is preserved in both outputs.
    """
    stream = open_text(source)
    reader = csv.reader(stream, delimiter=delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("input has no header row") from None

    column_map: dict[int, str] = {}
    for position, name in enumerate(header):
        normalized = name.strip().lower().replace("_", "").replace(" ", "")
        field = _ALIASES.get(normalized)
        if field is not None:
            column_map[position] = field
    present = set(column_map.values())
    missing = [f for f in _MANDATORY if f not in present]
    if missing:
        raise SchemaError(f"missing mandatory column(s): {', '.join(missing)}")

    now = datetime.now(timezone.utc)
    records: list[TweetRecord] = []
    rejects: list[RowReject] = []
    for row_number, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        values = {field: row[pos] if pos < len(row) else "" for pos, field in column_map.items()}
        try:
            records.append(_row_to_record(values, now))
        except _RowError as err:
            rejects.append(RowReject(row=row_number, reason=err.reason))
    return records, rejects


def filter_language(records: Iterable[TweetRecord], tag: str) -> list[TweetRecord]:
    """Keep only records whose tweet_language equals ``tag`` (passthrough filter)."""
    return [r for r in records if r.tweet_language == tag]


def aggregate_accounts(records: Sequence[TweetRecord]) -> list[AccountProfile]:
    """Reduce records to one profile per account, sorted by user_id.

    Summed fields are order-independent; follower/following counts are taken
    from the record with the latest tweet_time, ties broken by the
    lexicographically larger tweet_id (most recent observed state).
    """
    if not records:
        raise EmptyInputError("no records to aggregate")

    groups: dict[str, list[TweetRecord]] = {}
    for record in records:
        groups.setdefault(record.user_id, []).append(record)

    profiles = []
    for user_id in sorted(groups):
        group = groups[user_id]
        latest = max(group, key=lambda r: (r.tweet_time, r.tweet_id))
        history = sorted(
            (r.tweet_time, canonicalize_hashtag(tag)) for r in group for tag in r.hashtags
        )
        features = FeatureVector(
            tweets_count=len(group),
            retweets_count=sum(1 for r in group if r.is_retweet),
            followers_count=latest.follower_count,
            followings_count=latest.following_count,
            replies_count=sum(r.reply_count for r in group),
            likes_count=sum(r.like_count for r in group),
            users_mentioned=sum(len(r.user_mentions) for r in group),
            hashtags_count=sum(len(r.hashtags) for r in group),
        )
        is_hashed = all(
            r.user_profile_description is None or not r.user_profile_description.strip()
            for r in group
        )
        profiles.append(
            AccountProfile(
                user_id=user_id,
                is_hashed=is_hashed,
                features=features,
                hashtag_history=tuple(history),
                first_seen=min(r.tweet_time for r in group),
                last_seen=max(r.tweet_time for r in group),
            )
        )
    return profiles


def _format_time(moment: datetime) -> str:
    return moment.astimezone(timezone.utc).strftime(_TIME_FORMAT)


def profile_to_dict(profile: AccountProfile) -> dict:
    """Stable field-order dict for JSON serialization."""
    number = lambda v: int(v) if float(v).is_integer() else float(v)
    return {
        "user_id": profile.user_id,
        "is_hashed": profile.is_hashed,
        "first_seen": _format_time(profile.first_seen),
        "last_seen": _format_time(profile.last_seen),
        "features": {name: number(getattr(profile.features, name)) for name in FEATURE_NAMES},
        "hashtag_history": [[_format_time(t), tag] for t, tag in profile.hashtag_history],
    }


def profile_from_dict(payload: dict) -> AccountProfile:
    features = FeatureVector(**{name: payload["features"][name] for name in FEATURE_NAMES})
    history = tuple((parse_timestamp(t), tag) for t, tag in payload["hashtag_history"])
    return AccountProfile(
        user_id=payload["user_id"],
        is_hashed=payload["is_hashed"],
        features=features,
        hashtag_history=history,
        first_seen=parse_timestamp(payload["first_seen"]),
        last_seen=parse_timestamp(payload["last_seen"]),
    )


def write_profiles(
    profiles: Iterable[AccountProfile],
    dest: Union[str, IO[str]],
    meta: Optional[dict] = None,
) -> None:
    """Serialize profiles as JSON lines, sorted by user_id.

    An optional ``meta`` object is written first as ``{"_meta": ...}``.
    """
    own = isinstance(dest, str)
    out = open(dest, "w", encoding="utf-8", newline="\n") if own else dest
    try:
        if meta is not None:
            out.write(json.dumps({"_meta": meta}, separators=(",", ":"), sort_keys=True) + "\n")
        for profile in sorted(profiles, key=lambda p: p.user_id):
            out.write(json.dumps(profile_to_dict(profile), separators=(",", ":")) + "\n")
    finally:
        if own:
            out.close()


def read_profiles(source: Source) -> list[AccountProfile]:
    stream = open_text(source)
    profiles = []
    for line in stream:
        line = line.strip()
        if not line:
            continue
        payload = json.loads(line)
        if "_meta" in payload:
            continue
        profiles.append(profile_from_dict(payload))
    return profiles
