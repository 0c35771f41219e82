"""Authenticity categories and labeled-account bookkeeping.

Accounts fall into exactly four categories; the declaration order below is
the canonical order used everywhere a tie must break deterministically.
Labels carry a provenance source whose precedence decides merges:
Manual > HashtagPropagated > ModelPredicted.
"""

from __future__ import annotations

import csv
from collections.abc import Iterator, Mapping
from enum import Enum
from typing import IO, NamedTuple, Union

from .errors import LabelError
from .fileio import Source, open_text


class Category(Enum):
    FAKE_NEWS = "FakeNews"
    ORGANIZATIONS = "Organizations"
    POLITICAL_AFFILIATES = "PoliticalAffiliates"
    INDIVIDUALS = "Individuals"


#: Canonical tie-break order (declaration order of the enum).
CATEGORIES: tuple[Category, ...] = tuple(Category)
CATEGORY_INDEX: dict[Category, int] = {c: i for i, c in enumerate(CATEGORIES)}
_BY_NAME = {c.value: c for c in CATEGORIES}


def category_from_name(name: str) -> Category:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise LabelError(
            f"unknown category {name!r}; expected one of {', '.join(_BY_NAME)}"
        ) from None


class LabelSource(Enum):
    MANUAL = "Manual"
    HASHTAG_PROPAGATED = "HashtagPropagated"
    MODEL_PREDICTED = "ModelPredicted"

    @property
    def precedence(self) -> int:
        return _PRECEDENCE[self]


_PRECEDENCE = {
    LabelSource.MANUAL: 3,
    LabelSource.HASHTAG_PROPAGATED: 2,
    LabelSource.MODEL_PREDICTED: 1,
}
_SOURCE_BY_NAME = {s.value: s for s in LabelSource}


def source_from_name(name: str) -> LabelSource:
    try:
        return _SOURCE_BY_NAME[name]
    except KeyError:
        raise LabelError(
            f"unknown label source {name!r}; expected one of {', '.join(_SOURCE_BY_NAME)}"
        ) from None


class Label(NamedTuple):
    category: Category
    source: LabelSource


class LabelSet(Mapping):
    """Immutable map user_id -> (Category, LabelSource)."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Union[Mapping[str, Label], Iterator, None] = None):
        data: dict[str, Label] = {}
        if entries is not None:
            items = entries.items() if isinstance(entries, Mapping) else entries
            for user_id, label in items:
                if user_id in data:
                    raise LabelError(f"duplicate user_id {user_id!r} in label set")
                data[user_id] = Label(*label)
        self._entries = data

    def __getitem__(self, user_id: str) -> Label:
        return self._entries[user_id]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        return f"LabelSet({len(self._entries)} entries)"

    def __eq__(self, other) -> bool:
        if isinstance(other, LabelSet):
            return self._entries == other._entries
        return NotImplemented

    def ids(self) -> set[str]:
        return set(self._entries)

    def category_of(self, user_id: str) -> Category:
        return self._entries[user_id].category

    def filtered(self, category: Category) -> "LabelSet":
        return LabelSet(
            (uid, lab) for uid, lab in self._entries.items() if lab.category is category
        )


_LABEL_COLUMNS = ("user_id", "category", "source")


def parse_label_file(source: Source) -> LabelSet:
    """Read a ``user_id,category,source`` CSV into a LabelSet.

    Lines starting with '#' are treated as comments.  Unknown category or
    source names and duplicate user ids raise :class:`LabelError`.
    """
    stream = open_text(source)
    rows = csv.reader(line for line in stream if not line.startswith("#"))
    try:
        header = next(rows)
    except StopIteration:
        raise LabelError("label file is empty") from None
    columns = [h.strip().lower() for h in header]
    missing = [c for c in _LABEL_COLUMNS if c not in columns]
    if missing:
        raise LabelError(f"label file missing column(s): {', '.join(missing)}")
    idx = {c: columns.index(c) for c in _LABEL_COLUMNS}

    entries: dict[str, Label] = {}
    for lineno, row in enumerate(rows, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            user_id = row[idx["user_id"]].strip()
            category = category_from_name(row[idx["category"]].strip())
            source_name = row[idx["source"]].strip()
        except IndexError:
            raise LabelError(f"label file row {lineno}: wrong number of fields") from None
        if not user_id:
            raise LabelError(f"label file row {lineno}: empty user_id")
        label_source = source_from_name(source_name)
        if user_id in entries:
            raise LabelError(f"label file row {lineno}: duplicate user_id {user_id!r}")
        entries[user_id] = Label(category, label_source)
    return LabelSet(entries)


def write_label_file(labels: LabelSet, dest: Union[str, IO[str]], header_comment: str = "") -> None:
    """Write a LabelSet as CSV, rows sorted by user_id for reproducibility."""
    own = isinstance(dest, str)
    out = open(dest, "w", encoding="utf-8", newline="") if own else dest
    try:
        if header_comment:
            out.write(f"# {header_comment}\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(_LABEL_COLUMNS)
        for user_id in sorted(labels):
            label = labels[user_id]
            writer.writerow([user_id, label.category.value, label.source.value])
    finally:
        if own:
            out.close()


def merge_labels(base: LabelSet, overlay: LabelSet) -> LabelSet:
    """Merge two label sets; higher source precedence wins, overlay wins ties."""
    merged = dict(base)
    for user_id, label in overlay.items():
        current = merged.get(user_id)
        if current is None or label.source.precedence >= current.source.precedence:
            merged[user_id] = label
    return LabelSet(merged)
