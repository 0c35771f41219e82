"""Hashtag canonicalization.

Raw hashtags arrive with arbitrary casing, leading '#' markers and stray
symbols; two uses of the "same" tag must collapse to one token before any
similarity math.
"""

from __future__ import annotations

import re

# \w under re.UNICODE covers letters, digits and underscore in any script.
_STRIP = re.compile(r"[^\w]", flags=re.UNICODE)

#: Returned when nothing survives cleaning; callers treat it as "no tag".
EMPTY_MARKER = ""


def canonicalize_hashtag(raw: str) -> str:
    """Reduce a raw hashtag to its canonical token.

    Leading '#' characters are stripped, the rest is Unicode-lowercased and
    every character outside letters/digits/underscore is removed.  Returns
    ``EMPTY_MARKER`` when nothing remains; never raises.
    """
    text = raw.strip().lstrip("#")
    text = text.casefold()
    return _STRIP.sub("", text)
