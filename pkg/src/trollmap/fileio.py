"""Small input helpers: turn paths / bytes / streams into text streams."""

from __future__ import annotations

import io
from pathlib import Path
from typing import IO, TextIO, Union

Source = Union[str, Path, bytes, IO[bytes], IO[str]]


def open_text(source: Source, encoding: str = "utf-8") -> TextIO:
    """Open ``source`` for text reading.

    ``str`` and ``Path`` are treated as filesystem paths; ``bytes`` and
    binary streams are decoded with ``encoding``; text streams pass through.
    """
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding=encoding, newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode(encoding))
    if isinstance(source, io.TextIOBase):
        return source
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            return io.StringIO(data.decode(encoding))
        return io.StringIO(data)
    raise TypeError(f"cannot read from {type(source).__name__}")
