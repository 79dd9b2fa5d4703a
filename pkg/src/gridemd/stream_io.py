"""Text stream format.

One update per line: ``<+|-> <S|T> <x> <y> [count]``.  Blank lines and
lines starting with ``#`` are ignored; count defaults to 1.
"""

from __future__ import annotations

import os
from typing import Iterable

from .errors import ParseError, RangeError
from .geometry import Point, StreamUpdate, validate_update

_SIGNS = {"+": 1, "-": -1}


def parse_stream_lines(lines: Iterable[str], delta: int) -> list[StreamUpdate]:
    updates = []
    for number, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) not in (4, 5):
            raise ParseError(f"expected 4 or 5 fields, got {len(fields)}", number)
        sign_token, side, *rest = fields
        if sign_token not in _SIGNS:
            raise ParseError(f"sign must be '+' or '-', got {sign_token!r}", number)
        if side not in ("S", "T"):
            raise ParseError(f"side must be 'S' or 'T', got {side!r}", number)
        try:
            values = [int(tok) for tok in rest]
        except ValueError:
            raise ParseError(f"non-integer field in {rest!r}", number) from None
        x, y = values[0], values[1]
        count = values[2] if len(values) == 3 else 1
        if count < 1:
            raise ParseError(f"count must be positive, got {count}", number)
        update = StreamUpdate(side, _SIGNS[sign_token], Point(x, y), count)
        try:
            validate_update(update, delta)
        except RangeError as exc:
            raise RangeError(f"line {number}: {exc}") from None
        updates.append(update)
    return updates


def parse_stream(path: str | os.PathLike, delta: int) -> list[StreamUpdate]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_stream_lines(handle, delta)


def format_update(u: StreamUpdate) -> str:
    sign = "+" if u.sign > 0 else "-"
    base = f"{sign} {u.side} {u.point.x} {u.point.y}"
    return base if u.count == 1 else f"{base} {u.count}"


def write_stream(updates: Iterable[StreamUpdate], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for u in updates:
            handle.write(format_update(u) + "\n")
