"""Time-indexed panels of return series and their CSV ingestion."""

from __future__ import annotations

import csv
import datetime as _dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, InvalidInputError, ParseError, SchemaError

__all__ = ["Panel", "NaPolicy", "load_panel", "NA_TOKENS"]

# cell spellings read as missing
NA_TOKENS = frozenset({"", "na", "n/a", "#n/a", "nan", "null", "none", "-"})


class NaPolicy:
    ERROR = "error"
    DROP = "drop"
    ALL = (ERROR, DROP)


@dataclass(frozen=True)
class Panel:
    """T x N block of finite observations with unique labels and optional dates."""

    labels: tuple[str, ...]
    data: np.ndarray
    dates: Optional[tuple[str, ...]] = None
    dropped_rows: int = 0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise InvalidInputError(f"panel data must be T x N, got shape {data.shape}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        if len(self.labels) != data.shape[1]:
            raise SchemaError(f"{len(self.labels)} labels for {data.shape[1]} columns")
        seen = set()
        for label in self.labels:
            if label in seen:
                raise SchemaError(f"duplicate series label {label!r}")
            seen.add(label)
        if not np.all(np.isfinite(data)):
            raise InvalidInputError("panel contains non-finite values")
        if self.dates is not None:
            object.__setattr__(self, "dates", tuple(self.dates))
            if len(self.dates) != data.shape[0]:
                raise SchemaError(f"{len(self.dates)} dates for {data.shape[0]} rows")

    @property
    def T(self) -> int:
        return self.data.shape[0]

    @property
    def N(self) -> int:
        return self.data.shape[1]

    def column(self, label: str) -> np.ndarray:
        try:
            return self.data[:, self.labels.index(label)]
        except ValueError:
            raise SchemaError(f"no series named {label!r}; have {list(self.labels)}") from None

    def select(self, labels: Sequence[str]) -> "Panel":
        idx = []
        for label in labels:
            if label not in self.labels:
                raise SchemaError(f"no series named {label!r}; have {list(self.labels)}")
            idx.append(self.labels.index(label))
        return Panel(tuple(labels), self.data[:, idx], self.dates, self.dropped_rows)

    def rows(self, start: int, stop: int) -> "Panel":
        dates = None if self.dates is None else self.dates[start:stop]
        return Panel(self.labels, self.data[start:stop], dates)


def parse_date(text: str) -> _dt.date:
    """ISO-8601 calendar date; a trailing time part is ignored."""
    core = text.strip()[:10]
    return _dt.date.fromisoformat(core)


def _parse_cell(text: str) -> Optional[float]:
    # None marks a missing or non-finite cell; unparseable text raises ValueError
    s = text.strip()
    if s.lower() in NA_TOKENS:
        return None
    v = float(s)
    return v if math.isfinite(v) else None


def _find_date_column(header: list[str], date_column: Optional[str]) -> Optional[int]:
    if date_column is None:
        hits = [i for i, h in enumerate(header) if h.lower() == "date"]
        return hits[0] if hits else None
    if date_column not in header:
        raise SchemaError(f"date column {date_column!r} not in header {header}")
    return header.index(date_column)


def load_panel(path, *, date_column: Optional[str] = None, delimiter: str = ",",
               na_policy: str = NaPolicy.ERROR) -> Panel:
    """Read a UTF-8 CSV with a header row into a Panel.

    Without ``date_column`` a column headed ``date`` (any case) is used as the
    date index if present.  Under ``na_policy="drop"`` rows with a missing or
    non-finite cell are removed and counted in ``Panel.dropped_rows``.
    """
    if na_policy not in NaPolicy.ALL:
        raise InvalidInputError(f"na policy must be one of {NaPolicy.ALL}, got {na_policy!r}")
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except FileNotFoundError:
        raise InvalidInputError(f"input file not found: {path}") from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8: {exc}") from None

    reader = csv.reader(text.splitlines(), delimiter=delimiter)
    header = None
    rows: list[tuple[int, list[str]]] = []
    for line_no, fields in enumerate(reader, start=1):
        if not fields or all(not f.strip() for f in fields) and len(fields) <= 1:
            continue
        if header is None:
            header = [f.strip() for f in fields]
            header_line = line_no
            continue
        if len(fields) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(fields)}", line=line_no)
        rows.append((line_no, fields))
    if header is None:
        raise ParseError("empty input, no header row", line=1)
    if any(not h for h in header):
        raise SchemaError(f"empty column name in header (line {header_line})")

    di = _find_date_column(header, date_column)
    value_cols = [i for i in range(len(header)) if i != di]
    labels = [header[i] for i in value_cols]
    seen = set()
    for label in labels:
        if label in seen:
            raise SchemaError(f"duplicate series label {label!r}")
        seen.add(label)
    if not labels:
        raise SchemaError("no value columns in header")

    values = []
    dates = []
    dropped = 0
    for row_no, (line_no, fields) in enumerate(rows, start=1):
        parsed = []
        bad = None
        for i in value_cols:
            try:
                v = _parse_cell(fields[i])
            except ValueError:
                raise DataError(f"not a number: {fields[i].strip()!r}", row=row_no, column=header[i]) from None
            if v is None and bad is None:
                bad = i
            parsed.append(v)
        if bad is not None:
            if na_policy == NaPolicy.DROP:
                dropped += 1
                continue
            raise DataError(f"missing or non-finite value {fields[bad].strip()!r}", row=row_no, column=header[bad])
        if di is not None:
            try:
                d = parse_date(fields[di])
            except ValueError:
                raise DataError(f"not an ISO-8601 date: {fields[di].strip()!r}", row=row_no,
                                column=header[di]) from None
            if dates and d <= dates[-1][0]:
                raise SchemaError(f"dates must be strictly increasing; {fields[di].strip()} on line {line_no} "
                                  f"does not follow {dates[-1][1]}")
            dates.append((d, fields[di].strip()))
        values.append(parsed)

    data = np.array(values, dtype=np.float64).reshape(len(values), len(labels))
    return Panel(tuple(labels), data, tuple(s for _, s in dates) if di is not None else None, dropped)
