"""Rolling-window TailCoR matrices and cross-sectional averages.

Windows are counted in observations.  ``calendar_ranges`` turns calendar
specifications such as a 3-year window rolled every year into explicit
index ranges over a date column.
"""

from __future__ import annotations

import bisect
import calendar
import datetime as _dt
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bootstrap import BootstrapSpec, MatrixBootstrap, bootstrap_matrix
from .errors import InvalidInputError
from .matrix import MatrixEstimate, _as_panel_array, tailcor_matrix
from .pair import TailConfig
from .panel import Panel, parse_date

__all__ = [
    "WindowSpec",
    "WindowRecord",
    "RollingResult",
    "window_bounds",
    "window_starts",
    "calendar_ranges",
    "parse_period",
    "roll",
    "roll_ranges",
    "cross_sectional_average",
    "cross_sectional_averages",
]


@dataclass(frozen=True)
class WindowSpec:
    window: int
    step: int
    min_obs: Optional[int] = None

    def __post_init__(self):
        for name in ("window", "step"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise InvalidInputError(f"{name} must be a positive integer, got {v!r}")
        if self.min_obs is None:
            object.__setattr__(self, "min_obs", int(self.window))
        if int(self.min_obs) != self.min_obs or not (1 <= self.min_obs <= self.window):
            raise InvalidInputError(f"min_obs must lie in [1, window], got {self.min_obs!r}")

    def to_dict(self) -> dict:
        return {"window": int(self.window), "step": int(self.step), "min_obs": int(self.min_obs)}


def window_bounds(length: int, wspec: WindowSpec) -> list[tuple[int, int]]:
    """Half-open (start, stop) index ranges of the emitted windows.

    Full windows start at 0, step, 2 step, ... while they fit; the first start
    that no longer fits gives a final partial window kept only if it holds at
    least ``min_obs`` observations.

    >>> window_bounds(10, WindowSpec(4, 3, 1))
    [(0, 4), (3, 7), (6, 10), (9, 10)]
    """
    if wspec.window > length:
        raise InvalidInputError(f"window of {wspec.window} exceeds the panel length {length}")
    out = []
    start = 0
    while start + wspec.window <= length:
        out.append((start, start + wspec.window))
        start += wspec.step
    if start < length and length - start >= wspec.min_obs:
        out.append((start, length))
    return out


def window_starts(length: int, wspec: WindowSpec) -> list[int]:
    return [s for s, _ in window_bounds(length, wspec)]


_PERIOD = re.compile(r"^\s*(\d+)\s*([dwmy])\s*$", re.IGNORECASE)


def parse_period(text: str) -> tuple[int, str]:
    """'3y' -> (3, 'y'); units d(ays), w(eeks), m(onths), y(ears)."""
    m = _PERIOD.match(text)
    if not m or int(m.group(1)) < 1:
        raise InvalidInputError(f"bad calendar period {text!r}; expected e.g. 3y, 6m, 2w, 30d")
    return int(m.group(1)), m.group(2).lower()


def _shift(d: _dt.date, count: int, unit: str) -> _dt.date:
    if unit == "d":
        return d + _dt.timedelta(days=count)
    if unit == "w":
        return d + _dt.timedelta(weeks=count)
    months = count * (12 if unit == "y" else 1)
    y, m = divmod(d.month - 1 + months, 12)
    y += d.year
    return _dt.date(y, m + 1, min(d.day, calendar.monthrange(y, m + 1)[1]))


def calendar_ranges(dates: Sequence, window: str, step: str, min_obs: int = 1) -> list[tuple[int, int]]:
    """Index ranges of calendar windows over strictly increasing dates.

    Window ``i`` covers ``[d0 + i step, d0 + i step + window)``.  As with
    observation-count windows, the first window that runs past the last date
    is the final one, kept only if it holds at least ``min_obs`` observations.
    """
    if not dates:
        raise InvalidInputError("calendar windows need a non-empty date column")
    ds = [d if isinstance(d, _dt.date) else parse_date(d) for d in dates]
    wn, wu = parse_period(window)
    sn, su = parse_period(step)
    first, last = ds[0], ds[-1]
    if _shift(first, wn, wu) > _shift(last, 1, "d"):
        raise InvalidInputError(f"a {window} window is longer than the panel's date span")
    out = []
    i = 0
    while True:
        lo_date = _shift(first, i * sn, su)
        hi_date = _shift(lo_date, wn, wu)
        lo = bisect.bisect_left(ds, lo_date)
        hi = bisect.bisect_left(ds, hi_date)
        if lo >= len(ds):
            break
        if hi_date > _shift(last, 1, "d"):
            if hi - lo >= min_obs:
                out.append((lo, hi))
            break
        if hi > lo:
            out.append((lo, hi))
        i += 1
    return out


def cross_sectional_average(m: MatrixEstimate | np.ndarray, j: int, include_diagonal: bool = False) -> float:
    """Mean TailCoR of series ``j`` with the others (row ``j``, self-pair excluded by default)."""
    tc = np.asarray(getattr(m, "tailcor", m), dtype=np.float64)
    n = tc.shape[0]
    if n < 2:
        raise InvalidInputError("cross-sectional averages need at least two series")
    row = tc[j]
    if include_diagonal:
        return float(np.mean(row))
    return float((np.sum(row) - row[j]) / (n - 1))


def cross_sectional_averages(m, include_diagonal: bool = False) -> np.ndarray:
    n = np.asarray(getattr(m, "tailcor", m)).shape[0]
    return np.array([cross_sectional_average(m, j, include_diagonal) for j in range(n)])


@dataclass(frozen=True)
class WindowRecord:
    start: int
    stop: int
    estimate: MatrixEstimate
    averages: np.ndarray
    start_date: Optional[str] = None
    end_date: Optional[str] = None
    bootstrap: Optional[MatrixBootstrap] = None

    @property
    def n(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class RollingResult:
    labels: tuple[str, ...]
    records: tuple[WindowRecord, ...]
    include_diagonal: bool = False

    @property
    def window_starts(self) -> list[int]:
        return [r.start for r in self.records]

    def averages(self) -> np.ndarray:
        """(windows x N) array of cross-sectional averages."""
        return np.array([r.averages for r in self.records]).reshape(len(self.records), len(self.labels))


def _split_panel(panel, labels):
    dates = None
    if hasattr(panel, "data") and hasattr(panel, "labels"):
        labels = labels or panel.labels
        dates = getattr(panel, "dates", None)
        panel = panel.data
    data = _as_panel_array(panel)
    labels = tuple(labels) if labels is not None else tuple(f"X{i + 1}" for i in range(data.shape[1]))
    return data, labels, dates


def roll_ranges(panel, ranges: Sequence[tuple[int, int]], cfg: TailConfig | None = None, *,
                labels=None, include_diagonal: bool = False, bootstrap: BootstrapSpec | None = None,
                jobs: int = 1) -> RollingResult:
    """Matrix estimates over explicit half-open index ranges."""
    cfg = cfg or TailConfig()
    data, labels, dates = _split_panel(panel, labels)
    for lo, hi in ranges:
        if not (0 <= lo < hi <= data.shape[0]):
            raise InvalidInputError(f"window range ({lo}, {hi}) outside a panel of length {data.shape[0]}")

    def one(bounds: tuple[int, int]) -> WindowRecord:
        lo, hi = bounds
        block = data[lo:hi]
        bs = None
        if bootstrap is not None:
            bs = bootstrap_matrix(block, cfg, bootstrap, labels=labels)
            est = bs.point
        else:
            est = tailcor_matrix(block, cfg, labels=labels)
        return WindowRecord(
            start=lo,
            stop=hi,
            estimate=est,
            averages=cross_sectional_averages(est, include_diagonal),
            start_date=None if dates is None else dates[lo],
            end_date=None if dates is None else dates[hi - 1],
            bootstrap=bs,
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(one, ranges))
    else:
        records = [one(b) for b in ranges]
    return RollingResult(labels, tuple(records), include_diagonal)


def roll(panel, wspec: WindowSpec, cfg: TailConfig | None = None, *, labels=None,
         include_diagonal: bool = False, bootstrap: BootstrapSpec | None = None, jobs: int = 1) -> RollingResult:
    """Matrix estimates over observation-count windows (see ``window_bounds``)."""
    data, labels, dates = _split_panel(panel, labels)
    ranges = window_bounds(data.shape[0], wspec)
    return roll_ranges(Panel(labels, data, dates), ranges, cfg, include_diagonal=include_diagonal,
                       bootstrap=bootstrap, jobs=jobs)
