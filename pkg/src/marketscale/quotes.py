"""Daily quote ingestion and monthly averaging."""
from __future__ import annotations

import csv
import datetime as dt
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .errors import MissingMonth, NonMonotoneDates, NonPositiveClose, ParseError
from .series import TimeSeries, YearMonth, format_month, shift_month

_DELIMITERS = ",;\t|"


@dataclass(frozen=True)
class RawQuoteFile:
    dates: List[dt.date]
    closes: np.ndarray
    label: str
    path: str = ""

    def __len__(self) -> int:
        return len(self.dates)


def parse_month(text: str) -> YearMonth:
    """``"YYYY-MM"`` to ``(year, month)``."""
    try:
        year, month = (int(p) for p in text.strip().split("-"))
    except ValueError:
        raise ValueError(f"expected YYYY-MM, got {text!r}") from None
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range in {text!r}")
    return year, month


def months_between(start: YearMonth, end: YearMonth) -> int:
    """Inclusive month count from ``start`` to ``end``."""
    return (end[0] - start[0]) * 12 + end[1] - start[1] + 1


def _sniff(header: str) -> str:
    counts = {d: header.count(d) for d in _DELIMITERS}
    best = max(counts, key=counts.get)
    return best if counts[best] else ","


def ingest(path, date_column: str = "Date", close_column: str = "Close",
           window: Optional[Tuple[YearMonth, YearMonth]] = None,
           label: Optional[str] = None) -> RawQuoteFile:
    """Read and validate a delimiter-separated daily quote file.

    Every data row is validated, then rows outside ``window`` (inclusive
    months) are dropped.

    Raises
    ------
    ParseError
        Missing columns, unparseable dates or closes (with line number).
    NonPositiveClose
        A close that is zero, negative or not finite.
    NonMonotoneDates
        A date that repeats or goes backwards.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("file is empty", line=1)
    delim = _sniff(lines[0])
    reader = csv.reader(lines, delimiter=delim)
    header = [h.strip() for h in next(reader)]
    try:
        di, ci = header.index(date_column), header.index(close_column)
    except ValueError:
        raise ParseError(f"header lacks {date_column!r} or {close_column!r}: {header}", line=1) from None

    dates: List[dt.date] = []
    closes: List[float] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) <= max(di, ci):
            raise ParseError(f"expected at least {max(di, ci) + 1} fields, got {len(row)}", line=lineno)
        try:
            day = dt.date.fromisoformat(row[di].strip())
        except ValueError:
            raise ParseError(f"bad date {row[di]!r}", line=lineno) from None
        try:
            close = float(row[ci])
        except ValueError:
            raise ParseError(f"bad close {row[ci]!r}", line=lineno) from None
        if not np.isfinite(close) or close <= 0:
            raise NonPositiveClose(f"close {row[ci].strip()} is not a positive number", line=lineno)
        if dates and day <= dates[-1]:
            what = "duplicate" if day == dates[-1] else "out-of-order"
            raise NonMonotoneDates(f"{what} date {day.isoformat()}", line=lineno)
        dates.append(day)
        closes.append(close)

    if window is not None:
        lo, hi = window
        keep = [i for i, d in enumerate(dates) if lo <= (d.year, d.month) <= hi]
        dates = [dates[i] for i in keep]
        closes = [closes[i] for i in keep]
    return RawQuoteFile(dates, np.array(closes), label or path.stem, str(path))


def monthly_average(raw: RawQuoteFile,
                    window: Optional[Tuple[YearMonth, YearMonth]] = None) -> TimeSeries:
    """Arithmetic mean of closes per calendar month.

    The output covers ``window`` if given, else the span of the data; every
    month in it must have at least one quote.
    """
    groups: "OrderedDict[YearMonth, List[float]]" = OrderedDict()
    for day, close in zip(raw.dates, raw.closes):
        groups.setdefault((day.year, day.month), []).append(float(close))
    if window is None:
        if not groups:
            raise MissingMonth("no quotes at all")
        keys = list(groups)
        window = (keys[0], keys[-1])
    start, end = window
    count = months_between(start, end)
    missing = [shift_month(start, i) for i in range(count) if shift_month(start, i) not in groups]
    if missing:
        names = ", ".join(format_month(m) for m in missing[:5])
        more = f" and {len(missing) - 5} more" if len(missing) > 5 else ""
        raise MissingMonth(f"{raw.label}: no quotes in {names}{more}")
    values = [np.mean(groups[shift_month(start, i)]) for i in range(count)]
    return TimeSeries(values, start, raw.label)
