"""Deterministic synthetic daily quotes for demos and tests.

Two log-price paths share a common random-walk factor and carry annual and
multi-year cycles; the first leads the second by a few months at short
horizons. Business days only, 1986-01-01 to 2010-12-31.
"""
from __future__ import annotations

import datetime as dt
from pathlib import Path
from typing import List, Tuple

import numpy as np

from .report import csv_text

DATA_DIR = Path(__file__).with_name("data")
FIXTURE_SEED = 1
FIXTURE_FILES = ("SYNTH_A.csv", "SYNTH_B.csv")


def business_days(start: dt.date, end: dt.date) -> List[dt.date]:
    days, d = [], start
    one = dt.timedelta(days=1)
    while d <= end:
        if d.weekday() < 5:
            days.append(d)
        d += one
    return days


def synthetic_pair(seed: int = FIXTURE_SEED, start=dt.date(1986, 1, 1),
                   end=dt.date(2010, 12, 31)) -> Tuple[List[dt.date], np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    days = business_days(start, end)
    n = len(days)
    t = np.arange(n) / 21.0  # months, roughly
    common = np.cumsum(rng.normal(0.0002, 0.006, n))
    lead = 63  # about three months
    shock = rng.normal(0, 0.008, n + lead)
    a_own = np.cumsum(shock[lead:])
    b_own = 0.5 * np.cumsum(shock[:n]) + np.cumsum(rng.normal(0, 0.006, n))
    cycle_a = 0.06 * np.sin(2 * np.pi * t / 12) + 0.10 * np.sin(2 * np.pi * t / 24 + 1.0)
    cycle_b = 0.04 * np.sin(2 * np.pi * t / 12 + 0.5) + 0.12 * np.sin(2 * np.pi * t / 60)
    log_a = np.log(600.0) + common + a_own + cycle_a
    log_b = np.log(1500.0) + 0.8 * common + b_own + cycle_b
    return days, np.round(np.exp(log_a), 2), np.round(np.exp(log_b), 2)


def write_fixture_pair(directory=DATA_DIR, seed: int = FIXTURE_SEED) -> List[Path]:
    """Write the two quote files and return their paths."""
    days, a, b = synthetic_pair(seed)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, closes in zip(FIXTURE_FILES, (a, b)):
        rows = ([d.isoformat(), f"{c:.2f}"] for d, c in zip(days, closes))
        path = directory / name
        path.write_text(csv_text(["Date", "Close"], rows))
        paths.append(path)
    return paths


def fixture_paths() -> List[Path]:
    """Paths of the bundled quote files."""
    return [DATA_DIR / name for name in FIXTURE_FILES]
