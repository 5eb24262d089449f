"""Hourly GHI ingestion: parsing, gap handling, windowing and the canonical file.

A series is stored as a start hour plus a dense float array; missing hours are
``NaN``.  Uniform one-hour spacing is therefore structural rather than checked
after the fact, and every gap in the source file becomes an explicit missing
marker.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from os import PathLike
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

from .errors import (
    BoundaryError,
    CadenceError,
    ConfigError,
    DataError,
    DataQualityError,
    DuplicateTimestampError,
    ParseError,
    RangeError,
)

log = logging.getLogger(__name__)

HOUR = timedelta(hours=1)
DEFAULT_SENTINEL = -9999.0
FILL_POLICIES = ("linear", "previous_day", "reject")


@dataclass(frozen=True)
class SiteMeta:
    latitude: float
    longitude: float
    utc_offset: float
    site_id: str = "site"

    def __post_init__(self):
        for name, lo, hi in (("latitude", -90, 90), ("longitude", -180, 180),
                             ("utc_offset", -12, 14)):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and lo <= v <= hi):
                raise ConfigError(f"{name}={v!r} outside [{lo}, {hi}]")

    def to_dict(self) -> dict:
        return {"latitude": self.latitude, "longitude": self.longitude,
                "utc_offset": self.utc_offset, "site_id": self.site_id}

    @classmethod
    def from_dict(cls, d: dict) -> "SiteMeta":
        return cls(float(d["latitude"]), float(d["longitude"]),
                   float(d["utc_offset"]), str(d.get("site_id", "site")))


# Denver International Airport, NSRDB 1991-2010 station 725650.
DENVER = SiteMeta(39.833, -104.65, -7.0, "725650")


@dataclass(frozen=True)
class IrradianceRecord:
    timestamp: datetime
    ghi: float | None  # None is the missing marker

    @property
    def missing(self) -> bool:
        return self.ghi is None


@dataclass(frozen=True, eq=False)
class IrradianceSeries:
    """Hourly GHI for one site, starting at ``start`` with one value per hour.

    ``filled`` lists the indices replaced by :func:`fill_missing`.
    """

    site: SiteMeta
    start: datetime
    ghi: np.ndarray
    filled: tuple[int, ...] = field(default=())

    def __post_init__(self):
        arr = np.array(self.ghi, dtype=float).reshape(-1)
        if self.start.minute or self.start.second or self.start.microsecond:
            raise CadenceError(f"series start {self.start} is not on the hour")
        present = arr[~np.isnan(arr)]
        if np.any(~np.isfinite(present)) or np.any(present < 0):
            raise DataError("ghi values must be finite and >= 0")
        arr.setflags(write=False)
        object.__setattr__(self, "ghi", arr)

    def __len__(self) -> int:
        return self.ghi.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, IrradianceSeries):
            return NotImplemented
        return (self.site == other.site and self.start == other.start
                and np.array_equal(self.ghi, other.ghi, equal_nan=True))

    @property
    def end(self) -> datetime:
        """Timestamp one hour past the last record."""
        return self.start + len(self) * HOUR

    @property
    def timestamps(self) -> list[datetime]:
        return [self.start + i * HOUR for i in range(len(self))]

    @property
    def hours(self) -> np.ndarray:
        """Local clock hour (0-23) of every sample."""
        return (self.start.hour + np.arange(len(self))) % 24

    @property
    def records(self) -> list[IrradianceRecord]:
        return [IrradianceRecord(t, None if np.isnan(v) else float(v))
                for t, v in zip(self.timestamps, self.ghi)]

    @property
    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.ghi)

    def dates(self) -> list[date]:
        """Calendar dates that the series covers completely (all 24 hours)."""
        first = self.start.date()
        if self.start.hour:
            first += timedelta(days=1)
        out = []
        d = first
        while datetime.combine(d, datetime.min.time()) + 24 * HOUR <= self.end:
            out.append(d)
            d += timedelta(days=1)
        return out

    def index_of(self, ts: datetime) -> int:
        return int((ts - self.start) // HOUR)

    def replace(self, ghi: np.ndarray, filled: tuple[int, ...] | None = None) -> "IrradianceSeries":
        return IrradianceSeries(self.site, self.start, ghi,
                                self.filled if filled is None else filled)

    def day_values(self, d: date) -> np.ndarray:
        return slice_window(self, d, 1).ghi


def _parse_timestamp(text: str, line: int) -> datetime:
    text = text.strip()
    rollover = False
    # Hour-ending archives write midnight as 24:00 of the previous day.
    if text.endswith("24:00"):
        text = text[:-5] + "00:00"
        rollover = True
    try:
        ts = datetime.fromisoformat(text)
    except ValueError:
        for fmt in ("%m/%d/%Y %H:%M", "%Y/%m/%d %H:%M", "%m/%d/%Y %H:%M:%S"):
            try:
                ts = datetime.strptime(text, fmt)
                break
            except ValueError:
                continue
        else:
            raise ParseError(f"malformed timestamp {text!r}", line=line) from None
    if ts.tzinfo is not None:
        ts = ts.replace(tzinfo=None)
    return ts + timedelta(days=1) if rollover else ts


def _parse_value(text: str, sentinel: float, line: int) -> float:
    text = text.strip()
    if text == "":
        return math.nan
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"non-numeric ghi {text!r}", line=line) from None
    if v == sentinel:
        return math.nan
    if not math.isfinite(v) or v < 0:
        raise ParseError(f"ghi {text!r} must be finite and >= 0", line=line)
    return v


def parse_hourly_csv(
    raw_text: str | TextIO,
    site: SiteMeta,
    *,
    timestamp_col: str = "timestamp",
    ghi_col: str = "ghi",
    time_col: str | None = None,
    delimiter: str = ",",
    sentinel: float = DEFAULT_SENTINEL,
    skip_rows: int = 0,
    hour_ending: bool = False,
) -> IrradianceSeries:
    """Parse delimiter-separated hourly GHI text into a gap-explicit series.

    Parameters
    ----------
    raw_text : str or text stream
        File contents. A header row must name ``timestamp_col`` and ``ghi_col``.
    site : SiteMeta
        Site the data belongs to.
    timestamp_col, ghi_col : str
        Header names of the timestamp and GHI columns.  For NSRDB 1991-2010
        station files use ``timestamp_col="YYYY-MM-DD"``, ``time_col="HH:MM (LST)"``
        and ``ghi_col="METSTAT Glo (Wh/m^2)"``.
    time_col : str, optional
        Separate clock-time column joined to the date column.
    sentinel : float
        Value read as a missing marker.
    skip_rows : int
        Lines to drop before the header (vendor metadata).
    hour_ending : bool
        Shift stamps back one hour so each marks the start of its interval.

    Returns
    -------
    IrradianceSeries
        Sorted series; hours absent from the file are missing markers.
    """
    stream = io.StringIO(raw_text) if isinstance(raw_text, str) else raw_text
    for _ in range(skip_rows):
        stream.readline()
    reader = csv.reader(stream, delimiter=delimiter)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty input, no header row", line=skip_rows + 1) from None
    cols = [timestamp_col, ghi_col] + ([time_col] if time_col else [])
    missing = [c for c in cols if c not in header]
    if missing:
        raise ParseError(f"header lacks column(s) {missing}; found {header}", line=skip_rows + 1)
    i_ts, i_ghi = header.index(timestamp_col), header.index(ghi_col)
    i_time = header.index(time_col) if time_col else None

    values: dict[datetime, float] = {}
    shift = HOUR if hour_ending else timedelta(0)
    for lineno, row in enumerate(reader, start=skip_rows + 2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) <= max(i_ts, i_ghi, i_time or 0):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
        stamp = row[i_ts] if i_time is None else f"{row[i_ts].strip()} {row[i_time].strip()}"
        ts = _parse_timestamp(stamp, lineno) - shift
        if ts in values:
            raise DuplicateTimestampError(f"duplicate timestamp {ts:%Y-%m-%d %H:%M} (line {lineno})")
        if ts.minute or ts.second or ts.microsecond:
            raise CadenceError(f"timestamp {ts} is not on the hour (line {lineno})")
        values[ts] = _parse_value(row[i_ghi], sentinel, lineno)

    if not values:
        raise ParseError("no data rows", line=skip_rows + 2)
    stamps = sorted(values)
    start = stamps[0]
    n = int((stamps[-1] - start) // HOUR) + 1
    ghi = np.full(n, np.nan)
    for ts in stamps:
        ghi[int((ts - start) // HOUR)] = values[ts]
    absent = n - len(stamps)
    if absent:
        log.info("inserted %d missing markers for absent hours", absent)
    return IrradianceSeries(site, start, ghi)


def read_hourly_csv(path: str | PathLike, site: SiteMeta, **kw) -> IrradianceSeries:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_hourly_csv(fh, site, **kw)


def fill_missing(series: IrradianceSeries, policy: str = "linear") -> IrradianceSeries:
    """Replace missing markers according to ``policy``.

    ``linear`` interpolates between the nearest present neighbours,
    ``previous_day`` copies the value 24 hours earlier, and ``reject`` refuses
    any gap.  Indices that were filled are recorded on the result.
    """
    if policy not in FILL_POLICIES:
        raise ConfigError(f"unknown fill policy {policy!r}; expected one of {FILL_POLICIES}")
    miss = series.missing_mask
    if not miss.any():
        return series
    idx = np.flatnonzero(miss)
    if policy == "reject":
        raise DataQualityError(
            f"{idx.size} missing value(s), first at {series.start + int(idx[0]) * HOUR}")
    ghi = series.ghi.copy()
    if policy == "linear":
        ok = np.flatnonzero(~miss)
        if ok.size == 0:
            raise BoundaryError("all values missing, nothing to interpolate from")
        if idx[0] < ok[0] or idx[-1] > ok[-1]:
            raise BoundaryError("leading or trailing missing values cannot be interpolated")
        ghi[idx] = np.interp(idx, ok, ghi[ok])
    else:
        for i in idx:
            if i < 24:
                raise BoundaryError(f"no previous day for missing hour {series.start + int(i) * HOUR}")
            ghi[i] = ghi[i - 24]
        if np.isnan(ghi).any():
            raise BoundaryError("previous-day value is itself missing")
    log.info("filled %d missing value(s) with policy %s", idx.size, policy)
    return series.replace(ghi, filled=tuple(int(i) for i in idx))


def slice_window(series: IrradianceSeries, start_date: date, n_days: int) -> IrradianceSeries:
    """Return ``n_days`` whole days (24 records each) beginning at ``start_date`` 00:00."""
    if n_days < 0:
        raise RangeError(f"n_days must be >= 0, got {n_days}")
    t0 = datetime.combine(start_date, datetime.min.time())
    i0 = series.index_of(t0)
    i1 = i0 + 24 * n_days
    if t0 < series.start or i1 > len(series):
        raise RangeError(
            f"window {start_date} +{n_days}d outside series {series.start:%Y-%m-%d %H:%M}"
            f" .. {series.end:%Y-%m-%d %H:%M}")
    return IrradianceSeries(series.site, t0, series.ghi[i0:i1])


def concat(parts: Sequence[IrradianceSeries]) -> IrradianceSeries:
    """Join contiguous series end to start."""
    if not parts:
        raise RangeError("nothing to concatenate")
    for a, b in zip(parts, parts[1:]):
        if a.end != b.start:
            raise CadenceError(f"series not contiguous at {a.end} / {b.start}")
    return IrradianceSeries(parts[0].site, parts[0].start, np.concatenate([p.ghi for p in parts]))


# -- canonical persistence ------------------------------------------------------

CANONICAL_HEADER = ("timestamp", "ghi")


def _fmt(v: float, sentinel: float = DEFAULT_SENTINEL) -> str:
    return f"{sentinel:.1f}" if np.isnan(v) else f"{v:.1f}"


def write_canonical(series: IrradianceSeries, out: str | PathLike | TextIO) -> None:
    """Write ``timestamp,ghi`` rows (ISO-8601, one decimal, ``-9999.0`` for missing)."""
    rows = ((f"{t:%Y-%m-%dT%H:%M}", _fmt(v)) for t, v in zip(series.timestamps, series.ghi))
    write_table(out, CANONICAL_HEADER, rows)


def read_canonical(path: str | PathLike, site: SiteMeta) -> IrradianceSeries:
    return read_hourly_csv(path, site)


def write_table(out: str | PathLike | TextIO, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write a small delimiter-separated table; used for every numeric output file."""
    if hasattr(out, "write"):
        _write_rows(out, header, rows)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        _write_rows(fh, header, rows)


def _write_rows(fh: TextIO, header, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)


def read_table(path: str | PathLike) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def iter_days(series: IrradianceSeries) -> Iterator[tuple[date, np.ndarray]]:
    for d in series.dates():
        yield d, series.day_values(d)
