"""Price series ingestion and return/volatility extraction.

The input format is a two-column CSV (``timestamp,price``) with ISO
timestamps, either dates (daily data) or datetimes (intraday data).
Returns are logarithmic, ``R(t) = ln P(t+1) - ln P(t)``, and volatility
is their absolute value.  Each return carries the slot-within-day index
of its *left* timestamp so that intraday seasonality can be estimated
and removed downstream.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from typing import IO

import numpy as np

from .errors import (
    EmptySeries,
    MalformedRow,
    NonMonotoneTimestamp,
    NonPositivePrice,
    SlotMismatch,
    TooShort,
)

__all__ = [
    "CsvSchema",
    "PriceRecord",
    "PriceSeries",
    "ReturnSeries",
    "VolatilitySeries",
    "SeriesStats",
    "parse_price_csv",
    "read_price_csv",
    "log_returns",
    "absolute_volatility",
    "mean_volatility",
    "reverse",
    "shuffle_surrogate",
]

_SECONDS_PER_DAY = 86400


@dataclass(frozen=True)
class CsvSchema:
    """How to read a price CSV.

    Parameters
    ----------
    timestamp_col, price_col : int
        Zero-based column positions.
    delimiter : str
        Field separator.
    header : bool or None
        ``True``/``False`` force the first row to be skipped/kept;
        ``None`` auto-detects (a first row whose timestamp field does
        not parse is treated as a header).
    cadence : str or None
        ``'1min'``, ``'5min'``, ``'daily'`` or ``None`` to infer from
        the timestamps.
    slots_per_day : int or None
        Number of intraday slots.  Only consulted when the slot grid
        cannot be derived from the timestamps themselves.
    """

    timestamp_col: int = 0
    price_col: int = 1
    delimiter: str = ","
    header: bool | None = None
    cadence: str | None = None
    slots_per_day: int | None = None


@dataclass(frozen=True)
class PriceRecord:
    """A single observation: timestamp plus strictly positive price."""

    timestamp: np.datetime64
    price: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.price) and self.price > 0):
            raise NonPositivePrice(f"price must be finite and > 0, got {self.price!r}")


@dataclass(frozen=True)
class PriceSeries:
    """Strictly increasing timestamps with positive prices.

    ``slot_index[i]`` is the intraday slot of record ``i`` on the grid
    of distinct times-of-day seen in the data (or a positional grid
    when the calendar is not derivable).  Daily data has a single slot.
    """

    timestamps: np.ndarray
    prices: np.ndarray
    cadence: str
    slots_per_day: int
    slot_index: np.ndarray

    def __post_init__(self) -> None:
        ts = np.asarray(self.timestamps, dtype="datetime64[s]")
        px = np.asarray(self.prices, dtype=np.float64)
        sl = np.asarray(self.slot_index, dtype=np.int32)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "prices", px)
        object.__setattr__(self, "slot_index", sl)
        if ts.size < 2:
            raise TooShort(f"need at least 2 records, got {ts.size}")
        if px.shape != ts.shape or sl.shape != ts.shape:
            raise ValueError("timestamps, prices and slot_index must be aligned")
        if not np.all(np.diff(ts.astype("int64")) > 0):
            bad = int(np.flatnonzero(np.diff(ts.astype("int64")) <= 0)[0]) + 1
            raise NonMonotoneTimestamp(
                f"timestamps must be strictly increasing (record {bad}: {ts[bad]})"
            )
        if not np.all(np.isfinite(px) & (px > 0)):
            bad = int(np.flatnonzero(~(np.isfinite(px) & (px > 0)))[0])
            raise NonPositivePrice(f"record {bad}: price {px[bad]!r}")
        if self.slots_per_day < 1:
            raise ValueError("slots_per_day must be >= 1")
        if sl.size and (sl.min() < 0 or sl.max() >= self.slots_per_day):
            raise ValueError("slot_index out of range")

    def __len__(self) -> int:
        return int(self.timestamps.size)

    def record(self, i: int) -> PriceRecord:
        return PriceRecord(self.timestamps[i], float(self.prices[i]))


@dataclass(frozen=True)
class ReturnSeries:
    """Log-returns on the grid inherited from the parent price series.

    ``timestamps`` are the left stamps of each return (``None`` for
    derived series that no longer live on a calendar, e.g. reversed
    ones).
    """

    values: np.ndarray
    slot_index: np.ndarray
    slots_per_day: int
    cadence: str
    timestamps: np.ndarray | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        sl = np.asarray(self.slot_index, dtype=np.int32)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "slot_index", sl)
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps, dtype="datetime64[s]")
            object.__setattr__(self, "timestamps", ts)
            if ts.shape != v.shape:
                raise ValueError("timestamps must align with values")
        if sl.shape != v.shape:
            raise ValueError("slot_index must align with values")
        if not np.all(np.isfinite(v)):
            raise ValueError("returns must be finite")
        if self.slots_per_day < 1:
            raise ValueError("slots_per_day must be >= 1")

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class VolatilitySeries:
    """Absolute returns, optionally intraday-adjusted."""

    values: np.ndarray
    slot_index: np.ndarray
    slots_per_day: int
    cadence: str
    adjusted: bool = False
    timestamps: np.ndarray | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        sl = np.asarray(self.slot_index, dtype=np.int32)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "slot_index", sl)
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps, dtype="datetime64[s]")
            object.__setattr__(self, "timestamps", ts)
            if ts.shape != v.shape:
                raise ValueError("timestamps must align with values")
        if sl.shape != v.shape:
            raise ValueError("slot_index must align with values")
        if v.size and not np.all(np.isfinite(v) & (v >= 0)):
            raise ValueError("volatility must be finite and non-negative")

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class SeriesStats:
    """Summary statistics of a volatility series.

    ``sigma`` is the *mean* volatility ``<|R|>`` over the whole series
    (not the standard deviation); thresholds are expressed as multiples
    of it.
    """

    sigma: float
    n_obs: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise EmptySeries(f"sigma must be finite and > 0, got {self.sigma!r}")


def _times_of_day(ts: np.ndarray) -> np.ndarray:
    return (ts - ts.astype("datetime64[D]")).astype("timedelta64[s]").astype(np.int64)


def _infer_cadence(ts: np.ndarray) -> str:
    step = int(np.median(np.diff(ts.astype("int64"))))
    if step >= _SECONDS_PER_DAY:
        return "daily"
    if step == 60:
        return "1min"
    if step == 300:
        return "5min"
    return f"{step}s"


def _assign_slots(
    ts: np.ndarray, cadence: str, requested: int | None
) -> tuple[int, np.ndarray]:
    if cadence == "daily":
        return 1, np.zeros(ts.size, dtype=np.int32)
    tod = _times_of_day(ts)
    grid = np.unique(tod)
    if grid.size >= 2:
        if requested is not None and requested != grid.size:
            raise SlotMismatch(
                f"data has {grid.size} distinct times of day, "
                f"but slots_per_day={requested} was requested"
            )
        return int(grid.size), np.searchsorted(grid, tod).astype(np.int32)
    # No usable times of day (e.g. bare dates declared intraday): fall
    # back to a positional grid.
    s = requested if requested is not None else 1
    return int(s), (np.arange(ts.size, dtype=np.int64) % s).astype(np.int32)


def parse_price_csv(stream: IO[str] | IO[bytes], schema: CsvSchema | None = None) -> PriceSeries:
    """Parse a ``timestamp,price`` CSV into a :class:`PriceSeries`.

    Raises
    ------
    MalformedRow
        Wrong field count or an unparseable timestamp/price.
    NonMonotoneTimestamp, NonPositivePrice, TooShort
        Validation failures, reported with the offending row.
    """
    schema = schema or CsvSchema()
    raw = stream.read()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    width = max(schema.timestamp_col, schema.price_col) + 1
    ts_strs: list[str] = []
    px_strs: list[str] = []
    rows = csv.reader(io.StringIO(raw), delimiter=schema.delimiter)
    lineno = 0
    for row in rows:
        lineno += 1
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) < width:
            raise MalformedRow(f"line {lineno}: expected >= {width} fields, got {len(row)}")
        ts_strs.append(row[schema.timestamp_col].strip())
        px_strs.append(row[schema.price_col].strip())

    skip_header = schema.header
    if skip_header is None and ts_strs:
        try:
            np.datetime64(ts_strs[0])
            skip_header = False
        except ValueError:
            skip_header = True
    if skip_header:
        ts_strs, px_strs = ts_strs[1:], px_strs[1:]

    if len(ts_strs) < 2:
        raise TooShort(f"need at least 2 data rows, got {len(ts_strs)}")

    try:
        ts = np.array(ts_strs, dtype="datetime64[s]")
    except ValueError:
        for i, s in enumerate(ts_strs):
            try:
                np.datetime64(s)
            except ValueError:
                raise MalformedRow(f"unparseable timestamp {s!r} (data row {i})") from None
        raise
    try:
        px = np.array(px_strs, dtype=np.float64)
    except ValueError:
        for i, s in enumerate(px_strs):
            try:
                float(s)
            except ValueError:
                raise MalformedRow(f"unparseable price {s!r} (data row {i})") from None
        raise

    cadence = schema.cadence or _infer_cadence(ts)
    slots_per_day, slot_index = _assign_slots(ts, cadence, schema.slots_per_day)
    return PriceSeries(
        timestamps=ts,
        prices=px,
        cadence=cadence,
        slots_per_day=slots_per_day,
        slot_index=slot_index,
    )


def read_price_csv(path: str, schema: CsvSchema | None = None) -> PriceSeries:
    """Read a price CSV from disk."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_price_csv(fh, schema)


def log_returns(prices: PriceSeries, include_session_crossing: bool = True) -> ReturnSeries:
    """Log-returns ``ln P(t+1) - ln P(t)``.

    With ``include_session_crossing=False`` (intraday data only) the
    overnight return between the last record of one day and the first
    of the next is dropped.
    """
    values = np.diff(np.log(prices.prices))
    slots = prices.slot_index[:-1].copy()
    stamps = prices.timestamps[:-1].copy()
    if not include_session_crossing and prices.cadence != "daily":
        days = prices.timestamps.astype("datetime64[D]")
        keep = days[1:] == days[:-1]
        values, slots, stamps = values[keep], slots[keep], stamps[keep]
    if values.size == 0:
        raise TooShort("no returns left after dropping session-crossing steps")
    return ReturnSeries(
        values=values,
        slot_index=slots,
        slots_per_day=prices.slots_per_day,
        cadence=prices.cadence,
        timestamps=stamps,
    )


def absolute_volatility(returns: ReturnSeries) -> VolatilitySeries:
    """Volatility as ``|R(t)|`` on the same grid as the returns."""
    return VolatilitySeries(
        values=np.abs(returns.values),
        slot_index=returns.slot_index,
        slots_per_day=returns.slots_per_day,
        cadence=returns.cadence,
        adjusted=False,
        timestamps=returns.timestamps,
    )


def mean_volatility(vol: VolatilitySeries) -> SeriesStats:
    """Mean volatility ``sigma = <|R|>`` over the full series."""
    if len(vol) == 0:
        raise EmptySeries("cannot average an empty volatility series")
    return SeriesStats(sigma=float(np.mean(vol.values)), n_obs=len(vol))


def reverse(returns: ReturnSeries) -> ReturnSeries:
    """Time-reversed copy (values and slots flipped, calendar dropped)."""
    return ReturnSeries(
        values=returns.values[::-1].copy(),
        slot_index=returns.slot_index[::-1].copy(),
        slots_per_day=returns.slots_per_day,
        cadence=returns.cadence,
        timestamps=None,
    )


def shuffle_surrogate(returns: ReturnSeries, seed: int) -> ReturnSeries:
    """Random permutation of the return values on the fixed slot grid.

    Destroys all temporal structure while keeping the marginal
    distribution; the slot grid (and calendar, if any) stays in place.
    """
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(returns))
    return replace(returns, values=returns.values[perm])
