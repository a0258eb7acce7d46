"""Intraday volatility pattern estimation and removal.

Markets show a systematic U-shaped volatility profile across the
trading day.  The pattern ``A(s)`` is the mean volatility in slot ``s``
normalized so that the average factor over slots is one; dividing each
observation by its slot factor flattens the seasonality without
changing the overall volatility scale.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DailyCadence, EmptySlot, SlotMismatch
from .series import VolatilitySeries

__all__ = [
    "IntradayPattern",
    "estimate_pattern",
    "remove_pattern",
    "write_pattern_tsv",
    "read_pattern_tsv",
]


@dataclass(frozen=True)
class IntradayPattern:
    """Multiplicative seasonality factors, one per intraday slot."""

    factors: np.ndarray
    slots_per_day: int

    def __post_init__(self) -> None:
        f = np.asarray(self.factors, dtype=np.float64)
        object.__setattr__(self, "factors", f)
        if f.size != self.slots_per_day:
            raise ValueError("need exactly one factor per slot")
        if not np.all(np.isfinite(f) & (f > 0)):
            raise ValueError("pattern factors must be finite and positive")
        if abs(float(np.mean(f)) - 1.0) > 1e-12:
            raise ValueError("pattern factors must average to 1")


def estimate_pattern(vol: VolatilitySeries) -> IntradayPattern:
    """Per-slot mean volatility, normalized to unit average factor.

    Raises
    ------
    DailyCadence
        The series has a single slot per day, so there is no intraday
        pattern to estimate.
    EmptySlot
        Some slot has no observations.
    """
    s = vol.slots_per_day
    if s < 2:
        raise DailyCadence("series has a single slot per day")
    counts = np.bincount(vol.slot_index, minlength=s)
    if np.any(counts == 0):
        empty = np.flatnonzero(counts == 0)
        raise EmptySlot(f"no observations in slot(s) {empty.tolist()}")
    means = np.bincount(vol.slot_index, weights=vol.values, minlength=s) / counts
    return IntradayPattern(factors=means / means.mean(), slots_per_day=s)


def remove_pattern(vol: VolatilitySeries, pattern: IntradayPattern) -> VolatilitySeries:
    """Divide each observation by its slot factor."""
    if pattern.slots_per_day != vol.slots_per_day:
        raise SlotMismatch(
            f"pattern has {pattern.slots_per_day} slots, series has {vol.slots_per_day}"
        )
    return replace(vol, values=vol.values / pattern.factors[vol.slot_index], adjusted=True)


def write_pattern_tsv(pattern: IntradayPattern, path: str) -> None:
    """Dump the pattern as ``slot<TAB>factor`` rows, one per slot."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("slot\tfactor\n")
        for s, f in enumerate(pattern.factors):
            fh.write(f"{s}\t{float(f)!r}\n")


def read_pattern_tsv(path: str) -> IntradayPattern:
    """Read a pattern dump back (inverse of :func:`write_pattern_tsv`)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    factors = [float(line.split("\t")[1]) for line in lines[1:] if line]
    return IntradayPattern(factors=np.asarray(factors), slots_per_day=len(factors))
