"""Event-conditioned volatility profiles and aftershock counts.

Given a volatility series and a set of large-volatility events at
positions ``t'``, the *remanent* profile ``v_plus(t)`` measures the
normalized mean volatility ``t`` steps after the events, and the
*anti-remanent* profile ``v_minus(t)`` the same quantity ``t`` steps
before them:

    v(t) = [<|R(t' +/- t)|>_c - sigma] / Z,      Z = <|R(t')|>_c - sigma

where ``<.>_c`` averages over the events whose offset stays inside the
series and ``sigma`` is the mean volatility of the whole series.  By
construction ``v(0) = 1`` and, for independent data, ``v(t >= 1)``
vanishes in expectation.

``V(t) = sum_{s=1..t} v(s)`` accumulates the profile into the smoother
object that is actually fitted.  The Omori-style counts ``N(t)`` use a
second, lower threshold: they give the mean number of steps within
``t`` of a mainshock whose volatility exceeds ``zeta1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateZ, EmptySeries, MalformedRow, NoEvents
from .events import EventSet
from .series import SeriesStats, VolatilitySeries

__all__ = [
    "ConditionedProfile",
    "CumulativeProfile",
    "OmoriProfile",
    "remanent_profile",
    "cumulative",
    "omori_counts",
    "write_profile_tsv",
    "read_profile_tsv",
    "write_omori_tsv",
    "read_omori_tsv",
]

# Cells (events x lags) processed per accumulation chunk.  Fixed so
# that per-lag sums are accumulated in a reproducible order.
_CHUNK_CELLS = 2_000_000

PROFILE_COLUMNS = ("t", "v_minus", "v_plus", "V_minus", "V_plus", "count_minus", "count_plus")
OMORI_COLUMNS = PROFILE_COLUMNS + ("N_minus", "N_plus")


@dataclass(frozen=True)
class ConditionedProfile:
    """Remanent/anti-remanent profiles on lags ``0..max_lag``.

    ``counts_minus[t]``/``counts_plus[t]`` record how many events had
    ``t' -/+ t`` inside the series, i.e. the denominators of the
    conditional averages.  Lags no event can reach hold NaN.
    """

    max_lag: int
    v_minus: np.ndarray
    v_plus: np.ndarray
    counts_minus: np.ndarray
    counts_plus: np.ndarray
    Z: float
    sigma: float
    n_events: int

    def __post_init__(self) -> None:
        vm = np.asarray(self.v_minus, dtype=np.float64)
        vp = np.asarray(self.v_plus, dtype=np.float64)
        cm = np.asarray(self.counts_minus, dtype=np.int64)
        cp = np.asarray(self.counts_plus, dtype=np.int64)
        for name, arr in (("v_minus", vm), ("v_plus", vp), ("counts_minus", cm), ("counts_plus", cp)):
            if arr.shape != (self.max_lag + 1,):
                raise ValueError(f"{name} must have max_lag+1 entries")
        object.__setattr__(self, "v_minus", vm)
        object.__setattr__(self, "v_plus", vp)
        object.__setattr__(self, "counts_minus", cm)
        object.__setattr__(self, "counts_plus", cp)
        if self.max_lag < 1:
            raise ValueError("max_lag must be >= 1")
        if self.n_events < 1:
            raise NoEvents("profile needs at least one event")
        if not (vm[0] == 1.0 and vp[0] == 1.0):
            raise ValueError("v(0) must be exactly 1")
        if cm[0] != self.n_events or cp[0] != self.n_events:
            raise ValueError("lag-0 counts must equal n_events")
        if np.any(np.diff(cm) > 0) or np.any(np.diff(cp) > 0):
            raise ValueError("counts must be nonincreasing in lag")


@dataclass(frozen=True)
class CumulativeProfile:
    """Partial sums ``V(t) = sum_{s=1..t} v(s)`` with ``V(0) = 0``.

    Arrays are indexed by lag like the parent profile, so ``V_plus[t]``
    is ``V_plus(t)`` directly.
    """

    profile: ConditionedProfile
    V_minus: np.ndarray
    V_plus: np.ndarray

    def __post_init__(self) -> None:
        vm = np.asarray(self.V_minus, dtype=np.float64)
        vp = np.asarray(self.V_plus, dtype=np.float64)
        object.__setattr__(self, "V_minus", vm)
        object.__setattr__(self, "V_plus", vp)
        n = self.profile.max_lag + 1
        if vm.shape != (n,) or vp.shape != (n,):
            raise ValueError("cumulative arrays must align with the profile")
        if vm[0] != 0.0 or vp[0] != 0.0:
            raise ValueError("V(0) must be 0")

    @property
    def lags(self) -> np.ndarray:
        return np.arange(self.profile.max_lag + 1, dtype=np.int64)

    def side(self, side: str) -> np.ndarray:
        """The ``V`` array for side ``'-'`` (before) or ``'+'`` (after)."""
        if side == "-":
            return self.V_minus
        if side == "+":
            return self.V_plus
        raise ValueError(f"side must be '-' or '+', got {side!r}")


@dataclass(frozen=True)
class OmoriProfile:
    """Mean exceedance counts around mainshocks, lags ``0..max_lag``."""

    max_lag: int
    N_minus: np.ndarray
    N_plus: np.ndarray
    zeta_main: float
    zeta1: float
    zeta_main_multiple: float
    zeta1_multiple: float
    n_mainshocks: int

    def __post_init__(self) -> None:
        nm = np.asarray(self.N_minus, dtype=np.float64)
        np_ = np.asarray(self.N_plus, dtype=np.float64)
        object.__setattr__(self, "N_minus", nm)
        object.__setattr__(self, "N_plus", np_)
        if nm.shape != (self.max_lag + 1,) or np_.shape != (self.max_lag + 1,):
            raise ValueError("count arrays must have max_lag+1 entries")
        if nm[0] != 0.0 or np_[0] != 0.0:
            raise ValueError("N(0) must be 0")
        t = np.arange(self.max_lag + 1)
        for name, arr in (("N_minus", nm), ("N_plus", np_)):
            if np.any(np.diff(arr) < 0):
                raise ValueError(f"{name} must be nondecreasing")
            if np.any(arr > t + 1e-9):
                raise ValueError(f"{name} cannot exceed t")
        if not 0 < self.zeta1 < self.zeta_main:
            raise ValueError("need 0 < zeta1 < zeta_main")

    def side(self, side: str) -> np.ndarray:
        if side == "-":
            return self.N_minus
        if side == "+":
            return self.N_plus
        raise ValueError(f"side must be '-' or '+', got {side!r}")


def _conditional_sums(
    values: np.ndarray, indices: np.ndarray, max_lag: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-lag sums and in-bounds counts of ``values[index -/+ lag]``.

    ``indices`` may contain repeats in any order (bootstrap replicas
    resample events with replacement); each occurrence contributes
    independently.  Chunked so memory stays bounded and the
    accumulation order is fixed.
    """
    n = values.size
    n_lags = max_lag + 1
    lags = np.arange(n_lags, dtype=np.int64)
    sums_m = np.zeros(n_lags)
    sums_p = np.zeros(n_lags)
    cnts_m = np.zeros(n_lags, dtype=np.int64)
    cnts_p = np.zeros(n_lags, dtype=np.int64)
    chunk = max(1, _CHUNK_CELLS // n_lags)
    for lo in range(0, indices.size, chunk):
        e = indices[lo : lo + chunk, None]
        after = e + lags
        ok = after < n
        sums_p += np.where(ok, values[np.where(ok, after, 0)], 0.0).sum(axis=0)
        cnts_p += ok.sum(axis=0)
        before = e - lags
        ok = before >= 0
        sums_m += np.where(ok, values[np.where(ok, before, 0)], 0.0).sum(axis=0)
        cnts_m += ok.sum(axis=0)
    return sums_m, cnts_m, sums_p, cnts_p


def _profile_from_indices(
    values: np.ndarray, indices: np.ndarray, max_lag: int, sigma: float
) -> ConditionedProfile:
    sums_m, cnts_m, sums_p, cnts_p = _conditional_sums(values, indices, max_lag)
    c0 = sums_p[0] / cnts_p[0]
    z = c0 - sigma
    if not z > 1e-12 * sigma:
        raise DegenerateZ(
            f"<|R|> over events ({c0:g}) does not exceed sigma ({sigma:g}); "
            "threshold does not select above-average volatility"
        )
    with np.errstate(invalid="ignore", divide="ignore"):
        v_m = np.where(cnts_m > 0, (sums_m / cnts_m - sigma) / z, np.nan)
        v_p = np.where(cnts_p > 0, (sums_p / cnts_p - sigma) / z, np.nan)
    return ConditionedProfile(
        max_lag=max_lag,
        v_minus=v_m,
        v_plus=v_p,
        counts_minus=cnts_m,
        counts_plus=cnts_p,
        Z=float(z),
        sigma=float(sigma),
        n_events=int(indices.size),
    )


def remanent_profile(vol: VolatilitySeries, events: EventSet, max_lag: int) -> ConditionedProfile:
    """Compute ``v_minus``/``v_plus`` over lags ``0..max_lag``.

    Events closer than ``max_lag`` to an edge contribute only to the
    lags that stay in bounds; the per-lag counts record the effective
    denominators.

    Raises
    ------
    NoEvents
        The event set is empty.
    DegenerateZ
        The events' mean volatility does not exceed ``sigma``, so the
        normalization is ill-defined.
    """
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    if len(events) == 0:
        raise NoEvents("cannot condition on an empty event set")
    if len(vol) == 0:
        raise EmptySeries("empty volatility series")
    sigma = float(np.mean(vol.values))
    return _profile_from_indices(vol.values, events.indices, max_lag, sigma)


def cumulative(profile: ConditionedProfile) -> CumulativeProfile:
    """Accumulate ``v`` into ``V(t) = sum_{s=1..t} v(s)``.

    Sequential partial sums, so ``V(t) == V(t-1) + v(t)`` holds exactly
    in floating point.  Lag 0 is excluded: ``v(0) = 1`` is a
    normalization artifact, not signal.
    """
    v_m = np.concatenate(([0.0], np.cumsum(profile.v_minus[1:])))
    v_p = np.concatenate(([0.0], np.cumsum(profile.v_plus[1:])))
    return CumulativeProfile(profile=profile, V_minus=v_m, V_plus=v_p)


def omori_counts(
    vol: VolatilitySeries,
    mainshocks: EventSet,
    m1: float,
    stats: SeriesStats,
    max_lag: int,
) -> OmoriProfile:
    """Mean number of ``|R| > m1*sigma`` steps within ``t`` of a mainshock.

    ``N_plus(t)`` counts exceedances at offsets ``1..t`` after each
    mainshock (``N_minus`` before), averaged over *all* mainshocks;
    out-of-bounds offsets simply do not count.
    """
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    if not 0 < m1 < mainshocks.zeta_multiple:
        raise ValueError(
            f"aftershock threshold multiple must be in (0, {mainshocks.zeta_multiple}), got {m1}"
        )
    if len(mainshocks) == 0:
        raise NoEvents("no mainshocks to condition on")
    zeta1 = m1 * stats.sigma
    exceed = (vol.values > zeta1).astype(np.float64)
    sums_m, _, sums_p, _ = _conditional_sums(exceed, mainshocks.indices, max_lag)
    n = len(mainshocks)
    n_m = np.concatenate(([0.0], np.cumsum(sums_m[1:]) / n))
    n_p = np.concatenate(([0.0], np.cumsum(sums_p[1:]) / n))
    return OmoriProfile(
        max_lag=max_lag,
        N_minus=n_m,
        N_plus=n_p,
        zeta_main=mainshocks.zeta_abs,
        zeta1=float(zeta1),
        zeta_main_multiple=mainshocks.zeta_multiple,
        zeta1_multiple=float(m1),
        n_mainshocks=n,
    )


def _write_rows(path: str, header: tuple[str, ...], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")


def write_profile_tsv(cum: CumulativeProfile, path: str) -> None:
    """Write one row per lag: profile, cumulative and counts columns."""
    p = cum.profile
    rows = (
        (
            str(t),
            repr(float(p.v_minus[t])),
            repr(float(p.v_plus[t])),
            repr(float(cum.V_minus[t])),
            repr(float(cum.V_plus[t])),
            str(int(p.counts_minus[t])),
            str(int(p.counts_plus[t])),
        )
        for t in range(p.max_lag + 1)
    )
    _write_rows(path, PROFILE_COLUMNS, rows)


def write_omori_tsv(cum: CumulativeProfile, omori: OmoriProfile, path: str) -> None:
    """Profile columns for the mainshocks plus the ``N`` count columns."""
    p = cum.profile
    if omori.max_lag != p.max_lag:
        raise ValueError("profile and Omori counts must share max_lag")
    rows = (
        (
            str(t),
            repr(float(p.v_minus[t])),
            repr(float(p.v_plus[t])),
            repr(float(cum.V_minus[t])),
            repr(float(cum.V_plus[t])),
            str(int(p.counts_minus[t])),
            str(int(p.counts_plus[t])),
            repr(float(omori.N_minus[t])),
            repr(float(omori.N_plus[t])),
        )
        for t in range(p.max_lag + 1)
    )
    _write_rows(path, OMORI_COLUMNS, rows)


def _read_tsv(path: str, expected: tuple[str, ...]) -> dict[str, np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MalformedRow(f"{path}: empty file")
    header = tuple(lines[0].split("\t"))
    if header != expected:
        raise MalformedRow(f"{path}: unexpected columns {header}")
    cols: list[list[float]] = [[] for _ in expected]
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != len(expected):
            raise MalformedRow(f"{path} line {lineno}: expected {len(expected)} fields")
        for c, s in zip(cols, parts):
            c.append(float(s))
    out: dict[str, np.ndarray] = {}
    for name, c in zip(expected, cols):
        arr = np.asarray(c, dtype=np.float64)
        if name == "t" or name.startswith("count"):
            arr = arr.astype(np.int64)
        out[name] = arr
    return out


def read_profile_tsv(path: str) -> dict[str, np.ndarray]:
    """Read a profile TSV back as a column dict (inverse of the writer)."""
    return _read_tsv(path, PROFILE_COLUMNS)


def read_omori_tsv(path: str) -> dict[str, np.ndarray]:
    """Read an Omori TSV back as a column dict."""
    return _read_tsv(path, OMORI_COLUMNS)
