"""Offset power-law fits of cumulative relaxation profiles.

The fitted family comes from integrating a relaxation profile
``v(t) ~ (t+tau)^(-p)`` from 0 to ``t``:

    V(t) = A * [(t+tau)^(1-p) - tau^(1-p)] / (1-p)

which is positive and continuous in ``p`` (the ``1/(1-p)`` factor keeps
it so on both sides of ``p=1``); at ``p = 1`` it degenerates to the
analytic limit ``V(t) = A * ln(1 + t/tau)``.  Fits minimize the mean
squared residual of ``log V`` over a log-spaced subsample of the lag
range, so every decade carries comparable weight.  The amplitude ``A``
has a closed form per ``(p, tau)`` candidate; the remaining two (or
one, with ``tau`` pinned to zero) parameters are found by multistart
Nelder-Mead descent from a coarse grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import floor, log10

import numpy as np
from scipy import optimize

from .errors import (
    BootstrapUnstable,
    InsufficientPositivePoints,
    MalformedRow,
    NoEvents,
    NonConvergence,
    VolrelaxError,
)
from .events import EventSet
from .profiles import CumulativeProfile, _profile_from_indices, cumulative
from .series import VolatilitySeries

__all__ = [
    "PowerLawFit",
    "FitConfig",
    "BootstrapResult",
    "fit_cumulative",
    "fit_offset_power_law",
    "tail_slope",
    "bootstrap_errors",
    "log_spaced_lags",
    "format_with_stderr",
    "fit_report_row",
    "write_fit_tsv",
    "read_fit_tsv",
    "FIT_COLUMNS",
]

FIT_COLUMNS = (
    "side",
    "zeta_multiple",
    "origin_filter",
    "sign_filter",
    "p",
    "p_stderr",
    "tau",
    "A",
    "t_min",
    "t_max",
    "method",
    "rms_log_residual",
)

# Coarse multistart grid for the (p, tau) search.
_P_GRID = np.linspace(0.05, 1.2, 5)
_TAU_GRID = np.linspace(0.0, 50.0, 5)
_N_STARTS = 3
_XATOL = 1e-8
_MAX_ITER = 10_000
_PENALTY = 1e12
# p values this close to 1 use the logarithmic limit of the model.
_LOG_LIMIT_EPS = 1e-6


@dataclass(frozen=True)
class PowerLawFit:
    """Result of one fit: ``V(t) ~ A * g(t; p, tau)``."""

    A: float
    p: float
    tau: float
    fit_range: tuple[int, int]
    rms_log_residual: float
    method: str
    p_stderr: float | None = None

    def __post_init__(self) -> None:
        if self.method not in ("full_fit", "tail_slope"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.A > 0:
            raise ValueError("amplitude must be positive")
        if not self.tau >= 0:
            raise ValueError("offset tau must be nonnegative")
        if self.fit_range[0] < 1 or self.fit_range[1] < self.fit_range[0]:
            raise ValueError(f"bad fit range {self.fit_range}")
        if not self.rms_log_residual >= 0:
            raise ValueError("rms residual must be nonnegative")
        if self.p_stderr is not None and not self.p_stderr >= 0:
            raise ValueError("p_stderr must be nonnegative")

    def summary(self) -> str:
        """One-line human-readable report, ``p`` with parenthesized error."""
        p_s = format_with_stderr(self.p, self.p_stderr)
        return (
            f"p={p_s} tau={self.tau:.4g} A={self.A:.4g} "
            f"range=[{self.fit_range[0]},{self.fit_range[1]}] "
            f"rms={self.rms_log_residual:.3g} ({self.method})"
        )


@dataclass(frozen=True)
class FitConfig:
    """Knobs shared by profile fits (and their bootstrap replicas)."""

    max_lag: int = 1000
    t_min: int = 5
    t_max: int | None = None
    tau_mode: str = "free"
    n_points: int = 30

    def __post_init__(self) -> None:
        if self.tau_mode not in ("free", "fixed_zero"):
            raise ValueError(f"tau_mode must be 'free' or 'fixed_zero', got {self.tau_mode!r}")
        if self.t_min < 1:
            raise ValueError("t_min must be >= 1")


@dataclass(frozen=True)
class BootstrapResult:
    """Replica exponents and their spread, per side."""

    p_minus: np.ndarray
    p_plus: np.ndarray
    stderr_minus: float
    stderr_plus: float
    n_failed: int
    n_replicas: int


def format_with_stderr(value: float, stderr: float | None) -> str:
    """Render ``value`` with one error digit in parentheses, e.g. ``0.47(4)``."""
    if stderr is None or not np.isfinite(stderr) or stderr <= 0:
        return f"{value:.3g}"
    exp = floor(log10(stderr))
    digit = round(stderr / 10.0**exp)
    if digit == 10:
        digit = 1
        exp += 1
    decimals = max(0, -exp)
    return f"{value:.{decimals}f}({digit})"


def log_spaced_lags(t_min: int, t_max: int, n_points: int = 30) -> np.ndarray:
    """Approximately log-spaced integer lags covering ``[t_min, t_max]``.

    Returns all lags when the range holds ``n_points`` or fewer;
    otherwise at least ``n_points`` distinct integers including both
    endpoints.
    """
    if not 1 <= t_min <= t_max:
        raise ValueError(f"need 1 <= t_min <= t_max, got [{t_min}, {t_max}]")
    total = t_max - t_min + 1
    if total <= n_points:
        return np.arange(t_min, t_max + 1, dtype=np.int64)
    k = n_points
    while True:
        cand = np.unique(np.rint(np.geomspace(t_min, t_max, k)).astype(np.int64))
        if cand.size >= n_points or k > 16 * total:
            return cand
        k *= 2


def _log_model(t: np.ndarray, p: float, tau: float) -> np.ndarray | None:
    """``ln g(t; p, tau)`` for the integrated-relaxation shape, or None
    where the parameters are invalid / overflow."""
    q = 1.0 - p
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if tau > 0.0:
            if abs(q) < _LOG_LIMIT_EPS:
                ln_g = np.log(np.log1p(t / tau))
            else:
                # tau^q * expm1(q*log1p(t/tau)) / q: positive for all q != 0,
                # cancellation-free, and -> log1p(t/tau) as q -> 0.
                g = np.power(tau, q) * np.expm1(q * np.log1p(t / tau)) / q
                ln_g = np.log(g)
        else:
            if q < _LOG_LIMIT_EPS:
                return None  # t^q/q is not a positive increasing shape for p >= 1
            ln_g = q * np.log(t) - np.log(q)
    if not np.all(np.isfinite(ln_g)):
        return None
    return ln_g


def _loss(t: np.ndarray, log_v: np.ndarray, p: float, tau: float) -> float:
    ln_g = _log_model(t, p, tau)
    if ln_g is None:
        return _PENALTY
    d = log_v - ln_g
    r = d - d.mean()
    return float(np.mean(r * r))


def _select_sample(
    lags: np.ndarray,
    values: np.ndarray,
    t_min: int,
    t_max: int,
    n_points: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Log-spaced positive sample of (t, log V) in the fit range."""
    sample = log_spaced_lags(t_min, t_max, n_points)
    pos = np.searchsorted(lags, sample)
    ok = (pos < lags.size) & (lags[np.minimum(pos, lags.size - 1)] == sample)
    sample, pos = sample[ok], pos[ok]
    if sample.size == 0:
        raise InsufficientPositivePoints("no computed lags in the fit range")
    v = values[pos]
    good = np.isfinite(v) & (v > 0)
    n_bad = int(sample.size - good.sum())
    if n_bad > 0.2 * sample.size:
        raise InsufficientPositivePoints(
            f"{n_bad}/{sample.size} sampled points are nonpositive or undefined"
        )
    if int(good.sum()) < 10:
        raise InsufficientPositivePoints(
            f"need >= 10 positive points in [{t_min}, {t_max}], got {int(good.sum())}"
        )
    return sample[good].astype(np.float64), np.log(v[good])


def fit_offset_power_law(
    lags: np.ndarray,
    values: np.ndarray,
    t_min: int = 5,
    t_max: int | None = None,
    tau_mode: str = "free",
    n_points: int = 30,
) -> PowerLawFit:
    """Fit ``values ~ A*g(t; p, tau)`` over integer ``lags``.

    ``lags`` must be sorted ascending; ``values`` is the curve to fit
    (a cumulative profile or an Omori count).  The optimizer is
    Nelder-Mead over ``(p, sqrt(tau))`` — the square-root transform
    enforces ``tau >= 0`` — started from the best three points of a
    coarse grid; with ``tau_mode='fixed_zero'`` the search is
    one-dimensional in ``p``.

    Raises
    ------
    InsufficientPositivePoints
        Fewer than 10 usable points, or more than 20% of the sampled
        points nonpositive.
    NonConvergence
        No start reached the optimizer tolerance within budget.
    """
    lags = np.asarray(lags, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    if t_max is None:
        t_max = int(lags[-1])
    if not 1 <= t_min <= t_max <= int(lags[-1]):
        raise ValueError(f"fit range [{t_min}, {t_max}] not within computed lags")
    if tau_mode not in ("free", "fixed_zero"):
        raise ValueError(f"tau_mode must be 'free' or 'fixed_zero', got {tau_mode!r}")
    t, log_v = _select_sample(lags, values, t_min, t_max, n_points)

    free_tau = tau_mode == "free"
    if free_tau:
        starts = [(p0, tau0) for p0 in _P_GRID for tau0 in _TAU_GRID]
    else:
        starts = [(p0, 0.0) for p0 in _P_GRID]
    coarse = sorted(
        range(len(starts)), key=lambda i: (_loss(t, log_v, *starts[i]), i)
    )[:_N_STARTS]

    best: tuple[float, float, float] | None = None
    for i in coarse:
        p0, tau0 = starts[i]
        if free_tau:
            x0 = np.array([p0, np.sqrt(tau0)])
            fun = lambda x: _loss(t, log_v, x[0], x[1] * x[1])
        else:
            x0 = np.array([p0])
            fun = lambda x: _loss(t, log_v, x[0], 0.0)
        res = optimize.minimize(
            fun,
            x0,
            method="Nelder-Mead",
            options={
                "xatol": _XATOL,
                "fatol": _XATOL**2,
                "maxiter": _MAX_ITER,
                "maxfev": _MAX_ITER,
            },
        )
        if not res.success or res.fun >= _PENALTY / 2:
            continue
        if best is None or res.fun < best[0]:
            tau_hat = float(res.x[1] ** 2) if free_tau else 0.0
            best = (float(res.fun), float(res.x[0]), tau_hat)
        if best is not None and best[0] == 0.0:
            break
    if best is None:
        raise NonConvergence(
            f"no start converged within {_MAX_ITER} iterations at tolerance {_XATOL}"
        )
    loss, p_hat, tau_hat = best
    ln_g = _log_model(t, p_hat, tau_hat)
    assert ln_g is not None
    ln_a = float(np.mean(log_v - ln_g))
    resid = log_v - ln_g - ln_a
    return PowerLawFit(
        A=float(np.exp(ln_a)),
        p=p_hat,
        tau=tau_hat,
        fit_range=(int(t_min), int(t_max)),
        rms_log_residual=float(np.sqrt(np.mean(resid * resid))),
        method="full_fit",
    )


def fit_cumulative(
    cum: CumulativeProfile,
    side: str,
    t_min: int = 5,
    t_max: int | None = None,
    tau_mode: str = "free",
    n_points: int = 30,
) -> PowerLawFit:
    """Fit one side of a cumulative profile (``'-'`` before, ``'+'`` after)."""
    return fit_offset_power_law(
        cum.lags, cum.side(side), t_min=t_min, t_max=t_max, tau_mode=tau_mode, n_points=n_points
    )


def tail_slope(
    lags: np.ndarray, values: np.ndarray, t_lo: int, t_hi: int
) -> PowerLawFit:
    """Exponent from the log-log tail slope: ``p = 1 - slope``.

    Ordinary least squares of ``log V`` on ``log t`` over every
    positive point in ``[t_lo, t_hi]``; the offset is reported as 0.
    """
    lags = np.asarray(lags, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    if not 1 <= t_lo <= t_hi:
        raise ValueError(f"need 1 <= t_lo <= t_hi, got [{t_lo}, {t_hi}]")
    sel = (lags >= t_lo) & (lags <= t_hi)
    t = lags[sel].astype(np.float64)
    v = values[sel]
    good = np.isfinite(v) & (v > 0)
    if int(good.sum()) < 5:
        raise InsufficientPositivePoints(
            f"need >= 5 positive points in [{t_lo}, {t_hi}], got {int(good.sum())}"
        )
    lt, lv = np.log(t[good]), np.log(v[good])
    slope, intercept = np.polyfit(lt, lv, 1)
    resid = lv - (slope * lt + intercept)
    return PowerLawFit(
        A=float(np.exp(intercept)),
        p=float(1.0 - slope),
        tau=0.0,
        fit_range=(int(t_lo), int(t_hi)),
        rms_log_residual=float(np.sqrt(np.mean(resid * resid))),
        method="tail_slope",
    )


def bootstrap_errors(
    vol: VolatilitySeries,
    events: EventSet,
    fit_config: FitConfig,
    B: int,
    seed: int,
) -> BootstrapResult:
    """Bootstrap standard errors of ``p`` for both sides.

    Replica ``r`` resamples the events with replacement using
    ``default_rng(seed + r)``, recomputes the profile and refits; the
    standard error is the sample standard deviation of the replica
    exponents.  The first ``B`` replicas are identical regardless of
    any larger ``B`` requested later (seeding is per replica).
    """
    if B < 2:
        raise ValueError("need at least 2 bootstrap replicas")
    if len(events) == 0:
        raise NoEvents("cannot bootstrap an empty event set")
    sigma = float(np.mean(vol.values))
    n_ev = len(events)
    p_m = np.full(B, np.nan)
    p_p = np.full(B, np.nan)
    n_failed = 0
    for r in range(B):
        rng = np.random.default_rng(seed + r)
        idx = events.indices[rng.integers(0, n_ev, n_ev)]
        try:
            prof = _profile_from_indices(vol.values, idx, fit_config.max_lag, sigma)
            cum = cumulative(prof)
            p_m[r] = fit_cumulative(
                cum,
                "-",
                t_min=fit_config.t_min,
                t_max=fit_config.t_max,
                tau_mode=fit_config.tau_mode,
                n_points=fit_config.n_points,
            ).p
            p_p[r] = fit_cumulative(
                cum,
                "+",
                t_min=fit_config.t_min,
                t_max=fit_config.t_max,
                tau_mode=fit_config.tau_mode,
                n_points=fit_config.n_points,
            ).p
        except VolrelaxError:
            n_failed += 1
    if n_failed > 0.1 * B:
        raise BootstrapUnstable(f"{n_failed}/{B} bootstrap replicas failed to fit")
    ok_m, ok_p = ~np.isnan(p_m), ~np.isnan(p_p)
    return BootstrapResult(
        p_minus=p_m,
        p_plus=p_p,
        stderr_minus=float(np.std(p_m[ok_m], ddof=1)),
        stderr_plus=float(np.std(p_p[ok_p], ddof=1)),
        n_failed=n_failed,
        n_replicas=B,
    )


def fit_report_row(
    side: str,
    zeta_multiple: float,
    origin_filter: str,
    sign_filter: str,
    fit: PowerLawFit | None,
    failure: str | None = None,
) -> tuple[str, ...]:
    """One fit-report TSV row; a failed fit becomes a marker row."""
    nan = repr(float("nan"))
    if fit is None:
        return (
            side,
            repr(float(zeta_multiple)),
            origin_filter,
            sign_filter,
            nan,
            nan,
            nan,
            nan,
            "0",
            "0",
            f"failed:{failure or 'unknown'}",
            nan,
        )
    stderr = nan if fit.p_stderr is None else repr(float(fit.p_stderr))
    return (
        side,
        repr(float(zeta_multiple)),
        origin_filter,
        sign_filter,
        repr(float(fit.p)),
        stderr,
        repr(float(fit.tau)),
        repr(float(fit.A)),
        str(fit.fit_range[0]),
        str(fit.fit_range[1]),
        fit.method,
        repr(float(fit.rms_log_residual)),
    )


def write_fit_tsv(rows: list[tuple[str, ...]], path: str) -> None:
    """Write fit-report rows under the standard header."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(FIT_COLUMNS) + "\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")


def read_fit_tsv(path: str) -> list[dict[str, object]]:
    """Read a fit report back as a list of typed row dicts."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or tuple(lines[0].split("\t")) != FIT_COLUMNS:
        raise MalformedRow(f"{path}: not a fit report")
    out = []
    for line in lines[1:]:
        parts = line.split("\t")
        if len(parts) != len(FIT_COLUMNS):
            raise MalformedRow(f"{path}: bad row {line!r}")
        row: dict[str, object] = dict(zip(FIT_COLUMNS, parts))
        for key in ("zeta_multiple", "p", "p_stderr", "tau", "A", "rms_log_residual"):
            row[key] = float(row[key])  # type: ignore[arg-type]
        for key in ("t_min", "t_max"):
            row[key] = int(row[key])  # type: ignore[arg-type]
        out.append(row)
    return out
