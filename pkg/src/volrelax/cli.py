"""Command-line pipeline: analyze / omori / synth / pattern / events.

A run reads one price CSV, extracts returns and volatility, optionally
removes the intraday pattern, selects large-volatility events per
threshold, and writes plot-ready TSVs plus a fit report into the output
directory.  Runs are fully deterministic: identical configuration and
input produce byte-identical output directories.

Configuration comes from flags, optionally layered over a flat
``key = value`` config file (flags win).  ``config.echo`` in the output
directory records the effective configuration and is itself a valid
config file.

Exit codes: 0 success, 1 invalid configuration, 2 data error, 3 one or
more fits failed (partial outputs are kept, with marker rows).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError, FitError, VolrelaxError
from .events import (
    EventSet,
    apply_labels,
    classify_sign,
    decluster,
    filter_events,
    load_packaged_labels,
    read_label_file,
    select_events,
    sign_label,
)
from .fitting import (
    FitConfig,
    bootstrap_errors,
    fit_cumulative,
    fit_offset_power_law,
    fit_report_row,
    write_fit_tsv,
)
from .intraday import estimate_pattern, remove_pattern, write_pattern_tsv
from .profiles import (
    cumulative,
    omori_counts,
    remanent_profile,
    write_omori_tsv,
    write_profile_tsv,
)
from .series import (
    CsvSchema,
    absolute_volatility,
    log_returns,
    mean_volatility,
    read_price_csv,
    shuffle_surrogate,
)
from .synth import (
    PlantedRelaxationSpec,
    gen_iid_gaussian,
    gen_intraday_modulated,
    gen_planted_relaxation,
    returns_to_prices,
    write_price_csv,
)

__all__ = ["main", "RunConfig"]

# Threshold of |mean v(t)| over t in [1, 100] below which a profile is
# reported as consistent with zero signal (the i.i.d. null bound).
_NULL_BOUND = 0.01


class _ConfigError(Exception):
    """Invalid configuration; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102 - argparse hook
        raise _ConfigError(message)


@dataclass(frozen=True)
class RunConfig:
    """Effective configuration of an analyze/omori run."""

    command: str
    input: str
    cadence: str | None
    slots_per_day: int | None
    thresholds: tuple[float, ...]
    intraday_removal: bool
    labels: str | None
    max_lag: int | None
    fit_min: int
    fit_max: int | None
    tau_mode: str
    bootstrap: int
    seed: int
    surrogate: str
    split: str
    out: str
    min_separation: int
    drop_session_crossing: bool
    main_threshold: float = 12.0
    z1_thresholds: tuple[float, ...] = (2.0, 3.0, 4.0, 5.0)

    def __post_init__(self) -> None:
        if not self.input:
            raise _ConfigError("--input is required")
        if not self.out:
            raise _ConfigError("--out is required")
        ths = self.thresholds
        if not ths or any(m <= 1 for m in ths) or any(b <= a for a, b in zip(ths, ths[1:])):
            raise _ConfigError("thresholds must be > 1 and strictly increasing")
        if self.fit_min < 1:
            raise _ConfigError("--fit-min must be >= 1")
        if self.fit_max is not None and self.fit_max < self.fit_min:
            raise _ConfigError("--fit-max must be >= --fit-min")
        if self.max_lag is not None and self.max_lag < 1:
            raise _ConfigError("--max-lag must be >= 1")
        if self.bootstrap < 0:
            raise _ConfigError("--bootstrap must be >= 0")
        if self.min_separation < 0:
            raise _ConfigError("--min-separation must be >= 0")
        if self.command == "omori":
            if self.main_threshold <= 1:
                raise _ConfigError("--main-threshold must be > 1")
            for m1 in self.z1_thresholds:
                if not 0 < m1 < self.main_threshold:
                    raise _ConfigError(
                        f"aftershock threshold {m1:g} must be below the main threshold "
                        f"{self.main_threshold:g}"
                    )


# ---------------------------------------------------------------------------
# configuration plumbing


def _conv_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise _ConfigError(f"expected a boolean, got {s!r}")


def _conv_floats(s: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in s.split(",") if part.strip())
    except ValueError:
        raise _ConfigError(f"expected a comma-separated number list, got {s!r}") from None


def _conv_choice(*allowed: str):
    def conv(s: str) -> str:
        if s not in allowed:
            raise _ConfigError(f"expected one of {allowed}, got {s!r}")
        return s

    return conv


def _conv_int(s: str) -> int:
    try:
        return int(s)
    except ValueError:
        raise _ConfigError(f"expected an integer, got {s!r}") from None


def _conv_float(s: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise _ConfigError(f"expected a number, got {s!r}") from None


_COMMON_KEYS: dict[str, tuple] = {
    "input": (str, None),
    "cadence": (_conv_choice("1min", "5min", "daily"), None),
    "slots_per_day": (_conv_int, None),
    "thresholds": (_conv_floats, (2.0, 4.0, 6.0, 8.0)),
    "no_intraday_removal": (_conv_bool, False),
    "labels": (str, None),
    "max_lag": (_conv_int, None),
    "fit_min": (_conv_int, 5),
    "fit_max": (_conv_int, None),
    "tau": (_conv_choice("free", "zero"), "free"),
    "bootstrap": (_conv_int, 0),
    "seed": (_conv_int, 0),
    "surrogate": (_conv_choice("none", "shuffle"), "none"),
    "split": (_conv_choice("all", "sign", "origin"), "all"),
    "out": (str, None),
    "min_separation": (_conv_int, 0),
    "drop_session_crossing": (_conv_bool, False),
}

_OMORI_KEYS = dict(
    _COMMON_KEYS,
    main_threshold=(_conv_float, 12.0),
    z1_thresholds=(_conv_floats, (2.0, 3.0, 4.0, 5.0)),
)

_SYNTH_KEYS: dict[str, tuple] = {
    "mode": (_conv_choice("iid", "planted", "modulated"), None),
    "n": (_conv_int, 100_000),
    "sigma0": (_conv_float, 0.01),
    "seed": (_conv_int, 0),
    "slots_per_day": (_conv_int, 1),
    "shock_rate": (_conv_float, 50.0),
    "boost": (_conv_float, 3.0),
    "p": (_conv_float, 0.3),
    "tau": (_conv_float, 0.0),
    "shock_magnitude": (_conv_float, 10.0),
    "boost_before": (_conv_float, None),
    "p_before": (_conv_float, None),
    "tau_before": (_conv_float, None),
    "factors": (str, None),
    "out": (str, None),
}


def _read_config_file(path: str) -> dict[str, str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _ConfigError(f"cannot read config file {path}: {exc}") from None
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise _ConfigError(f"{path} line {lineno}: expected 'key = value'")
        key, value = stripped.split("=", 1)
        pairs[key.strip().replace("-", "_")] = value.strip()
    return pairs


def _merge(args: argparse.Namespace, keys: dict[str, tuple], command: str) -> dict:
    """Overlay: hard defaults < config file < explicit flags."""
    file_pairs = _read_config_file(args.config) if getattr(args, "config", None) else {}
    file_cmd = file_pairs.pop("command", None)
    if file_cmd is not None and file_cmd != command:
        raise _ConfigError(f"config file is for command {file_cmd!r}, not {command!r}")
    merged: dict = {}
    for key, (conv, default) in keys.items():
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            merged[key] = flag_val
        elif key in file_pairs:
            raw = file_pairs.pop(key)
            merged[key] = conv(raw) if raw != "" else default
        else:
            merged[key] = default
    file_pairs.pop("command", None)
    unknown = [k for k in file_pairs if k not in keys]
    if unknown:
        raise _ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return merged


def _run_config(args: argparse.Namespace, command: str) -> RunConfig:
    keys = _OMORI_KEYS if command == "omori" else _COMMON_KEYS
    m = _merge(args, keys, command)
    rc = RunConfig(
        command=command,
        input=m["input"],
        cadence=m["cadence"],
        slots_per_day=m["slots_per_day"],
        thresholds=tuple(m["thresholds"]),
        intraday_removal=not m["no_intraday_removal"],
        labels=m["labels"],
        max_lag=m["max_lag"],
        fit_min=m["fit_min"],
        fit_max=m["fit_max"],
        tau_mode={"free": "free", "zero": "fixed_zero"}[m["tau"]],
        bootstrap=m["bootstrap"],
        seed=m["seed"],
        surrogate=m["surrogate"],
        split=m["split"],
        out=m["out"],
        min_separation=m["min_separation"],
        drop_session_crossing=m["drop_session_crossing"],
        main_threshold=m.get("main_threshold", 12.0),
        z1_thresholds=tuple(m.get("z1_thresholds", (2.0, 3.0, 4.0, 5.0))),
    )
    return rc


def _echo_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ",".join(repr(float(x)) for x in value)
    return str(value)


def _write_config_echo(path: str, pairs: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key in sorted(pairs):
            fh.write(f"{key} = {_echo_value(pairs[key])}\n")


def _echo_pairs(rc: RunConfig, cadence: str, slots_per_day: int, max_lag: int, fit_max: int) -> dict:
    pairs = {
        "command": rc.command,
        "input": rc.input,
        "cadence": cadence,
        "slots_per_day": slots_per_day,
        "thresholds": rc.thresholds,
        "no_intraday_removal": not rc.intraday_removal,
        "labels": rc.labels,
        "max_lag": max_lag,
        "fit_min": rc.fit_min,
        "fit_max": fit_max,
        "tau": {"free": "free", "fixed_zero": "zero"}[rc.tau_mode],
        "bootstrap": rc.bootstrap,
        "seed": rc.seed,
        "surrogate": rc.surrogate,
        "split": rc.split,
        "min_separation": rc.min_separation,
        "drop_session_crossing": rc.drop_session_crossing,
    }
    if rc.command == "omori":
        pairs["main_threshold"] = rc.main_threshold
        pairs["z1_thresholds"] = rc.z1_thresholds
    return pairs


# ---------------------------------------------------------------------------
# pipeline pieces


def _load_labels(spec: str):
    if spec.startswith("builtin:"):
        try:
            return load_packaged_labels(spec[len("builtin:") :])
        except KeyError as exc:
            raise _ConfigError(str(exc)) from None
    try:
        return read_label_file(spec)
    except OSError as exc:
        raise _ConfigError(f"cannot read label file {spec}: {exc}") from None


def _load_pipeline(rc: RunConfig):
    """Parse, return-extract, surrogate, adjust; returns working objects."""
    schema = CsvSchema(cadence=rc.cadence, slots_per_day=rc.slots_per_day)
    try:
        prices = read_price_csv(rc.input, schema)
    except OSError as exc:
        raise _ConfigError(f"cannot read input {rc.input}: {exc}") from None
    returns = log_returns(prices, include_session_crossing=not rc.drop_session_crossing)
    if rc.surrogate == "shuffle":
        returns = shuffle_surrogate(returns, rc.seed)
    vol = absolute_volatility(returns)
    pattern = None
    if rc.intraday_removal and vol.cadence != "daily":
        if vol.slots_per_day < 2:
            raise _ConfigError(
                "intraday removal needs a slot grid: pass --slots-per-day "
                "or disable with --no-intraday-removal"
            )
        pattern = estimate_pattern(vol)
        vol = remove_pattern(vol, pattern)
    stats = mean_volatility(vol)
    return returns, vol, pattern, stats


def _default_max_lag(rc: RunConfig, cadence: str) -> int:
    if rc.max_lag is not None:
        return rc.max_lag
    return 100 if cadence == "daily" else 1000


_SPLITS = {
    "all": ("all",),
    "sign": ("all", "crash", "rally"),
    "origin": ("all", "endogenous", "exogenous"),
}

_SPLIT_FILTERS = {
    "all": (None, None),
    "crash": (None, "crash"),
    "rally": (None, "rally"),
    "endogenous": ("endogenous", None),
    "exogenous": ("exogenous", None),
}


def _split_events(events: EventSet, split: str) -> EventSet:
    origin, sign = _SPLIT_FILTERS[split]
    return filter_events(events, sign=sign, origin=origin)


def _filters_for_report(split: str) -> tuple[str, str]:
    origin, sign = _SPLIT_FILTERS[split]
    return origin or "all", sign or "all"


def _fmt_m(m: float) -> str:
    return f"{m:g}"


def _select_and_tag(rc: RunConfig, vol, returns, stats, labels, m: float) -> EventSet:
    events = select_events(vol, m, stats)
    if len(events):
        events = classify_sign(events, returns)
    if rc.min_separation:
        events = decluster(events, rc.min_separation)
    if labels is not None and len(events):
        events = apply_labels(events, labels, returns.timestamps)
    return events


def _null_check_rows(m: float, split: str, profile, max_lag: int) -> list[tuple[str, ...]]:
    hi = min(100, max_lag)
    rows = []
    for side, v in (("-", profile.v_minus), ("+", profile.v_plus)):
        window = v[1 : hi + 1]
        if np.all(np.isnan(window)):
            mean_v, flag = float("nan"), "undefined"
        else:
            mean_v = float(np.nanmean(window))
            flag = "zero_consistent" if abs(mean_v) < _NULL_BOUND else "signal"
        rows.append((repr(float(m)), split, side, repr(mean_v), flag))
    return rows


def _write_signal_tsv(rows: list[tuple[str, ...]], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("zeta_multiple\tsplit\tside\tmean_v\tflag\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_analyze(args: argparse.Namespace) -> int:
    rc = _run_config(args, "analyze")
    labels = _load_labels(rc.labels) if rc.labels else None
    if rc.split == "origin" and labels is None:
        raise _ConfigError("--split origin requires --labels")
    returns, vol, pattern, stats = _load_pipeline(rc)
    max_lag = _default_max_lag(rc, vol.cadence)
    fit_max = rc.fit_max if rc.fit_max is not None else max_lag
    if not rc.fit_min <= fit_max <= max_lag:
        raise _ConfigError(
            f"fit range [{rc.fit_min}, {fit_max}] must lie within computed lags [1, {max_lag}]"
        )
    os.makedirs(rc.out, exist_ok=True)
    _write_config_echo(
        os.path.join(rc.out, "config.echo"),
        _echo_pairs(rc, vol.cadence, vol.slots_per_day, max_lag, fit_max),
    )
    if pattern is not None:
        write_pattern_tsv(pattern, os.path.join(rc.out, "pattern.tsv"))

    fit_cfg = FitConfig(
        max_lag=max_lag, t_min=rc.fit_min, t_max=fit_max, tau_mode=rc.tau_mode
    )
    fit_rows: list[tuple[str, ...]] = []
    signal_rows: list[tuple[str, ...]] = []
    n_failed = 0
    for m in rc.thresholds:
        try:
            events = _select_and_tag(rc, vol, returns, stats, labels, m)
        except DataError as exc:
            for split in _SPLITS[rc.split]:
                of, sf = _filters_for_report(split)
                for side in ("-", "+"):
                    fit_rows.append(fit_report_row(side, m, of, sf, None, type(exc).__name__))
                n_failed += 1
            print(f"z{_fmt_m(m)}: event selection failed: {exc}")
            continue
        for split in _SPLITS[rc.split]:
            of, sf = _filters_for_report(split)
            subset = _split_events(events, split)
            suffix = "" if split == "all" else f"_{split}"
            try:
                profile = remanent_profile(vol, subset, max_lag)
            except DataError as exc:
                for side in ("-", "+"):
                    fit_rows.append(fit_report_row(side, m, of, sf, None, type(exc).__name__))
                n_failed += 1
                print(f"z{_fmt_m(m)} {split}: profile failed: {type(exc).__name__}: {exc}")
                continue
            cum = cumulative(profile)
            write_profile_tsv(cum, os.path.join(rc.out, f"profile_z{_fmt_m(m)}{suffix}.tsv"))
            signal_rows.extend(_null_check_rows(m, split, profile, max_lag))

            stderrs = {"-": None, "+": None}
            if rc.bootstrap >= 2:
                try:
                    boot = bootstrap_errors(vol, subset, fit_cfg, rc.bootstrap, rc.seed)
                    stderrs = {"-": boot.stderr_minus, "+": boot.stderr_plus}
                except (FitError, DataError) as exc:
                    n_failed += 1
                    print(f"z{_fmt_m(m)} {split}: bootstrap failed: {type(exc).__name__}: {exc}")
            for side in ("-", "+"):
                try:
                    fit = fit_cumulative(
                        cum,
                        side,
                        t_min=rc.fit_min,
                        t_max=fit_max,
                        tau_mode=rc.tau_mode,
                    )
                except FitError as exc:
                    fit_rows.append(fit_report_row(side, m, of, sf, None, type(exc).__name__))
                    n_failed += 1
                    print(f"z{_fmt_m(m)} {split} {side}: fit failed: {type(exc).__name__}")
                    continue
                if stderrs[side] is not None:
                    fit = replace(fit, p_stderr=stderrs[side])
                fit_rows.append(fit_report_row(side, m, of, sf, fit))
                print(f"z{_fmt_m(m)} {split} {side}: {fit.summary()}")
    write_fit_tsv(fit_rows, os.path.join(rc.out, "fits.tsv"))
    _write_signal_tsv(signal_rows, os.path.join(rc.out, "signal_check.tsv"))
    n_zero = sum(1 for r in signal_rows if r[4] == "zero_consistent")
    print(f"signal check: {n_zero}/{len(signal_rows)} profiles consistent with zero signal")
    print(f"wrote {rc.out}")
    return 3 if n_failed else 0


def _cmd_omori(args: argparse.Namespace) -> int:
    rc = _run_config(args, "omori")
    returns, vol, pattern, stats = _load_pipeline(rc)
    max_lag = _default_max_lag(rc, vol.cadence)
    fit_max = rc.fit_max if rc.fit_max is not None else max_lag
    if not rc.fit_min <= fit_max <= max_lag:
        raise _ConfigError(
            f"fit range [{rc.fit_min}, {fit_max}] must lie within computed lags [1, {max_lag}]"
        )
    os.makedirs(rc.out, exist_ok=True)
    _write_config_echo(
        os.path.join(rc.out, "config.echo"),
        _echo_pairs(rc, vol.cadence, vol.slots_per_day, max_lag, fit_max),
    )
    if pattern is not None:
        write_pattern_tsv(pattern, os.path.join(rc.out, "pattern.tsv"))

    m = rc.main_threshold
    fit_rows: list[tuple[str, ...]] = []
    n_failed = 0
    try:
        mainshocks = select_events(vol, m, stats)
        profile = remanent_profile(vol, mainshocks, max_lag)
    except DataError as exc:
        for m1 in rc.z1_thresholds:
            for side in ("-", "+"):
                fit_rows.append(
                    fit_report_row(side, m1, "all", "all", None, type(exc).__name__)
                )
                n_failed += 1
        write_fit_tsv(fit_rows, os.path.join(rc.out, "fits.tsv"))
        print(f"mainshock selection failed: {type(exc).__name__}: {exc}")
        return 3
    cum = cumulative(profile)
    print(f"{len(mainshocks)} mainshocks above {_fmt_m(m)} sigma")
    lags = np.arange(max_lag + 1, dtype=np.int64)
    for m1 in rc.z1_thresholds:
        omori = omori_counts(vol, mainshocks, m1, stats, max_lag)
        name = f"omori_z{_fmt_m(m)}_z1{_fmt_m(m1)}.tsv"
        write_omori_tsv(cum, omori, os.path.join(rc.out, name))
        for side in ("-", "+"):
            try:
                fit = fit_offset_power_law(
                    lags,
                    omori.side(side),
                    t_min=rc.fit_min,
                    t_max=fit_max,
                    tau_mode=rc.tau_mode,
                )
            except FitError as exc:
                fit_rows.append(fit_report_row(side, m1, "all", "all", None, type(exc).__name__))
                n_failed += 1
                print(f"z1={_fmt_m(m1)} {side}: fit failed: {type(exc).__name__}")
                continue
            fit_rows.append(fit_report_row(side, m1, "all", "all", fit))
            print(f"z1={_fmt_m(m1)} {side}: {fit.summary()}")
    write_fit_tsv(fit_rows, os.path.join(rc.out, "fits.tsv"))
    print(f"wrote {rc.out}")
    return 3 if n_failed else 0


def _cmd_pattern(args: argparse.Namespace) -> int:
    rc = _run_config(args, "pattern")
    returns, vol, pattern, stats = _load_pipeline(rc)
    if pattern is None:
        # Removal disabled or daily data: estimate anyway so the dump is useful.
        pattern = estimate_pattern(absolute_volatility(returns))
    os.makedirs(rc.out, exist_ok=True)
    max_lag = _default_max_lag(rc, vol.cadence)
    fit_max = rc.fit_max if rc.fit_max is not None else max_lag
    _write_config_echo(
        os.path.join(rc.out, "config.echo"),
        _echo_pairs(rc, vol.cadence, vol.slots_per_day, max_lag, fit_max),
    )
    write_pattern_tsv(pattern, os.path.join(rc.out, "pattern.tsv"))
    print(f"wrote {rc.out}")
    return 0


def _cmd_events(args: argparse.Namespace) -> int:
    rc = _run_config(args, "events")
    labels = _load_labels(rc.labels) if rc.labels else None
    returns, vol, pattern, stats = _load_pipeline(rc)
    max_lag = _default_max_lag(rc, vol.cadence)
    fit_max = rc.fit_max if rc.fit_max is not None else max_lag
    os.makedirs(rc.out, exist_ok=True)
    _write_config_echo(
        os.path.join(rc.out, "config.echo"),
        _echo_pairs(rc, vol.cadence, vol.slots_per_day, max_lag, fit_max),
    )
    for m in rc.thresholds:
        events = _select_and_tag(rc, vol, returns, stats, labels, m)
        path = os.path.join(rc.out, f"events_z{_fmt_m(m)}.tsv")
        stamps = returns.timestamps
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("index\ttimestamp\tmagnitude\tsign\torigin\n")
            for k in range(len(events)):
                i = int(events.indices[k])
                stamp = "" if stamps is None else np.datetime_as_string(stamps[i], unit="s")
                fh.write(
                    f"{i}\t{stamp}\t{float(events.magnitudes[k])!r}"
                    f"\t{sign_label(events.signs[k])}\t{events.origins[k]}\n"
                )
        print(f"z{_fmt_m(m)}: {len(events)} events")
    print(f"wrote {rc.out}")
    return 0


def _default_factors(slots_per_day: int) -> np.ndarray:
    # U-shaped day: high at the open and close, low over lunch.
    x = 2.0 * (np.arange(slots_per_day) + 0.5) / slots_per_day - 1.0
    return 0.6 + 0.8 * x * x


def _cmd_synth(args: argparse.Namespace) -> int:
    m = _merge(args, _SYNTH_KEYS, "synth")
    if not m["mode"]:
        raise _ConfigError("--mode is required (iid, planted or modulated)")
    if not m["out"]:
        raise _ConfigError("--out is required")
    try:
        if m["mode"] == "iid":
            rets = gen_iid_gaussian(m["n"], m["sigma0"], m["seed"], m["slots_per_day"])
        elif m["mode"] == "planted":
            spec = PlantedRelaxationSpec(
                n=m["n"],
                sigma0=m["sigma0"],
                shock_rate=m["shock_rate"],
                boost=m["boost"],
                p=m["p"],
                tau=m["tau"],
                shock_magnitude=m["shock_magnitude"],
                seed=m["seed"],
                slots_per_day=m["slots_per_day"],
                boost_before=m["boost_before"],
                p_before=m["p_before"],
                tau_before=m["tau_before"],
            )
            rets = gen_planted_relaxation(spec)
        else:
            base = gen_iid_gaussian(m["n"], m["sigma0"], m["seed"], m["slots_per_day"])
            if m["factors"]:
                with open(m["factors"], "r", encoding="utf-8") as fh:
                    factors = np.asarray(
                        [float(line) for line in fh.read().split()], dtype=np.float64
                    )
            else:
                factors = _default_factors(m["slots_per_day"])
            rets = gen_intraday_modulated(base, factors)
    except ValueError as exc:
        raise _ConfigError(str(exc)) from None
    prices = returns_to_prices(rets)
    out_dir = os.path.dirname(m["out"])
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    write_price_csv(prices, m["out"])
    print(f"wrote {m['out']} ({len(prices)} records)")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", help="price CSV (timestamp,price)")
    parser.add_argument("--cadence", choices=["1min", "5min", "daily"], help="sampling cadence (default: infer)")
    parser.add_argument("--slots-per-day", type=int, help="intraday slots when not derivable from timestamps")
    parser.add_argument("--thresholds", type=_conv_floats, help="comma list of sigma multiples (default 2,4,6,8)")
    parser.add_argument("--no-intraday-removal", action="store_true", default=None, help="keep the raw intraday pattern")
    parser.add_argument("--labels", help="label file, or builtin:<name>")
    parser.add_argument("--max-lag", type=int, help="profile horizon T (default 1000 intraday, 100 daily)")
    parser.add_argument("--fit-min", type=int, help="first lag used in fits (default 5)")
    parser.add_argument("--fit-max", type=int, help="last lag used in fits (default: max lag)")
    parser.add_argument("--tau", choices=["free", "zero"], help="fit the offset or pin it to 0")
    parser.add_argument("--bootstrap", type=int, help="bootstrap replicas for p stderr (0 = off)")
    parser.add_argument("--seed", type=int, help="seed for surrogate/bootstrap (default 0)")
    parser.add_argument("--surrogate", choices=["none", "shuffle"], help="replace returns by a shuffled surrogate")
    parser.add_argument("--split", choices=["all", "sign", "origin"], help="also compute crash/rally or endo/exo splits")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--min-separation", type=int, help="decluster events closer than this many steps")
    parser.add_argument("--drop-session-crossing", action="store_true", default=None, help="drop overnight returns")
    parser.add_argument("--config", help="flat key=value config file (flags win)")


def _build_parser() -> _Parser:
    parser = _Parser(prog="volrelax", description="Event-conditioned volatility relaxation analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="profiles + fits for each threshold")
    _add_common(analyze)
    omori = sub.add_parser("omori", help="two-threshold aftershock counts around 12-sigma mainshocks")
    _add_common(omori)
    omori.add_argument("--main-threshold", type=float, help="mainshock sigma multiple (default 12)")
    omori.add_argument("--z1-thresholds", type=_conv_floats, help="aftershock sigma multiples (default 2,3,4,5)")
    pattern = sub.add_parser("pattern", help="dump the intraday pattern")
    _add_common(pattern)
    events_p = sub.add_parser("events", help="list selected events per threshold")
    _add_common(events_p)

    synth = sub.add_parser("synth", help="generate a synthetic price CSV")
    synth.add_argument("--mode", choices=["iid", "planted", "modulated"])
    synth.add_argument("--n", type=int, help="number of returns (default 100000)")
    synth.add_argument("--sigma0", type=float, help="mean |return| scale (default 0.01)")
    synth.add_argument("--seed", type=int)
    synth.add_argument("--slots-per-day", type=int)
    synth.add_argument("--shock-rate", type=float, help="expected shocks per 1e5 steps")
    synth.add_argument("--boost", type=float, help="relaxation kernel amplitude B")
    synth.add_argument("--p", type=float, help="planted exponent")
    synth.add_argument("--tau", type=float, help="planted offset")
    synth.add_argument("--shock-magnitude", type=float, help="shock size in sigma0 units")
    synth.add_argument("--boost-before", type=float, help="override B on the approach side")
    synth.add_argument("--p-before", type=float, help="override p on the approach side")
    synth.add_argument("--tau-before", type=float, help="override tau on the approach side")
    synth.add_argument("--factors", help="file with one slot factor per line (modulated mode)")
    synth.add_argument("--out", help="output CSV path")
    synth.add_argument("--config", help="flat key=value config file (flags win)")
    return parser


_DISPATCH = {
    "analyze": _cmd_analyze,
    "omori": _cmd_omori,
    "pattern": _cmd_pattern,
    "events": _cmd_events,
    "synth": _cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _DISPATCH[args.command](args)
    except _ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except FitError as exc:
        print(f"fit error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except VolrelaxError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
