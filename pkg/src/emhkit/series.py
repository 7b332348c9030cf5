"""Price ingestion, log returns, deseasonalisation and rolling windows."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "PriceSeries",
    "ReturnSeries",
    "RollingConfig",
    "LoadReport",
    "SeriesError",
    "load_csv",
    "log_returns",
    "deseasonalize",
    "remove_annual_cycle",
    "rolling_apply",
    "unconditional_volatility",
    "hourly_profile",
]

FREQUENCIES = {"hourly": timedelta(hours=1), "daily": timedelta(days=1)}
GAP_POLICIES = ("error", "forward_fill", "interpolate")


class SeriesError(ValueError):
    """Raised for malformed or invariant-violating input series."""


def _as_tuple(values) -> tuple:
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class PriceSeries:
    """Ordered price levels with their timestamps.

    ``timestamps`` may be ``None`` for synthetic series; when present they
    must be strictly increasing.
    """

    values: np.ndarray
    timestamps: tuple | None = None
    frequency: str = "daily"
    label: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or len(v) < 2:
            raise SeriesError("a price series needs at least 2 values")
        if not np.all(np.isfinite(v)):
            raise SeriesError("price values must be finite")
        if self.frequency not in FREQUENCIES:
            raise SeriesError(f"frequency must be one of {sorted(FREQUENCIES)}")
        if self.timestamps is not None:
            ts = tuple(self.timestamps)
            object.__setattr__(self, "timestamps", ts)
            if len(ts) != len(v):
                raise SeriesError("timestamps and values differ in length")
            for a, b in zip(ts, ts[1:]):
                if not b > a:
                    raise SeriesError(f"timestamps not strictly increasing at {b}")

    def __len__(self):
        return len(self.values)

    def scaled(self, c: float) -> "PriceSeries":
        return PriceSeries(self.values * c, self.timestamps, self.frequency, self.label)


@dataclass(frozen=True)
class ReturnSeries:
    values: np.ndarray
    parent_label: str = ""
    deseasonalized: bool = False
    timestamps: tuple | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if v.ndim != 1:
            raise SeriesError("returns must be one-dimensional")
        if not np.all(np.isfinite(v)):
            raise SeriesError("returns must be finite")
        if self.timestamps is not None:
            object.__setattr__(self, "timestamps", tuple(self.timestamps))

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class RollingConfig:
    window: int
    step: int = 1
    min_window: int = 1

    def __post_init__(self):
        if self.step < 1:
            raise SeriesError("step must be >= 1")
        if self.window < max(1, self.min_window):
            raise SeriesError(f"window {self.window} below the minimum {self.min_window}")

    def check(self, n: int) -> None:
        if self.window > n:
            raise SeriesError(f"window {self.window} longer than series ({n})")
        if self.step > n:
            raise SeriesError(f"step {self.step} longer than series ({n})")


@dataclass
class LoadReport:
    rows_read: int = 0
    gaps_resolved: int = 0
    policy: str = "error"
    nonpositive: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"rows_read": self.rows_read, "gaps_resolved": self.gaps_resolved,
                "policy": self.policy, "nonpositive_timestamps": [str(t) for t in self.nonpositive]}


def _parse_ts(text: str, lineno: int) -> datetime:
    try:
        return datetime.fromisoformat(text.strip())
    except ValueError as exc:
        raise SeriesError(f"line {lineno}: bad ISO-8601 timestamp {text!r}") from exc


def load_csv(path, frequency: str = "daily", gap_policy: str = "error", label: str | None = None):
    """Read a ``timestamp,value`` CSV into a :class:`PriceSeries`.

    Parameters
    ----------
    path : path-like
    frequency : {"daily", "hourly"}
        Expected sampling interval, used to detect gaps.
    gap_policy : {"error", "forward_fill", "interpolate"}
        How missing timestamps are handled. Filled points are counted in the
        returned :class:`LoadReport`.

    Returns
    -------
    (PriceSeries, LoadReport)
    """
    if gap_policy not in GAP_POLICIES:
        raise SeriesError(f"gap_policy must be one of {GAP_POLICIES}")
    if frequency not in FREQUENCIES:
        raise SeriesError(f"frequency must be one of {sorted(FREQUENCIES)}")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    step = FREQUENCIES[frequency]
    stamps: list[datetime] = []
    vals: list[float] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["timestamp", "value"]:
            raise SeriesError("expected header 'timestamp,value'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise SeriesError(f"line {lineno}: expected 2 columns, got {len(row)}")
            ts = _parse_ts(row[0], lineno)
            try:
                v = float(row[1])
            except ValueError as exc:
                raise SeriesError(f"line {lineno}: bad value {row[1]!r}") from exc
            if not math.isfinite(v):
                raise SeriesError(f"line {lineno}: non-finite value")
            if stamps and ts == stamps[-1]:
                raise SeriesError(f"line {lineno}: duplicate timestamp {ts.isoformat()}")
            if stamps and ts < stamps[-1]:
                if ts in set(stamps):
                    raise SeriesError(f"line {lineno}: duplicate timestamp {ts.isoformat()}")
                raise SeriesError(f"line {lineno}: timestamps out of order")
            stamps.append(ts)
            vals.append(v)
    report = LoadReport(rows_read=len(vals), policy=gap_policy)
    out_t: list[datetime] = []
    out_v: list[float] = []
    for i, (ts, v) in enumerate(zip(stamps, vals)):
        if i > 0:
            gap = ts - stamps[i - 1]
            missing = int(round(gap / step)) - 1
            if gap % step != timedelta(0):
                raise SeriesError(f"irregular spacing before {ts.isoformat()}")
            if missing > 0:
                if gap_policy == "error":
                    raise SeriesError(f"{missing} missing sample(s) before {ts.isoformat()}")
                prev = vals[i - 1]
                for j in range(1, missing + 1):
                    out_t.append(stamps[i - 1] + j * step)
                    if gap_policy == "forward_fill":
                        out_v.append(prev)
                    else:
                        out_v.append(prev + (v - prev) * j / (missing + 1))
                report.gaps_resolved += missing
        out_t.append(ts)
        out_v.append(v)
    report.nonpositive = [t for t, v in zip(out_t, out_v) if v <= 0]
    if report.nonpositive:
        warnings.warn(f"{len(report.nonpositive)} non-positive price(s); log returns undefined")
    series = PriceSeries(np.array(out_v), tuple(out_t), frequency, label if label is not None else path.stem)
    return series, report


def log_returns(series: PriceSeries) -> ReturnSeries:
    """Natural-log returns ``ln(p_t / p_{t-1})``."""
    p = series.values
    bad = np.flatnonzero(p <= 0)
    if bad.size:
        where = series.timestamps[bad[0]] if series.timestamps is not None else f"index {bad[0]}"
        raise SeriesError(f"non-positive price at {where}; log returns undefined")
    r = np.diff(np.log(p))
    ts = series.timestamps[1:] if series.timestamps is not None else None
    return ReturnSeries(r, series.label, False, ts)


def _values(x) -> np.ndarray:
    if isinstance(x, (ReturnSeries, PriceSeries)):
        return x.values
    return np.asarray(x, dtype=float)


def deseasonalize(returns, period: int = 7, phase=None) -> ReturnSeries:
    """Subtract the per-phase mean profile (weekly by default).

    ``phase`` optionally supplies the phase of each sample (e.g. weekday);
    otherwise phase is the sample index modulo ``period``.
    """
    x = _values(returns)
    if period < 2:
        raise SeriesError("period must be >= 2")
    if period > len(x):
        raise SeriesError("period longer than the series")
    ph = np.arange(len(x)) % period if phase is None else np.asarray(phase) % period
    profile = np.zeros(period)
    for k in range(period):
        sel = ph == k
        if sel.any():
            profile[k] = x[sel].mean()
    out = x - profile[ph]
    if isinstance(returns, ReturnSeries):
        return ReturnSeries(out, returns.parent_label, True, returns.timestamps)
    return ReturnSeries(out, "", True)


def remove_annual_cycle(prices, period: float = 365.25) -> np.ndarray:
    """Remove a least-squares annual sinusoid (plus mean) from price levels, keeping the mean."""
    p = _values(prices)
    t = np.arange(len(p))
    w = 2 * np.pi * t / period
    X = np.column_stack([np.ones_like(w), np.sin(w), np.cos(w)])
    coef, *_ = np.linalg.lstsq(X, p, rcond=None)
    return p - X[:, 1:] @ coef[1:]


def rolling_apply(series, config: RollingConfig, estimator: Callable, timestamps: Sequence | None = None):
    """Evaluate ``estimator`` over sliding windows.

    Returns a list of ``(window_end, value)`` where ``window_end`` is the
    timestamp (or index) of the last sample in the window. An exception in
    ``estimator`` yields ``nan`` for that window only.
    """
    x = _values(series)
    if timestamps is None and isinstance(series, (PriceSeries, ReturnSeries)):
        timestamps = series.timestamps
    n = len(x)
    config.check(n)
    count = (n - config.window) // config.step + 1
    out = []
    for i in range(count):
        lo = i * config.step
        hi = lo + config.window
        try:
            val = estimator(x[lo:hi])
            if hasattr(val, "H"):
                val = val.H
            val = float(val)
        except Exception:
            val = float("nan")
        end = timestamps[hi - 1] if timestamps is not None else hi - 1
        out.append((end, val))
    return out


def unconditional_volatility(returns, partition: str = "whole", timestamps=None):
    """Sample standard deviation (ddof=1) over the whole series or per year."""
    x = _values(returns)
    if timestamps is None and isinstance(returns, ReturnSeries):
        timestamps = returns.timestamps
    if partition == "whole":
        groups = {"whole": x}
    elif partition == "annual":
        if timestamps is None:
            raise SeriesError("annual partition needs timestamps")
        groups = {}
        years = np.array([t.year for t in timestamps])
        for y in sorted(set(years.tolist())):
            groups[str(y)] = x[years == y]
    else:
        raise SeriesError("partition must be 'whole' or 'annual'")
    out = []
    for label, g in groups.items():
        if len(g) < 2:
            raise SeriesError(f"partition {label} has fewer than 2 points")
        out.append((label, float(np.std(g, ddof=1))))
    return out


def hourly_profile(series: PriceSeries):
    """Per-hour-of-day (mean, population st.dev.) of hourly prices."""
    if series.frequency != "hourly":
        raise SeriesError("hourly_profile needs hourly data")
    if len(series) < 48:
        raise SeriesError("need at least two days of hourly data")
    v = series.values
    if series.timestamps is not None:
        hours = np.array([t.hour for t in series.timestamps])
    else:
        hours = np.arange(len(v)) % 24
    out = []
    for h in range(24):
        g = v[hours == h]
        out.append((float(g.mean()), float(g.std())) if len(g) else (float("nan"), float("nan")))
    return out
