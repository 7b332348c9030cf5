"""Market-structure metrics and cross-indicator analysis on annual panels.

Includes the Herfindahl-Hirschman index, correlation matrices over an
annual indicator panel, the direction-of-change table linking volatility
and Lyapunov exponents, and an efficiency report.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .hurst import classify_persistence

__all__ = [
    "HHIResult",
    "hhi",
    "hhi_class",
    "load_panel",
    "correlation_matrix",
    "direction_of_change",
    "classify_efficiency",
    "efficiency_report",
    "render_report",
]

HHI_CLASSES = (
    (10000.0, "monopoly"),
    (5000.0, "over-concentrated"),
    (1800.0, "concentrated"),
    (1000.0, "moderately competitive"),
)


@dataclass
class HHIResult:
    value: float
    cls: str
    shares: np.ndarray
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"HHI": self.value, "class": self.cls, "shares": self.shares.tolist(), "flags": self.flags}


def hhi_class(value: float) -> str:
    """Concentration class: monopoly, over-concentrated, concentrated,
    moderately competitive or competitive."""
    if value >= HHI_CLASSES[0][0] - 1e-9:
        return "monopoly"
    for lo, name in HHI_CLASSES[1:]:
        # boundaries are inclusive from below; absorb summation rounding
        if value > lo + 1e-9:
            return name
    return "competitive"


def hhi(shares, percent: bool | None = None) -> HHIResult:
    """Herfindahl-Hirschman index ``10^4 * sum s_i^2`` on the 0..10000 scale.

    Parameters
    ----------
    shares : array_like
        Market shares as fractions or percentages.
    percent : bool, optional
        Force the unit. By default shares are read as percentages when they
        sum to more than 1.5.

    Notes
    -----
    Fractions summing to more than one are accepted with a
    ``shares_exceed_one`` flag, since published share lists can overlap.
    """
    s = np.asarray(shares, dtype=float).ravel()
    if s.size == 0:
        raise ValueError("empty share list")
    if not np.all(np.isfinite(s)) or np.any(s < 0):
        raise ValueError("shares must be finite and non-negative")
    flags = {}
    if percent is None:
        percent = bool(s.sum() > 1.5)
    if percent:
        s = s / 100.0
        flags["unit"] = "percent"
    else:
        flags["unit"] = "fraction"
    if np.any(s > 1 + 1e-12):
        raise ValueError("an individual share exceeds 100%")
    total = float(s.sum())
    if total > 1 + 1e-9:
        flags["shares_exceed_one"] = total
        warnings.warn(f"shares sum to {total:.4f} > 1", stacklevel=2)
    value = 1e4 * float(np.sum(s ** 2))
    return HHIResult(value, hhi_class(value), s, flags)


def load_panel(path) -> pd.DataFrame:
    """Read an annual panel CSV with a ``year`` column as the index."""
    df = pd.read_csv(path)
    if "year" not in df.columns:
        raise ValueError("panel needs a 'year' column")
    if df["year"].duplicated().any():
        raise ValueError("duplicate years in panel")
    return df.set_index("year").sort_index()


def correlation_matrix(panel: pd.DataFrame, columns=None, min_periods: int = 3):
    """Pearson correlations with pairwise-complete observations.

    Returns ``(matrix, flags)``. Pairs with fewer than ``min_periods``
    common years, or involving a constant column, are NaN and flagged.
    """
    df = panel if columns is None else panel[list(columns)]
    df = df.apply(pd.to_numeric, errors="coerce")
    mat = df.corr(method="pearson", min_periods=min_periods)
    flags = {}
    constant = [c for c in df.columns if df[c].dropna().nunique() <= 1]
    if constant:
        flags["constant_columns"] = constant
    cols = list(df.columns)
    short = []
    for i, a in enumerate(cols):
        for b in cols[i + 1:]:
            n = int((df[a].notna() & df[b].notna()).sum())
            if n < min_periods:
                short.append((a, b, n))
    if short:
        flags["insufficient_pairs"] = short
    return mat, flags


def _direction(prev, cur, tol):
    d = cur - prev
    if abs(d) <= tol:
        return "no-change"
    return "I" if d > 0 else "D"


def direction_of_change(panel: pd.DataFrame, lyap_col: str, vol_col: str, tol: float = 0.0) -> pd.DataFrame:
    """Year-on-year direction of the Lyapunov exponent and of volatility.

    ``d_lambda`` is ``"MN"`` (more negative) when the exponent decreased and
    ``"LN"`` otherwise; ``stability`` is ``"I"`` exactly when ``d_lambda`` is
    ``"MN"``. ``d_sigma`` is ``"I"`` or ``"D"``. A year is ``consistent``
    when MN pairs with a volatility decrease or LN with an increase. Changes
    within ``tol`` are ``"no-change"`` and leave ``consistent`` as ``None``.
    """
    if len(panel) < 2:
        raise ValueError("need at least two years")
    sub = panel[[lyap_col, vol_col]].astype(float)
    years = list(sub.index)
    rows = []
    for prev, cur in zip(years[:-1], years[1:]):
        if cur != prev + 1:
            raise ValueError(f"missing year between {prev} and {cur}")
        vals = sub.loc[[prev, cur]]
        if vals.isna().any().any():
            raise ValueError(f"missing value for {prev} or {cur}")
        lam = _direction(vals.at[prev, lyap_col], vals.at[cur, lyap_col], tol)
        vol = _direction(vals.at[prev, vol_col], vals.at[cur, vol_col], tol)
        d_lambda = {"I": "LN", "D": "MN"}.get(lam, lam)
        stability = {"MN": "I", "LN": "D"}.get(d_lambda, "no-change")
        if "no-change" in (lam, vol):
            consistent = None
        else:
            consistent = (d_lambda == "MN" and vol == "D") or (d_lambda == "LN" and vol == "I")
        rows.append({"year": cur, "d_lambda": d_lambda, "stability": stability,
                     "d_sigma": vol, "consistent": consistent})
    return pd.DataFrame(rows).set_index("year")


def classify_efficiency(H: float, bds_rejects: bool | None = None, lyapunov_verdict: str | None = None,
                        band: float = 0.05) -> dict:
    """Combine a Hurst estimate with optional nonlinearity evidence.

    The market is labelled efficient only when ``H`` is within ``band`` of
    0.5, the BDS test does not reject and no chaos is detected.
    """
    persistence = classify_persistence(H, band)
    reasons = []
    if not persistence.startswith("indistinguishable"):
        reasons.append(f"H={H:.3f} ({persistence})")
    if bds_rejects:
        reasons.append("BDS rejects i.i.d.")
    if lyapunov_verdict == "chaos":
        reasons.append("positive Lyapunov exponent")
    return {"verdict": persistence, "efficient": not reasons, "reasons": reasons}


def efficiency_report(bundle: dict) -> dict:
    """Assemble a report document from per-market results.

    ``bundle`` maps a market label to a dict with any of ``hurst``
    (mapping method to H), ``bds_rejects``, ``lyapunov`` (mapping method
    to a result dict with ``lambda_max`` and ``verdict``) and ``hhi``.
    Other keys, such as volatility or entropy summaries, are copied through.
    """
    if not bundle:
        raise ValueError("empty bundle")
    markets = {}
    for label in sorted(bundle):
        entry = bundle[label]
        hursts = entry.get("hurst", {})
        hvals = [v for v in hursts.values() if v is not None and math.isfinite(v)]
        h_mean = float(np.mean(hvals)) if hvals else float("nan")
        lyap = entry.get("lyapunov", {})
        verdicts = [v.get("verdict") for v in lyap.values()]
        verdict = "chaos" if "chaos" in verdicts else ("no_chaos" if verdicts else None)
        eff = classify_efficiency(h_mean, entry.get("bds_rejects"), verdict) if hvals else None
        extra = {k: v for k, v in entry.items() if k not in ("hurst", "bds_rejects", "lyapunov", "hhi")}
        markets[label] = {
            "hurst": hursts, "hurst_mean": h_mean, "bds_rejects": entry.get("bds_rejects"),
            "lyapunov": lyap, "hhi": entry.get("hhi"), "efficiency": eff, **extra,
        }
    return {"markets": markets}


def render_report(report: dict) -> str:
    """Plain-text rendering of :func:`efficiency_report` output."""
    lines = []
    for label, m in report["markets"].items():
        lines.append(f"== {label} ==")
        for method, h in sorted(m["hurst"].items()):
            lines.append(f"  H[{method}] = {h:.4f}")
        if m["bds_rejects"] is not None:
            lines.append(f"  BDS rejects i.i.d.: {m['bds_rejects']}")
        for method, r in sorted(m["lyapunov"].items()):
            lines.append(f"  lambda[{method}] = {r.get('lambda_max', float('nan')):.4f} ({r.get('verdict')})")
        if m["hhi"] is not None:
            lines.append(f"  HHI = {m['hhi']:.1f} ({hhi_class(m['hhi'])})")
        eff = m["efficiency"]
        if eff is not None:
            lines.append(f"  verdict: {eff['verdict']}")
            if eff["reasons"]:
                lines.append("  evidence against efficiency: " + "; ".join(eff["reasons"]))
    return "\n".join(lines) + "\n"
