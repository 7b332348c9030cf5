"""Hurst-exponent estimators and conversions between scaling exponents.

All estimators return a :class:`HurstEstimate`. R/S, DFA, GPH, the
spectral slope and the ACF decay work on returns (increments); GHE and
wGHE work on price levels (the integrated process).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.special import digamma, gammaln

from ._fit import ols_line

__all__ = [
    "HurstEstimate",
    "default_grid",
    "rs_expected",
    "rs_hurst",
    "rs_hurst_corrected",
    "dfa",
    "ghe",
    "wghe",
    "wghe_weights",
    "gph",
    "spectral_beta",
    "acf_hurst",
    "exponent_relations",
    "hurst_distance",
    "classify_persistence",
    "METHODS",
]

METHODS = ("RS", "RS_AnisLloyd", "DFA", "GHE", "wGHE", "GPH", "Spectral", "ACF")
AL_CUTOVER = 340


@dataclass
class HurstEstimate:
    method: str
    H: float
    raw_exponent: Any
    stderr: float
    r2: float
    grid: list
    points: list = field(default_factory=list)
    q: float | None = None
    status: str = "ok"
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def f(v):
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, float) and not np.isfinite(v):
                return None
            return v
        raw = self.raw_exponent
        if isinstance(raw, dict):
            raw = {str(k): f(v) for k, v in raw.items()}
        else:
            raw = f(raw)
        out = {
            "method": self.method,
            "H": f(self.H),
            "raw_exponent": raw,
            "stderr": f(self.stderr),
            "r2": f(self.r2),
            "grid": [f(g) for g in self.grid],
            "points": [{"log_x": f(a), "log_y": f(b)} for a, b in self.points],
            "status": self.status,
        }
        if self.q is not None:
            out["q"] = f(self.q)
        if self.flags:
            out["flags"] = {k: f(v) for k, v in self.flags.items()}
        return out


def _arr(x) -> np.ndarray:
    x = getattr(x, "values", x)
    return np.asarray(x, dtype=float)


def default_grid(n: int, n_min: int = 8, frac: float = 0.25, min_points: int = 10) -> np.ndarray:
    """Window sizes ``2^k`` plus intermediate points in ``[n_min, frac*n]``.

    Half-octave spacing is used, refined until at least ``min_points``
    distinct integers are available.
    """
    n_max = int(n * frac)
    if n_max < n_min:
        raise ValueError(f"series too short ({n}) for a scaling grid")
    per_octave = 2
    while True:
        k = np.arange(np.log2(n_min), np.log2(n_max) + 1e-9, 1.0 / per_octave)
        g = np.unique(np.round(2.0 ** k).astype(int))
        g = g[(g >= n_min) & (g <= n_max)]
        if len(g) >= min_points or per_octave >= 64:
            return g
        per_octave *= 2


def _grid(x: np.ndarray, grid) -> np.ndarray:
    if grid is None:
        return default_grid(len(x))
    g = np.asarray(grid, dtype=int)
    if np.any(np.diff(g) <= 0):
        raise ValueError("grid must be strictly increasing")
    return g


# --------------------------------------------------------------------- R/S

def rs_expected(n: int) -> float:
    """Expected rescaled range of ``n`` Gaussian white-noise samples.

    Anis-Lloyd formula with the Peters ``(n - 1/2)/n`` factor. The Gamma
    ratio is used for ``n <= 340`` and its large-``n`` limit
    ``1/sqrt(n pi / 2)`` above.
    """
    if n < 2:
        raise ValueError("rs_expected requires n >= 2")
    i = np.arange(1, n)
    s = np.sum(np.sqrt((n - i) / i))
    if n <= AL_CUTOVER:
        g = np.exp(gammaln((n - 1) / 2.0) - gammaln(n / 2.0)) / np.sqrt(np.pi)
    else:
        g = 1.0 / np.sqrt(n * np.pi / 2.0)
    return float((n - 0.5) / n * g * s)


def _rs_means(x: np.ndarray, grid: np.ndarray):
    keep, means = [], []
    for n in grid:
        d = len(x) // n
        if d < 1:
            continue
        blocks = x[: d * n].reshape(d, n)
        dev = blocks - blocks.mean(axis=1, keepdims=True)
        y = np.cumsum(dev, axis=1)
        r = y.max(axis=1) - y.min(axis=1)
        s = blocks.std(axis=1, ddof=1)
        ok = s > 0
        if not ok.any():
            warnings.warn(f"all subseries constant at n={n}; window dropped")
            continue
        keep.append(int(n))
        means.append(float(np.mean(r[ok] / s[ok])))
    return np.array(keep), np.array(means)


def rs_hurst(returns, grid=None) -> HurstEstimate:
    """Classical rescaled-range estimate: slope of log (R/S)_n against log n."""
    x = _arr(returns)
    if len(x) < 64:
        raise ValueError("R/S needs at least 64 samples")
    g, rs = _rs_means(x, _grid(x, grid))
    lx, ly = np.log(g), np.log(rs)
    fit = ols_line(lx, ly)
    return HurstEstimate("RS", fit.slope, fit.slope, fit.stderr, fit.r2, g.tolist(), list(zip(lx, ly)))


def rs_hurst_corrected(returns, grid=None) -> HurstEstimate:
    """Anis-Lloyd corrected R/S: ``0.5 +`` slope of ``log(R/S)_n - log E(R/S)_n``."""
    x = _arr(returns)
    if len(x) < 64:
        raise ValueError("R/S needs at least 64 samples")
    g, rs = _rs_means(x, _grid(x, grid))
    lx = np.log(g)
    ly = np.log(rs) - np.log([rs_expected(int(n)) for n in g])
    fit = ols_line(lx, ly)
    H = 0.5 + fit.slope
    return HurstEstimate("RS_AnisLloyd", H, fit.slope, fit.stderr, fit.r2, g.tolist(), list(zip(lx, ly)))


# --------------------------------------------------------------------- DFA

def dfa(returns, grid=None, detrend_order: int = 1) -> HurstEstimate:
    """Detrended fluctuation analysis.

    The profile (cumulative sum of the demeaned input) is cut into
    non-overlapping windows of size ``n``; each is detrended by a
    least-squares polynomial and its RMS fluctuation taken. ``F(n)`` is the
    mean of the window RMS values and ``alpha`` the log-log slope. ``H`` is
    ``alpha`` for stationary input and ``alpha - 1`` when ``alpha > 1``
    (flagged ``nonstationary``).
    """
    x = _arr(returns)
    if len(x) < 100:
        raise ValueError("DFA needs at least 100 samples")
    g = _grid(x, grid)
    if g[0] < detrend_order + 2:
        raise ValueError("windows must exceed detrend_order + 1")
    prof = np.cumsum(x - x.mean())
    keep, F = [], []
    for n in g:
        d = len(prof) // n
        if d < 1:
            continue
        Y = prof[: d * n].reshape(d, n).T
        t = np.arange(n, dtype=float)
        V = np.vander((t - t.mean()) / n, detrend_order + 1)
        coef, *_ = np.linalg.lstsq(V, Y, rcond=None)
        rms = np.sqrt(np.mean((Y - V @ coef) ** 2, axis=0))
        keep.append(int(n))
        F.append(rms.mean())
    F = np.array(F)
    if np.any(F <= 0):
        raise ValueError("degenerate fluctuation function (zero RMS)")
    lx, ly = np.log(keep), np.log(F)
    fit = ols_line(lx, ly)
    alpha = fit.slope
    nonstat = alpha > 1.0
    H = alpha - 1.0 if nonstat else alpha
    return HurstEstimate("DFA", H, alpha, fit.stderr, fit.r2, keep, list(zip(lx, ly)),
                         flags={"nonstationary": bool(nonstat)})


# --------------------------------------------------------------------- GHE

def _ghe_curve(X: np.ndarray, q: float, taus: np.ndarray) -> np.ndarray:
    denom = np.mean(np.abs(X) ** q)
    if denom == 0:
        raise ValueError("all-zero series: GHE normalisation undefined")
    return np.array([np.mean(np.abs(X[t:] - X[:-t]) ** q) for t in taus]) / denom


def _ghe_from_curve(K: np.ndarray, q: float, tau_max_range: Sequence[int]):
    hs, fits = [], []
    for tmax in tau_max_range:
        taus = np.arange(1, tmax + 1)
        fit = ols_line(np.log(taus), np.log(K[:tmax]))
        hs.append(fit.slope / q)
        fits.append(fit)
    return np.array(hs), fits


def ghe(prices, q_list=(1.0, 2.0), tau_max_range=range(5, 20)):
    """Generalised Hurst exponent ``H(q)`` from moments of increments.

    For each ``tau_max`` in ``tau_max_range`` the slope of
    ``log K_q(tau)`` on ``log tau`` (``tau = 1..tau_max``) divided by ``q``
    gives one estimate; their mean is reported and their st.dev. is the
    ``stderr``.

    Returns
    -------
    list of HurstEstimate, one per ``q``. Each carries the full ``qH(q)``
    curve in ``flags["qH"]``.
    """
    X = _arr(prices)
    if len(X) < 100:
        raise ValueError("GHE needs at least 100 samples")
    tau_max_range = list(tau_max_range)
    if min(tau_max_range) < 5:
        raise ValueError("tau_max values must be >= 5")
    taus = np.arange(1, max(tau_max_range) + 1)
    results = []
    for q in q_list:
        if q <= 0:
            raise ValueError("q must be positive")
        K = _ghe_curve(X, q, taus)
        hs, fits = _ghe_from_curve(K, q, tau_max_range)
        H = float(hs.mean())
        results.append(HurstEstimate(
            "GHE", H, {"H(q)": H, "per_tau_max": hs.tolist()}, float(hs.std()), fits[-1].r2,
            taus.tolist(), list(zip(np.log(taus), np.log(K))), q=float(q)))
    qh = {float(r.q): float(r.q * r.H) for r in results}
    for r in results:
        r.flags["qH"] = qh
    return results


def wghe_weights(theta: float, delta_t: int) -> np.ndarray:
    """Exponential weights ``w0 exp(-s/theta)``, ``s = 0..delta_t-1``, summing to one."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    if np.isinf(theta):
        return np.full(delta_t, 1.0 / delta_t)
    a = 1.0 / theta
    w0 = -np.expm1(-a) / -np.expm1(-a * delta_t)
    return w0 * np.exp(-a * np.arange(delta_t))


def wghe(prices, q: float = 1.0, theta: float = 100.0, delta_t: int | None = None,
         tau_max_range=range(5, 20), end: int | None = None) -> HurstEstimate:
    """Weighted GHE over the window of ``delta_t`` samples ending at ``end``.

    Sample ``s`` steps before the window end gets weight ``w_s``. An
    increment ``X(t) - X(t - tau)`` is weighted by the weight of ``t``;
    only increments lying wholly inside the window are used and the weights
    are renormalised over them, so ``theta = inf`` reproduces :func:`ghe`
    on the window.
    """
    X = _arr(prices)
    end = len(X) if end is None else end
    delta_t = end if delta_t is None else delta_t
    if delta_t > end or delta_t < 1:
        raise ValueError("delta_t must not exceed the available length")
    if q <= 0:
        raise ValueError("q must be positive")
    W = X[end - delta_t:end]
    w = wghe_weights(theta, delta_t)[::-1]  # oldest sample first
    tau_max_range = list(tau_max_range)
    taus = np.arange(1, max(tau_max_range) + 1)
    if taus[-1] >= delta_t:
        raise ValueError("window too short for the requested tau range")
    denom = np.sum(w * np.abs(W) ** q)
    if denom == 0:
        raise ValueError("all-zero series: GHE normalisation undefined")
    K = np.empty(len(taus))
    for i, t in enumerate(taus):
        wt = w[t:]
        K[i] = np.sum(wt * np.abs(W[t:] - W[:-t]) ** q) / wt.sum()
    K /= denom
    hs, fits = _ghe_from_curve(K, q, tau_max_range)
    H = float(hs.mean())
    return HurstEstimate("wGHE", H, {"H(q)": H, "per_tau_max": hs.tolist()}, float(hs.std()),
                         fits[-1].r2, taus.tolist(), list(zip(np.log(taus), np.log(K))), q=float(q),
                         flags={"theta": float(theta), "delta_t": int(delta_t)})


# --------------------------------------------------------------- spectral

def _periodogram(x: np.ndarray):
    n = len(x)
    f = np.fft.rfft(x - x.mean())
    k = np.arange(1, (n - 1) // 2 + 1)
    w = 2 * np.pi * k / n
    I = np.abs(f[k]) ** 2 / (2 * np.pi * n)
    return w, I


def gph(returns, k_exponent: float = 0.5) -> HurstEstimate:
    """Geweke-Porter-Hudak log-periodogram estimate of ``d``; ``H = 0.5 + d``.

    Uses the first ``K = floor(N**k_exponent)`` Fourier frequencies and the
    asymptotic standard error ``sqrt(pi^2 / (6 sum (x - xbar)^2))``.
    """
    x = _arr(returns)
    n = len(x)
    if n < 128:
        raise ValueError("GPH needs at least 128 samples")
    K = int(np.floor(n ** k_exponent))
    if K < 4:
        raise ValueError("fewer than 4 frequencies in the GPH regression")
    w, I = _periodogram(x)
    w, I = w[:K], I[:K]
    if np.any(I <= 0):
        raise ValueError("zero periodogram ordinate")
    reg = -np.log(4 * np.sin(w / 2) ** 2)
    ly = np.log(I)
    fit = ols_line(reg, ly)
    d = fit.slope
    se = float(np.sqrt(np.pi ** 2 / (6 * np.sum((reg - reg.mean()) ** 2))))
    return HurstEstimate("GPH", 0.5 + d, d, se, fit.r2, list(range(1, K + 1)), list(zip(reg, ly)),
                         flags={"K": K, "regression_stderr": fit.stderr})


def _beta_regime(beta: float) -> str:
    if -1.0 <= beta <= 1.0:
        return "fGn-range"
    if 1.0 < beta <= 3.0:
        return "fBm-range"
    return "neither"


def spectral_beta(returns, n_bins: int | None = 40) -> HurstEstimate:
    """Power-spectrum exponent ``beta`` with ``S(f) ~ f**-beta``.

    The periodogram over the full frequency range is averaged in
    ``n_bins`` equal-width bins of log-frequency before the log-log fit, so
    each octave counts equally; ``n_bins=None`` fits the raw ordinates.
    ``raw_exponent`` is ``beta``; ``H`` is the fGn mapping ``(beta+1)/2``
    and ``flags`` carries the fBm mapping ``(beta-1)/2`` and the regime.
    """
    x = _arr(returns)
    if len(x) < 256:
        raise ValueError("spectral slope needs at least 256 samples")
    w, I = _periodogram(x)
    lw = np.log(w)
    keep = I > 0
    lw, lI = lw[keep], np.log(I[keep])
    if n_bins:
        edges = np.linspace(lw[0], lw[-1] + 1e-12, n_bins + 1)
        idx = np.digitize(lw, edges) - 1
        bx, by = [], []
        for b in range(n_bins):
            sel = idx == b
            if sel.any():
                bx.append(lw[sel].mean())
                # log of the bin-mean power minus the log-chi-square bias
                k = int(sel.sum())
                by.append(np.log(np.mean(np.exp(lI[sel]))) - (digamma(k) - np.log(k)))
        lx, ly = np.array(bx), np.array(by)
    else:
        lx, ly = lw, lI
    fit = ols_line(lx, ly)
    beta = -fit.slope
    return HurstEstimate("Spectral", (beta + 1) / 2, beta, fit.stderr, fit.r2, [len(w)],
                         list(zip(lx, ly)),
                         flags={"H_fgn": (beta + 1) / 2, "H_fbm": (beta - 1) / 2,
                                "regime": _beta_regime(beta)})


def acf_hurst(returns, max_lag: int = 50, min_positive: int = 5) -> HurstEstimate:
    """Hurst exponent from the power-law decay of the sample ACF.

    ``delta`` is minus the log-log slope of the ACF over the run of
    positive lags starting at lag 1 (up to ``max_lag``); ``H = 1 - delta/2``.
    With fewer than ``min_positive`` such lags the status is
    ``"inapplicable"`` and ``H`` is nan.
    """
    x = _arr(returns)
    if max_lag < 10:
        raise ValueError("max_lag must be >= 10")
    n = len(x)
    xc = x - x.mean()
    c0 = np.dot(xc, xc) / n
    if c0 == 0:
        raise ValueError("constant series")
    lags = np.arange(1, min(max_lag, n - 1) + 1)
    rho = np.array([np.dot(xc[:-k], xc[k:]) / n / c0 for k in lags])
    nonpos = np.flatnonzero(rho <= 0)
    run = nonpos[0] if nonpos.size else len(rho)
    pos = np.arange(len(rho)) < run
    if pos.sum() < min_positive:
        return HurstEstimate("ACF", float("nan"), float("nan"), float("nan"), float("nan"),
                             lags.tolist(), [], status="inapplicable",
                             flags={"positive_lags": int(pos.sum())})
    lx, ly = np.log(lags[pos]), np.log(rho[pos])
    fit = ols_line(lx, ly)
    delta = -fit.slope
    return HurstEstimate("ACF", 1 - delta / 2, delta, fit.stderr / 2, fit.r2, lags[pos].tolist(),
                         list(zip(lx, ly)), flags={"positive_lags": int(pos.sum())})


# ------------------------------------------------------------- relations

def exponent_relations(*, alpha=None, beta=None, delta=None, H=None) -> dict:
    """Convert one scaling exponent into all others.

    ``delta = 2 - 2 alpha``, ``beta = 2 alpha - 1``, ``delta = 1 - beta``,
    ``H = alpha`` (stationary mapping) and fractal dimension ``D = 2 - H``.
    """
    given = {k: v for k, v in dict(alpha=alpha, beta=beta, delta=delta, H=H).items() if v is not None}
    if len(given) != 1:
        raise ValueError("give exactly one of alpha, beta, delta, H")
    (name, v), = given.items()
    v = float(v)
    if name == "alpha" or name == "H":
        a = v
    elif name == "beta":
        a = (v + 1.0) / 2.0
    else:
        a = (2.0 - v) / 2.0
    out = {"alpha": a, "beta": 2.0 * a - 1.0, "delta": 2.0 - 2.0 * a, "H": a, "D": 2.0 - a}
    out[name] = v
    if name == "beta":
        out["delta"] = 1.0 - v
    return out


def hurst_distance(H: float) -> float:
    return abs(float(H) - 0.5)


def classify_persistence(H: float, band: float = 0.05) -> str:
    """Label ``H`` as anti-persistent, persistent or random-walk-like."""
    if not np.isfinite(H):
        return "undetermined"
    if abs(H - 0.5) <= band:
        return "indistinguishable from random walk"
    return "anti-persistent (mean reverting)" if H < 0.5 else "persistent"
