"""Shannon and Tsallis entropies, q-Gaussian density and rolling entropy traces.

Entropies use natural logarithms. The Tsallis index is called ``a``; for
``a = 1`` the Tsallis entropy reduces to the Shannon entropy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

__all__ = [
    "EntropyConfig",
    "EntropyTrace",
    "shannon_entropy",
    "tsallis_entropy",
    "max_tsallis_entropy",
    "nonadditivity_residual",
    "q_exponential",
    "q_gaussian_pdf",
    "q_gaussian_norm",
    "q_gaussian_variance",
    "fit_q_gaussian",
    "histogram_probabilities",
    "rolling_tsallis",
    "entropy_volatility_report",
    "block_entropy_rate",
]


def _check_prob(p, tol: float = 1e-9) -> np.ndarray:
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("probabilities must be finite and non-negative")
    if abs(p.sum() - 1.0) > tol:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
    return p


def shannon_entropy(p) -> float:
    """``-sum p ln p`` with ``0 ln 0 = 0``."""
    p = _check_prob(p)
    nz = p[p > 0]
    return float(max(-math.fsum((nz * np.log(nz)).tolist()), 0.0))


def tsallis_entropy(p, a: float) -> float:
    """Tsallis entropy ``(1 - sum p^a) / (a - 1)``; Shannon at ``a = 1``.

    Evaluated as ``-sum p expm1((a-1) ln p) / (a-1)``, which equals the
    textbook form for normalised ``p`` and stays accurate as ``a -> 1``.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    p = _check_prob(p)
    if a == 1:
        return shannon_entropy(p)
    nz = p[p > 0]
    terms = nz * np.expm1((a - 1.0) * np.log(nz))
    return float(max(-math.fsum(terms.tolist()) / (a - 1.0), 0.0))


def max_tsallis_entropy(n: int, a: float) -> float:
    """Entropy of the uniform distribution on ``n`` states: the upper bound."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return tsallis_entropy(np.full(n, 1.0 / n), a)


def nonadditivity_residual(pA, pB, a: float) -> float:
    """``|H(A x B) - [H(A) + H(B) + (1 - a) H(A) H(B)]|`` for independent A, B."""
    pA, pB = _check_prob(pA), _check_prob(pB)
    joint = np.outer(pA, pB).ravel()
    joint = joint / joint.sum()
    hA, hB = tsallis_entropy(pA, a), tsallis_entropy(pB, a)
    return abs(tsallis_entropy(joint, a) - (hA + hB + (1.0 - a) * hA * hB))


# ----------------------------------------------------------- q-Gaussian

def q_exponential(u, a: float) -> np.ndarray:
    """``[1 + (1 - a) u]_+ ** (1 / (1 - a))``; ``exp(u)`` at ``a = 1``."""
    u = np.asarray(u, dtype=float)
    if a == 1:
        return np.exp(u)
    base = 1.0 + (1.0 - a) * u
    out = np.zeros_like(base)
    pos = base > 0
    out[pos] = base[pos] ** (1.0 / (1.0 - a))
    return out


def q_gaussian_norm(a: float, beta: float) -> float:
    """Normalising constant of ``e_a(-beta x^2)``."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    if a >= 3:
        raise ValueError("q-Gaussian is not normalisable for a >= 3")
    if a == 1:
        return math.sqrt(math.pi / beta)
    if a > 1:
        return math.sqrt(math.pi / ((a - 1) * beta)) * math.exp(
            gammaln((3 - a) / (2 * (a - 1))) - gammaln(1 / (a - 1)))
    return 2 * math.sqrt(math.pi) / ((3 - a) * math.sqrt((1 - a) * beta)) * math.exp(
        gammaln(1 / (1 - a)) - gammaln((3 - a) / (2 * (1 - a))))


def q_gaussian_pdf(x, a: float, beta: float) -> np.ndarray:
    """q-Gaussian density ``e_a(-beta x^2) / Z``."""
    return q_exponential(-beta * np.asarray(x, dtype=float) ** 2, a) / q_gaussian_norm(a, beta)


def q_gaussian_variance(a: float, beta: float):
    """``(variance, status)``: ``1/(beta (5 - 3a))`` for ``a < 5/3``, else ``(inf, "divergent")``."""
    if a >= 5.0 / 3.0:
        return float("inf"), "divergent"
    q_gaussian_norm(a, beta)
    return 1.0 / (beta * (5.0 - 3.0 * a)), "finite"


def fit_q_gaussian(x, a_bounds=(1.0001, 2.9)) -> tuple:
    """Maximum-likelihood ``(a, beta)`` for a centred q-Gaussian.

    ``beta`` is profiled out numerically for each ``a``.
    """
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    s2 = x.var()
    if s2 == 0:
        raise ValueError("constant sample")

    def nll_beta(lb, a):
        b = math.exp(lb)
        dens = q_gaussian_pdf(x, a, b)
        if np.any(dens <= 0):
            return 1e300
        return -float(np.sum(np.log(dens)))

    def prof(a):
        r = minimize_scalar(lambda lb: nll_beta(lb, a), bounds=(math.log(0.01 / s2), math.log(100 / s2)),
                            method="bounded")
        return r.fun, math.exp(r.x)

    r = minimize_scalar(lambda a: prof(a)[0], bounds=a_bounds, method="bounded")
    return float(r.x), float(prof(r.x)[1])


# ------------------------------------------------------------- rolling

@dataclass(frozen=True)
class EntropyConfig:
    a: float = 1.575
    n_states: int = 10
    partition: str = "fixed"
    window: int = 365
    step: int = 1
    a_mode: str = "fixed"

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("a must be positive")
        if self.n_states < 2:
            raise ValueError("n_states must be >= 2")
        if self.partition not in ("fixed", "adaptive"):
            raise ValueError("partition must be 'fixed' or 'adaptive'")
        if self.window < 30:
            raise ValueError("window must be >= 30")
        if self.step < 1:
            raise ValueError("step must be >= 1")
        if self.a_mode not in ("fixed", "mle"):
            raise ValueError("a_mode must be 'fixed' or 'mle'")


@dataclass
class EntropyTrace:
    ends: list
    values: np.ndarray
    config: EntropyConfig
    a_values: np.ndarray | None = None
    flags: dict = field(default_factory=dict)

    def to_rows(self) -> list:
        return [{"end": str(e), "H_a": float(v)} for e, v in zip(self.ends, self.values)]


def histogram_probabilities(x, n_states: int, lo: float | None = None, hi: float | None = None) -> np.ndarray:
    """Relative frequencies over ``n_states`` equal-width bins on ``[lo, hi]``.

    A zero-width range puts all mass in one bin.
    """
    x = np.asarray(x, dtype=float)
    lo = x.min() if lo is None else lo
    hi = x.max() if hi is None else hi
    if hi <= lo:
        p = np.zeros(n_states)
        p[0] = 1.0
        return p
    idx = np.floor((x - lo) / (hi - lo) * n_states).astype(int)
    idx = np.clip(idx, 0, n_states - 1)
    return np.bincount(idx, minlength=n_states) / len(x)


def rolling_tsallis(returns, config: EntropyConfig = EntropyConfig(), timestamps=None) -> EntropyTrace:
    """Tsallis entropy of the histogram of each rolling window.

    ``partition="fixed"`` uses bin edges spanning the whole series;
    ``"adaptive"`` recomputes the edges from each window's range. With
    ``a_mode="mle"`` each window's index is the q-Gaussian maximum
    likelihood estimate instead of ``config.a``.
    """
    x = np.asarray(getattr(returns, "values", returns), dtype=float)
    if timestamps is None:
        timestamps = getattr(returns, "timestamps", None)
    n, K, dt = len(x), config.window, config.step
    if K > n:
        raise ValueError("window longer than the series")
    glo, ghi = x.min(), x.max()
    count = (n - K) // dt + 1
    vals = np.empty(count)
    avals = np.empty(count) if config.a_mode == "mle" else None
    ends = []
    for i in range(count):
        w = x[i * dt:i * dt + K]
        if config.partition == "fixed":
            p = histogram_probabilities(w, config.n_states, glo, ghi)
        else:
            p = histogram_probabilities(w, config.n_states)
        a = config.a
        if avals is not None:
            a = fit_q_gaussian(w)[0] if np.ptp(w) > 0 else config.a
            avals[i] = a
        vals[i] = tsallis_entropy(p, a)
        end = i * dt + K - 1
        ends.append(timestamps[end] if timestamps is not None else end)
    return EntropyTrace(ends, vals, config, avals,
                        {"max_entropy": max_tsallis_entropy(config.n_states, config.a)})


def entropy_volatility_report(trace, sigma, max_lag: int = 10) -> dict:
    """Contemporaneous and lagged correlation between an entropy trace and volatility.

    ``cross[k]`` is ``corr(H_t, sigma_{t+k})``; positive ``k`` pairs each
    entropy value with a later volatility value.
    """
    h = np.asarray(getattr(trace, "values", trace), dtype=float)
    s = np.asarray(getattr(sigma, "values", sigma), dtype=float)
    if len(h) != len(s):
        raise ValueError(f"misaligned series: {len(h)} entropy values vs {len(s)} volatilities")
    if len(h) < 3:
        raise ValueError("need at least three aligned points")

    def corr(u, v):
        if np.ptp(u) == 0 or np.ptp(v) == 0:
            return float("nan")
        return float(np.corrcoef(u, v)[0, 1])

    r0 = corr(h, s)
    cross = {}
    for k in range(-max_lag, max_lag + 1):
        if k >= 0:
            u, v = h[:len(h) - k], s[k:]
        else:
            u, v = h[-k:], s[:len(s) + k]
        cross[k] = corr(u, v) if len(u) >= 3 else float("nan")
    sign = "negative" if r0 < 0 else "positive" if r0 > 0 else "zero/undefined"
    return {"contemporaneous": r0, "sign": sign, "cross": cross, "n": int(len(h)),
            "null_band": 2.0 / math.sqrt(len(h))}


def block_entropy_rate(symbols, k: int = 8) -> float:
    """Shannon entropy rate estimate ``H_k - H_{k-1}`` from length-``k`` blocks (nats)."""
    s = np.asarray(symbols)
    if k < 1 or len(s) <= k:
        raise ValueError("need more symbols than the block length")

    def block_h(L):
        if L == 0:
            return 0.0
        _, counts = np.unique(np.lib.stride_tricks.sliding_window_view(s, L), axis=0, return_counts=True)
        return shannon_entropy(counts / counts.sum())

    return block_h(k) - block_h(k - 1)
