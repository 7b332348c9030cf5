"""Maximal Lyapunov exponent: direct (Rosenstein/Kantz) and Jacobian methods.

The Jacobian method fits a one-hidden-layer tanh autoregression
``x_t = f(x_{t-tau}, ..., x_{t-m tau}) + e_t`` and propagates a tangent
vector through the Jacobians of the companion-form state map evaluated
along the data. Inference on ``lambda`` uses a stationary bootstrap of the
local one-step log expansion rates.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np
from scipy.optimize import least_squares
from scipy.stats import norm as _normal

from ._fit import ols_line
from .embedding import ami_first_min, reconstruct_mod
from .synth import make_rng

__all__ = [
    "LyapunovResult",
    "NeuralARModel",
    "rosenstein_curve",
    "rosenstein_lambda",
    "rosenstein_sweep",
    "fit_neural_ar",
    "local_expansion_rates",
    "stationary_bootstrap_se",
    "jacobian_lambda",
    "jacobian_lambda_single",
    "predictability",
    "entropy_bound_check",
]


def _arr(x) -> np.ndarray:
    return np.asarray(getattr(x, "values", x), dtype=float)


@dataclass
class LyapunovResult:
    lambda_max: float
    method: str
    triplet: tuple | None = None
    ci_lower: float | None = None
    ci_upper: float | None = None
    p_value: float | None = None
    verdict: str | None = None
    stderr: float | None = None
    curve: list | None = None
    flags: dict = field(default_factory=dict)
    grid: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def f(v):
            if isinstance(v, (np.floating, np.integer)):
                v = v.item()
            if isinstance(v, float) and not np.isfinite(v):
                return None if np.isnan(v) else ("inf" if v > 0 else "-inf")
            if isinstance(v, (list, tuple)):
                return [f(u) for u in v]
            if isinstance(v, dict):
                return {str(k): f(u) for k, u in v.items()}
            return v
        out = {
            "method": self.method, "lambda_max": f(self.lambda_max),
            "tau": self.triplet[0] if self.triplet else None,
            "m": self.triplet[1] if self.triplet else None,
            "q": self.triplet[2] if self.triplet and len(self.triplet) > 2 else None,
            "ci_lower": f(self.ci_lower), "ci_upper": f(self.ci_upper),
            "ci": f([self.ci_lower, float("inf")]) if self.ci_lower is not None else None,
            "stderr": f(self.stderr), "p_value": f(self.p_value), "verdict": self.verdict,
            "flags": f(self.flags),
        }
        if self.curve is not None:
            out["curve"] = [{"t": int(t), "S": f(s)} for t, s in enumerate(self.curve)]
        if self.grid:
            out["grid"] = f(self.grid)
        return out


# ----------------------------------------------------------------- direct

@numba.njit(cache=True)
def _divergence(Y, theiler, t_max, k, min_d2):
    M, d = Y.shape
    n_ref = M - t_max
    S = np.zeros(t_max + 1)
    cnt = np.zeros(t_max + 1, np.int64)
    no_nb = 0
    nb_idx = np.empty(k, np.int64)
    nb_d = np.empty(k)
    for i in range(n_ref):
        # k nearest neighbours (Euclidean, ties -> smaller index) among reference rows
        for a in range(k):
            nb_idx[a] = -1
            nb_d[a] = np.inf
        for j in range(n_ref):
            if abs(i - j) <= theiler:
                continue
            s = 0.0
            for c in range(d):
                diff = Y[i, c] - Y[j, c]
                s += diff * diff
            if s <= min_d2:
                continue
            if s < nb_d[k - 1]:
                pos = k - 1
                while pos > 0 and s < nb_d[pos - 1]:
                    nb_d[pos] = nb_d[pos - 1]
                    nb_idx[pos] = nb_idx[pos - 1]
                    pos -= 1
                nb_d[pos] = s
                nb_idx[pos] = j
        if nb_idx[0] < 0:
            no_nb += 1
            continue
        for t in range(t_max + 1):
            acc = 0.0
            used = 0
            for a in range(k):
                j = nb_idx[a]
                if j < 0:
                    continue
                s = 0.0
                for c in range(d):
                    diff = Y[i + t, c] - Y[j + t, c]
                    s += diff * diff
                acc += np.sqrt(s)
                used += 1
            if used > 0 and acc > 0.0:
                S[t] += np.log(acc / used)
                cnt[t] += 1
    return S, cnt, no_nb


def rosenstein_curve(series, tau: int = 1, m: int = 2, theiler_window: int | None = None,
                     t_max: int = 20, k: int = 1, min_dist: float = 1e-9):
    """Average log divergence ``S(t)`` of initially nearest neighbours.

    ``S(t)`` is the mean over reference points of
    ``ln(mean over the k nearest neighbours of |Y_{i+t} - Y_{j+t}|)``.
    Neighbours closer than ``theiler_window`` in time are excluded
    (default: the first AMI minimum). Pairs closer than ``min_dist`` times
    the series st.dev. are skipped, since their separation is rounding
    error rather than dynamics.

    Returns
    -------
    (curve, info) : ndarray of length ``t_max + 1`` and a diagnostics dict.
    """
    x = _arr(series)
    if theiler_window is None:
        theiler_window = ami_first_min(x, max_tau=min(20, len(x) // 10))[0] if len(x) >= 200 else 1
    Y = reconstruct_mod(x, tau, m).rows
    M = Y.shape[0]
    if t_max > M // 4:
        raise ValueError("t_max must not exceed a quarter of the trajectory length")
    min_d2 = (min_dist * x.std()) ** 2
    S, cnt, no_nb = _divergence(np.ascontiguousarray(Y), int(theiler_window), int(t_max), int(k), min_d2)
    n_ref = M - t_max
    if no_nb > 0.5 * n_ref:
        raise ValueError("no valid neighbour for more than half of the reference points")
    with np.errstate(invalid="ignore", divide="ignore"):
        curve = S / cnt
    return curve, {"theiler_window": int(theiler_window), "n_ref": int(n_ref),
                   "no_neighbour": int(no_nb), "tau": tau, "m": m, "k": k}


def rosenstein_lambda(curve, fit_range: tuple = (0, 5), info: dict | None = None) -> LyapunovResult:
    """Least-squares slope of ``S(t)`` over ``t`` in ``fit_range`` (inclusive)."""
    curve = np.asarray(curve, dtype=float)
    lo, hi = fit_range
    if lo < 0 or hi >= len(curve) or hi - lo + 1 < 4:
        raise ValueError("fit range must lie inside the curve and hold at least 4 points")
    t = np.arange(lo, hi + 1)
    y = curve[lo:hi + 1]
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite divergence values in the fit range")
    fit = ols_line(t, y)
    trip = (info["tau"], info["m"], None) if info else None
    return LyapunovResult(fit.slope, "Rosenstein", trip, stderr=fit.stderr, curve=curve.tolist(),
                          flags={"fit_range": list(fit_range), "r2": fit.r2, **(info or {})})


def rosenstein_sweep(series, tau: int = 1, ms: Sequence[int] = (2, 3, 4, 5, 6),
                     fit_range: tuple = (0, 5), theiler_window: int | None = None,
                     t_max: int = 20, k: int = 1, stability_tol: float = 0.1) -> LyapunovResult:
    """Slopes across embedding dimensions with a saturation check.

    The reported exponent is the slope at the largest ``m``. The result is
    flagged ``non_saturating`` when the slopes of the last three dimensions
    spread by more than ``stability_tol`` times their mean magnitude
    (at least 0.02 absolute).
    """
    x = _arr(series)
    if theiler_window is None:
        theiler_window = ami_first_min(x, max_tau=min(20, len(x) // 10))[0]
    slopes = {}
    last = None
    for m in ms:
        c, info = rosenstein_curve(x, tau, m, theiler_window, t_max, k)
        last = rosenstein_lambda(c, fit_range, info)
        slopes[int(m)] = last.lambda_max
    tail = np.array([slopes[m] for m in list(ms)[-3:]])
    spread = float(tail.max() - tail.min())
    nonsat = spread > max(0.02, stability_tol * abs(tail.mean()))
    last.flags.update({"per_m": slopes, "non_saturating": bool(nonsat), "spread": spread})
    return last


# ------------------------------------------------------------- neural AR

@dataclass
class NeuralARModel:
    tau: int
    m: int
    q: int
    W: np.ndarray
    bh: np.ndarray
    beta: np.ndarray
    c: np.ndarray
    b0: float
    mu: float
    sd: float
    rss: float
    n_obs: int
    bic: float
    converged: bool = True

    @property
    def n_params(self) -> int:
        return self.q * (self.m + 2) + self.m + 1

    def predict_std(self, X: np.ndarray) -> np.ndarray:
        return self.b0 + X @ self.c + np.tanh(X @ self.W.T + self.bh) @ self.beta

    def predict(self, X: np.ndarray) -> np.ndarray:
        """One-step forecast on the original scale from raw lag matrix ``X``."""
        Xs = (np.asarray(X, dtype=float) - self.mu) / self.sd if self.sd > 0 else np.zeros_like(X)
        return self.mu + self.sd * self.predict_std(Xs)

    def input_gradient(self, X: np.ndarray) -> np.ndarray:
        """``df/dx`` for each row of the standardised lag matrix."""
        a = np.tanh(X @ self.W.T + self.bh)
        return self.c[None, :] + ((1.0 - a * a) * self.beta) @ self.W

    @property
    def residual_sd(self) -> float:
        return float(np.sqrt(self.rss / self.n_obs)) * self.sd


def _lag_matrix(z: np.ndarray, tau: int, m: int):
    start = m * tau
    X = np.column_stack([z[start - j * tau: len(z) - j * tau] for j in range(1, m + 1)])
    return X, z[start:]


def _unpack(theta, q, m):
    i = 0
    W = theta[i:i + q * m].reshape(q, m); i += q * m
    bh = theta[i:i + q]; i += q
    beta = theta[i:i + q]; i += q
    c = theta[i:i + m]; i += m
    return W, bh, beta, c, theta[i]


def fit_neural_ar(series, tau: int = 1, m: int = 2, q: int = 2, seed: int = 0,
                  restarts: int = 5, weight_decay: float = 1e-6, max_nfev: int = 20) -> NeuralARModel:
    """Least-squares fit of ``f(x) = b0 + c.x + sum_h beta_h tanh(W_h.x + b_h)``.

    The series is standardised first. Restart 0 starts from the linear AR
    solution with zero hidden-output weights, so the fit is never worse
    than linear least squares; further restarts draw random hidden weights
    from a Philox stream keyed by ``seed``. Each restart is capped at
    ``max_nfev`` evaluations per weight. ``BIC = n ln(RSS/n) + k ln n``.
    """
    x = _arr(series)
    mu, sd = float(x.mean()), float(x.std())
    n_par = q * (m + 2) + m + 1
    if sd == 0:
        n_obs = len(x) - m * tau
        bic = n_obs * np.log(np.finfo(float).tiny) + n_par * np.log(n_obs)
        return NeuralARModel(tau, m, q, np.zeros((q, m)), np.zeros(q), np.zeros(q), np.zeros(m), 0.0,
                             mu, 0.0, 0.0, n_obs, float(bic))
    z = (x - mu) / sd
    X, y = _lag_matrix(z, tau, m)
    n = len(y)
    if n < 20 * n_par:
        raise ValueError(f"{n} observations are too few for {n_par} weights (need 20 per weight)")
    A = np.column_stack([X, np.ones(n)])
    lin, *_ = np.linalg.lstsq(A, y, rcond=None)
    lam = np.sqrt(weight_decay)

    def resid(theta):
        W, bh, beta, c, b0 = _unpack(theta, q, m)
        f = b0 + X @ c + np.tanh(X @ W.T + bh) @ beta
        return np.concatenate([y - f, lam * theta])

    def jac(theta):
        W, bh, beta, c, b0 = _unpack(theta, q, m)
        a = np.tanh(X @ W.T + bh)
        g = (1.0 - a * a) * beta
        J = np.empty((n, n_par))
        J[:, :q * m] = (g[:, :, None] * X[:, None, :]).reshape(n, q * m)
        J[:, q * m:q * m + q] = g
        J[:, q * m + q:q * m + 2 * q] = a
        J[:, q * m + 2 * q:q * m + 2 * q + m] = X
        J[:, -1] = 1.0
        return np.vstack([-J, lam * np.eye(n_par)])

    rng = make_rng(seed)
    best, best_cost, any_ok = None, np.inf, False
    for r in range(max(1, restarts)):
        W0 = rng.normal(0.0, 1.0 / np.sqrt(m), (q, m))
        bh0 = rng.normal(0.0, 0.5, q)
        beta0 = np.zeros(q) if r == 0 else rng.normal(0.0, 0.3, q)
        theta0 = np.concatenate([W0.ravel(), bh0, beta0, lin[:m], [lin[m]]])
        if q == 0:
            theta0 = np.concatenate([lin[:m], [lin[m]]])
        sol = least_squares(resid, theta0, jac=jac, method="lm", max_nfev=max_nfev * n_par)
        any_ok |= bool(sol.success)
        if sol.cost < best_cost:
            best, best_cost = sol, sol.cost
    if not any_ok:
        warnings.warn("neural AR fit did not converge; returning best-so-far weights")
    W, bh, beta, c, b0 = _unpack(best.x, q, m)
    rss = float(np.sum(best.fun[:n] ** 2))
    bic = n * np.log(max(rss / n, np.finfo(float).tiny)) + n_par * np.log(n)
    return NeuralARModel(tau, m, q, W.copy(), bh.copy(), beta.copy(), c.copy(), float(b0),
                         mu, sd, rss, n, float(bic), any_ok)


@numba.njit(cache=True)
def _tangent_rates(G, tau, m):
    # G[t, j]: df/dx_{t-(j+1)tau} at step t; companion state of size m*tau
    n = G.shape[0]
    d = m * tau
    v = np.zeros(d)
    v[0] = 1.0
    rates = np.empty(n)
    for t in range(n):
        new0 = 0.0
        for j in range(m):
            new0 += G[t, j] * v[(j + 1) * tau - 1]
        for k in range(d - 1, 0, -1):
            v[k] = v[k - 1]
        v[0] = new0
        s = 0.0
        for k in range(d):
            s += v[k] * v[k]
        s = np.sqrt(s)
        if s == 0.0 or not np.isfinite(s):
            rates[t] = np.nan
            return rates
        rates[t] = np.log(s)
        for k in range(d):
            v[k] /= s
    return rates


def local_expansion_rates(model: NeuralARModel, series, burn: int = 20) -> np.ndarray:
    """One-step log growth of a renormalised tangent vector along the data.

    The state map has dimension ``m * tau``: its first row holds the
    network input gradient at the lag positions and the rest is a shift.
    Renormalising every step is the first column of a QR-accumulated
    product, so no overflow occurs. The first ``burn`` rates, spent
    aligning the vector with the dominant direction, are dropped.
    """
    x = _arr(series)
    if model.sd == 0:
        return np.full(max(len(x) - model.m * model.tau - burn, 1), -np.inf)
    z = (x - model.mu) / model.sd
    X, _ = _lag_matrix(z, model.tau, model.m)
    G = model.input_gradient(X)
    rates = _tangent_rates(np.ascontiguousarray(G), model.tau, model.m)
    return rates[burn:]


@numba.njit(cache=True)
def _sb_means(x, starts, jumps, newblock):
    B, n = starts.shape[0], x.shape[0]
    out = np.empty(B)
    for b in range(B):
        pos = starts[b]
        acc = x[pos]
        for t in range(1, n):
            if newblock[b, t]:
                pos = jumps[b, t]
            else:
                pos = pos + 1
                if pos >= n:
                    pos = 0
            acc += x[pos]
        out[b] = acc / n
    return out


def stationary_bootstrap_se(x, n_boot: int = 500, block: float | None = None, seed: int = 0) -> float:
    """Standard error of the mean under the stationary bootstrap.

    Blocks have geometric lengths with mean ``block`` (default ``n**(1/3)``)
    and wrap around the end of the sample.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if block is None:
        block = max(1.0, n ** (1.0 / 3.0))
    rng = make_rng(seed)
    starts = rng.integers(0, n, n_boot)
    jumps = rng.integers(0, n, (n_boot, n))
    newblock = rng.random((n_boot, n)) < 1.0 / block
    return float(np.std(_sb_means(x, starts, jumps, newblock), ddof=1))


def _inference(lam: float, se: float, alpha: float):
    z = _normal.ppf(1.0 - alpha)
    if se > 0 and np.isfinite(se):
        p = float(_normal.cdf(lam / se))
    else:
        p = 1.0 if lam >= 0 else 0.0
    lower, upper = lam - z * se, lam + z * se
    verdict = "chaos" if p >= alpha else "no_chaos"
    return p, lower, upper, verdict


def jacobian_lambda_single(series, tau: int, m: int, q: int, seed: int = 0, alpha: float = 0.05,
                           n_boot: int = 500, restarts: int = 5) -> LyapunovResult:
    """Jacobian-method exponent for one ``(tau, m, q)`` triplet."""
    x = _arr(series)
    model = fit_neural_ar(x, tau, m, q, seed, restarts)
    rates = local_expansion_rates(model, x)
    if not np.all(np.isfinite(rates)):
        return LyapunovResult(float("nan"), "Jacobian", (tau, m, q),
                              flags={"skipped": "non-finite tangent product", "bic": model.bic})
    lam = float(rates.mean())
    se = stationary_bootstrap_se(rates, n_boot, seed=seed)
    p, lo, hi, verdict = _inference(lam, se, alpha)
    return LyapunovResult(lam, "Jacobian", (tau, m, q), lo, hi, p, verdict, se,
                          flags={"bic": model.bic, "alpha": alpha, "n_rates": len(rates),
                                 "converged": model.converged})


def jacobian_lambda(series, max_tau: int = 2, max_m: int = 7, max_q: int = 3, seed: int = 0,
                    alpha: float = 0.05, select: str = "bic", n_boot: int = 500,
                    restarts: int = 5) -> LyapunovResult:
    """Grid search over ``(tau, m, q)`` for the Jacobian-method exponent.

    Parameters
    ----------
    select : {"bic", "max_lambda"}
        ``"bic"`` reports the triplet whose network has the smallest BIC;
        ``"max_lambda"`` the triplet with the largest exponent. Redundant
        embeddings leave some input directions unidentified by the data and
        can produce spurious large exponents, which the max-lambda rule
        then picks up. Ties go to the smallest ``m``, then ``q``, then
        ``tau``. Both choices are recorded in ``flags``.

    Notes
    -----
    ``p_value`` tests ``H0: lambda >= 0`` (chaos) against ``lambda < 0``
    with the bootstrap standard error; the verdict is ``"chaos"`` when
    ``H0`` is not rejected at ``alpha``, equivalently when the one-sided
    upper bound ``ci_upper`` is non-negative. ``ci_lower`` is the matching
    lower bound, reported in ``[ci_lower, inf)`` form.
    """
    x = _arr(series)
    if len(x) < 500:
        raise ValueError("the Jacobian method needs at least 500 samples")
    cells = []
    for tau, m, q in itertools.product(range(1, max_tau + 1), range(1, max_m + 1), range(1, max_q + 1)):
        n_par = q * (m + 2) + m + 1
        if len(x) - m * tau < 20 * n_par:
            continue
        model = fit_neural_ar(x, tau, m, q, seed, restarts)
        rates = local_expansion_rates(model, x)
        lam = float(rates.mean()) if np.all(np.isfinite(rates)) else float("nan")
        cells.append({"tau": tau, "m": m, "q": q, "lambda": lam, "bic": model.bic, "_rates": rates})
    ok = [c for c in cells if np.isfinite(c["lambda"])]
    if not ok:
        raise ValueError("no grid cell produced a finite exponent")
    if select == "max_lambda":
        key = lambda c: (-c["lambda"], c["m"], c["q"], c["tau"])
    elif select == "bic":
        key = lambda c: (c["bic"], c["m"], c["q"], c["tau"])
    else:
        raise ValueError("select must be 'max_lambda' or 'bic'")
    max_cell = min(ok, key=lambda c: (-c["lambda"], c["m"], c["q"], c["tau"]))
    bic_cell = min(ok, key=lambda c: (c["bic"], c["m"], c["q"], c["tau"]))
    best = min(ok, key=key)
    se = stationary_bootstrap_se(best["_rates"], n_boot, seed=seed)
    p, lo, hi, verdict = _inference(best["lambda"], se, alpha)
    grid = [{k: v for k, v in c.items() if k != "_rates"} for c in cells]
    return LyapunovResult(best["lambda"], "Jacobian", (best["tau"], best["m"], best["q"]), lo, hi, p,
                          verdict, se, flags={"select": select, "alpha": alpha, "bic": best["bic"],
                                              "max_lambda_cell": _cell_summary(max_cell),
                                              "min_bic_cell": _cell_summary(bic_cell)},
                          grid=grid)


def _cell_summary(c: dict) -> dict:
    return {"tau": c["tau"], "m": c["m"], "q": c["q"], "lambda": c["lambda"], "bic": c["bic"]}


# ------------------------------------------------------------- derived

def predictability(lam: float):
    """Predictability horizon ``1/lambda``; ``(inf, "infinite-horizon")`` when ``lambda <= 0``."""
    if lam <= 0:
        return float("inf"), "infinite-horizon"
    return 1.0 / lam, "finite"


def entropy_bound_check(entropy_rate: float, positive_lambdas: Sequence[float]):
    """Check ``h <= sum of positive exponents``.

    Returns ``(holds, margin, flag)`` with ``margin = sum - h``. With no
    positive exponent the bound is vacuous and ``flag`` says so.
    """
    pos = [float(l) for l in positive_lambdas if l > 0]
    if not pos:
        return True, float("nan"), "vacuous: no positive exponents"
    total = sum(pos)
    flag = "advisory: lambda_max used as the sum" if len(pos) == 1 else "ok"
    return bool(entropy_rate <= total + 1e-12), total - entropy_rate, flag
