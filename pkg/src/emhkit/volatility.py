"""Conditional mean (additive subset ARMA) and GARCH-family variance by joint MLE.

Variance families, all of order (1,1), with ``eps_t = sigma_t z_t``:

* GARCH:  ``s2_t = k + gamma s2_{t-1} + alpha eps_{t-1}^2``
* GJR:    ``s2_t = k + gamma s2_{t-1} + (alpha + xi 1[eps_{t-1} < 0]) eps_{t-1}^2``
* EGARCH: ``ln s2_t = k + gamma ln s2_{t-1} + alpha (|z_{t-1}| - E|z|) + xi z_{t-1}``

The recursion starts from the sample variance of the mean residuals.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np
from scipy.optimize import least_squares, minimize
from scipy.stats import chi2

from .synth import _student_abs_mean, gen_garch_family, make_rng

__all__ = [
    "MeanSpec",
    "VarianceSpec",
    "MeanFit",
    "VolatilityFit",
    "fit_mean",
    "fit_model",
    "select_model",
    "default_candidates",
    "shock_coefficient",
    "unconditional_variance",
    "arch_lm_test",
    "expected_abs_z",
]

FAMILIES = ("GARCH", "EGARCH", "GJR")
_FAM_CODE = {"GARCH": 0, "GJR": 1, "EGARCH": 2}
LN2PI = math.log(2 * math.pi)


def _arr(x) -> np.ndarray:
    return np.asarray(getattr(x, "values", x), dtype=float)


@dataclass(frozen=True)
class MeanSpec:
    """Additive subset ARMA: AR lags act on returns, MA lags on residuals.

    Seasonal lags (e.g. 7, 14, 21) enter additively alongside the regular
    ones; ``d`` differences the input first.
    """

    ar_lags: tuple = ()
    ma_lags: tuple = ()
    d: int = 0
    constant: bool = True

    def __post_init__(self):
        ar = tuple(sorted(int(l) for l in self.ar_lags))
        ma = tuple(sorted(int(l) for l in self.ma_lags))
        for lags in (ar, ma):
            if any(l <= 0 for l in lags) or len(set(lags)) != len(lags):
                raise ValueError("lags must be positive and distinct")
        if self.d not in (0, 1):
            raise ValueError("d must be 0 or 1")
        object.__setattr__(self, "ar_lags", ar)
        object.__setattr__(self, "ma_lags", ma)

    @classmethod
    def parse(cls, text: str) -> "MeanSpec":
        """Parse ``"ar=1;sar=7,14,21;ma=1;sma=7,14,21;d=0;const=1"``."""
        ar, ma, d, const = [], [], 0, True
        for part in filter(None, (p.strip() for p in text.split(";"))):
            key, _, val = part.partition("=")
            key = key.strip().lower()
            vals = [int(v) for v in val.split(",") if v.strip()]
            if key in ("ar", "sar"):
                ar += vals
            elif key in ("ma", "sma"):
                ma += vals
            elif key == "d":
                d = vals[0]
            elif key in ("const", "constant"):
                const = bool(vals[0])
            else:
                raise ValueError(f"unknown mean-spec key {key!r}")
        return cls(tuple(ar), tuple(ma), d, const)

    def label(self) -> str:
        parts = []
        if self.ar_lags:
            parts.append("AR(" + ",".join(map(str, self.ar_lags)) + ")")
        if self.ma_lags:
            parts.append("MA(" + ",".join(map(str, self.ma_lags)) + ")")
        if self.d:
            parts.append("D(1)")
        return "+".join(parts) if parts else ("C" if self.constant else "0")

    @property
    def n_params(self) -> int:
        return int(self.constant) + len(self.ar_lags) + len(self.ma_lags)

    @property
    def start(self) -> int:
        return max(self.ar_lags, default=0)


@dataclass(frozen=True)
class VarianceSpec:
    family: str = "EGARCH"
    dist: str = "normal"
    p: int = 1
    q: int = 1

    def __post_init__(self):
        fam = self.family.upper()
        if fam == "GJR-GARCH":
            fam = "GJR"
        if fam not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        dist = self.dist.lower()
        if dist in ("t", "student", "studentt", "student-t"):
            dist = "t"
        if dist not in ("normal", "t"):
            raise ValueError("dist must be 'normal' or 't'")
        if (self.p, self.q) != (1, 1):
            raise ValueError("only (1,1) orders are supported")
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "dist", dist)

    @property
    def n_params(self) -> int:
        return (3 if self.family == "GARCH" else 4) + (self.dist == "t")

    def label(self) -> str:
        return f"{self.family}(1,1)-{'N' if self.dist == 'normal' else 't'}"


def expected_abs_z(dist: str = "normal", nu: float | None = None) -> float:
    """``E|z|`` for unit-variance Normal or Student-t innovations."""
    if dist == "normal":
        return math.sqrt(2.0 / math.pi)
    return _student_abs_mean(nu)


# ------------------------------------------------------------- kernels

@numba.njit(cache=True)
def _mean_resid(y, const, ar_l, ar_c, ma_l, ma_c, start):
    n = y.shape[0]
    e = np.zeros(n)
    for t in range(start, n):
        v = y[t] - const
        for i in range(ar_l.shape[0]):
            v -= ar_c[i] * y[t - ar_l[i]]
        for j in range(ma_l.shape[0]):
            s = t - ma_l[j]
            if s >= start:
                v -= ma_c[j] * e[s]
        e[t] = v
    return e[start:]


@numba.njit(cache=True)
def _variance_path(e, fam, k, g, a, xi, eabs, s0):
    n = e.shape[0]
    s2 = np.empty(n)
    s2[0] = s0
    if fam == 2:
        ls = math.log(s0)
        for t in range(1, n):
            z = e[t - 1] / math.sqrt(s2[t - 1])
            ls = k + g * ls + a * (abs(z) - eabs) + xi * z
            if ls > 700.0:
                ls = 700.0
            elif ls < -700.0:
                ls = -700.0
            s2[t] = math.exp(ls)
    else:
        for t in range(1, n):
            e2 = e[t - 1] * e[t - 1]
            coef = a
            if fam == 1 and e[t - 1] < 0.0:
                coef += xi
            s2[t] = k + g * s2[t - 1] + coef * e2
    return s2


@numba.njit(cache=True)
def _loglik(e, s2, dist_t, nu):
    n = e.shape[0]
    ll = 0.0
    if dist_t:
        c = math.lgamma((nu + 1.0) / 2.0) - math.lgamma(nu / 2.0) - 0.5 * math.log(math.pi * (nu - 2.0))
        for t in range(n):
            if not (s2[t] > 0.0) or not np.isfinite(s2[t]):
                return -np.inf
            ll += c - 0.5 * math.log(s2[t]) - 0.5 * (nu + 1.0) * math.log1p(e[t] * e[t] / (s2[t] * (nu - 2.0)))
    else:
        for t in range(n):
            if not (s2[t] > 0.0) or not np.isfinite(s2[t]):
                return -np.inf
            ll += -0.5 * (1.8378770664093453 + math.log(s2[t]) + e[t] * e[t] / s2[t])
    return ll


# ------------------------------------------------------------- mean fit

@dataclass
class MeanFit:
    spec: MeanSpec
    const: float
    ar: dict
    ma: dict
    residuals: np.ndarray
    flags: dict = field(default_factory=dict)

    def params(self) -> dict:
        out = {"const": self.const} if self.spec.constant else {}
        out.update({f"ar{l}": v for l, v in self.ar.items()})
        out.update({f"ma{l}": v for l, v in self.ma.items()})
        return out


def _prep(returns, spec: MeanSpec) -> np.ndarray:
    y = _arr(returns)
    return np.diff(y) if spec.d == 1 else y


def _split_mean(theta, spec: MeanSpec):
    i = 0
    c = 0.0
    if spec.constant:
        c = theta[0]
        i = 1
    na = len(spec.ar_lags)
    ar = np.asarray(theta[i:i + na], dtype=float)
    ma = np.asarray(theta[i + na:i + na + len(spec.ma_lags)], dtype=float)
    return c, ar, ma


def _resid(y, spec: MeanSpec, theta) -> np.ndarray:
    c, ar, ma = _split_mean(theta, spec)
    return _mean_resid(y, c, np.array(spec.ar_lags, np.int64), ar, np.array(spec.ma_lags, np.int64), ma,
                       spec.start)


def _root_flags(spec: MeanSpec, ar: np.ndarray, ma: np.ndarray) -> dict:
    def roots(lags, coefs, sign):
        if not len(lags):
            return np.array([])
        poly = np.zeros(max(lags) + 1)
        poly[0] = 1.0
        for l, c in zip(lags, coefs):
            poly[l] = sign * c
        return np.roots(poly[::-1])
    ar_r = roots(spec.ar_lags, ar, -1.0)
    ma_r = roots(spec.ma_lags, ma, 1.0)
    return {
        "explosive": bool(len(ar_r) and np.min(np.abs(ar_r)) <= 1.0),
        "non_invertible": bool(len(ma_r) and np.min(np.abs(ma_r)) <= 1.0),
        "min_ar_root": float(np.min(np.abs(ar_r))) if len(ar_r) else None,
        "min_ma_root": float(np.min(np.abs(ma_r))) if len(ma_r) else None,
    }


def fit_mean(returns, spec: MeanSpec = MeanSpec()) -> MeanFit:
    """Conditional least squares for the additive subset ARMA mean.

    Starts from the OLS fit of the AR part and refines all coefficients
    with Levenberg-Marquardt on the residual recursion.
    """
    y = _prep(returns, spec)
    if len(y) < 10 * max(spec.n_params, 1):
        raise ValueError("too few observations for the mean equation")
    start = spec.start
    cols = []
    if spec.constant:
        cols.append(np.ones(len(y) - start))
    for l in spec.ar_lags:
        cols.append(y[start - l:len(y) - l])
    theta0 = np.zeros(spec.n_params)
    if cols:
        A = np.column_stack(cols)
        sol, *_ = np.linalg.lstsq(A, y[start:], rcond=None)
        theta0[:len(sol)] = sol
    if spec.ma_lags and np.any(y != 0):
        res = least_squares(lambda th: _resid(y, spec, th), theta0, method="lm")
        theta = res.x
    else:
        theta = theta0
    c, ar, ma = _split_mean(theta, spec)
    e = _resid(y, spec, theta)
    return MeanFit(spec, float(c), dict(zip(spec.ar_lags, ar.tolist())), dict(zip(spec.ma_lags, ma.tolist())),
                   e, _root_flags(spec, ar, ma))


# ------------------------------------------------------------- joint MLE

def _var_from_u(u, fam: str, dist: str):
    """Map unconstrained ``u`` to (k, gamma, alpha, xi, nu)."""
    nu = 2.1 + math.exp(min(u[-1], 50.0)) if dist == "t" else float("nan")
    if fam == "GARCH":
        return math.exp(u[0]), math.exp(u[1]), math.exp(u[2]), 0.0, nu
    if fam == "GJR":
        a = math.exp(u[2])
        return math.exp(u[0]), math.exp(u[1]), a, math.exp(u[3]) - a, nu
    return u[0], math.tanh(u[1]), u[2], u[3], nu


def _u_from_var(k, g, a, xi, nu, fam: str, dist: str) -> np.ndarray:
    if fam == "GARCH":
        u = [math.log(k), math.log(g), math.log(a)]
    elif fam == "GJR":
        u = [math.log(k), math.log(g), math.log(a), math.log(max(a + xi, 1e-8))]
    else:
        u = [k, math.atanh(max(min(g, 0.999999), -0.999999)), a, xi]
    if dist == "t":
        u.append(math.log(max(nu - 2.1, 1e-6)))
    return np.array(u, dtype=float)


@dataclass
class VolatilityFit:
    mean_spec: MeanSpec
    var_spec: VarianceSpec
    mean_params: dict
    k: float
    gamma: float
    alpha: float
    xi: float
    nu: float | None
    loglik: float
    n_obs: int
    n_params: int
    sigma: np.ndarray
    z: np.ndarray
    residuals: np.ndarray
    arch_lm_p: float
    converged: bool
    stderr: dict | None = None
    flags: dict = field(default_factory=dict)

    @property
    def aic(self) -> float:
        return -2.0 * self.loglik + 2.0 * self.n_params

    @property
    def bic(self) -> float:
        return -2.0 * self.loglik + self.n_params * math.log(self.n_obs)

    @property
    def family(self) -> str:
        return self.var_spec.family

    def label(self) -> str:
        return f"{self.mean_spec.label()} {self.var_spec.label()}"

    def variance_params(self) -> dict:
        out = {"k": self.k, "gamma": self.gamma, "alpha": self.alpha}
        if self.family != "GARCH":
            out["xi"] = self.xi
        if self.nu is not None:
            out["nu"] = self.nu
        return out

    def to_dict(self, series: bool = False) -> dict:
        def f(v):
            if isinstance(v, (np.floating, np.integer)):
                v = v.item()
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v
        out = {
            "model": self.label(), "family": self.family, "dist": self.var_spec.dist,
            "mean": {k: f(v) for k, v in self.mean_params.items()},
            "variance": {k: f(v) for k, v in self.variance_params().items()},
            "loglik": f(self.loglik), "aic": f(self.aic), "bic": f(self.bic),
            "n_obs": self.n_obs, "n_params": self.n_params, "arch_lm_p": f(self.arch_lm_p),
            "converged": self.converged,
            "stderr": {k: f(v) for k, v in self.stderr.items()} if self.stderr else None,
            "shock": {"negative": f(shock_coefficient(self, "negative")),
                      "positive": f(shock_coefficient(self, "positive"))},
            "flags": {k: f(v) for k, v in self.flags.items()},
        }
        if series:
            out["sigma"] = [f(v) for v in self.sigma]
        return out


class _Objective:
    def __init__(self, y, mspec: MeanSpec, vspec: VarianceSpec):
        self.y = y
        self.mspec = mspec
        self.vspec = vspec
        self.nm = mspec.n_params
        self.fam = _FAM_CODE[vspec.family]
        self.ar_l = np.array(mspec.ar_lags, np.int64)
        self.ma_l = np.array(mspec.ma_lags, np.int64)

    def parts(self, theta):
        c, ar, ma = _split_mean(theta[:self.nm], self.mspec)
        e = _mean_resid(self.y, c, self.ar_l, ar, self.ma_l, ma, self.mspec.start)
        k, g, a, xi, nu = _var_from_u(theta[self.nm:], self.vspec.family, self.vspec.dist)
        eabs = expected_abs_z(self.vspec.dist, nu) if self.fam == 2 else 0.0
        s0 = float(np.mean((e - e.mean()) ** 2))
        if s0 <= 0:
            s0 = 1e-12
        s2 = _variance_path(e, self.fam, k, g, a, xi, eabs, s0)
        return e, s2, (k, g, a, xi, nu)

    def __call__(self, theta):
        if not np.all(np.isfinite(theta)):
            return 1e300
        e, s2, (k, g, a, xi, nu) = self.parts(theta)
        ll = _loglik(e, s2, self.vspec.dist == "t", nu if self.vspec.dist == "t" else 0.0)
        return -ll if np.isfinite(ll) else 1e300


def _start_values(e: np.ndarray, fam: str, dist: str) -> list:
    s2 = float(np.var(e)) or 1e-8
    starts = []
    for g, a in ((0.85, 0.10), (0.6, 0.2), (0.95, 0.04)):
        if fam == "GARCH":
            k = s2 * (1 - g - a)
            starts.append(_u_from_var(k, g, a, 0.0, 8.0, fam, dist))
        elif fam == "GJR":
            k = s2 * (1 - g - a - 0.025)
            starts.append(_u_from_var(max(k, 1e-10), g, a, 0.05, 8.0, fam, dist))
        else:
            starts.append(_u_from_var((1 - g) * math.log(s2), g, 2 * a, 0.0, 8.0, fam, dist))
    return starts


def _num_hessian(fun, x, h=1e-4):
    n = len(x)
    H = np.empty((n, n))
    steps = h * np.maximum(np.abs(x), 1.0)
    f0 = fun(x)
    for i in range(n):
        for j in range(i, n):
            xi = x.copy(); xi[i] += steps[i]; xi[j] += steps[j]; fpp = fun(xi)
            xi = x.copy(); xi[i] += steps[i]; xi[j] -= steps[j]; fpm = fun(xi)
            xi = x.copy(); xi[i] -= steps[i]; xi[j] += steps[j]; fmp = fun(xi)
            xi = x.copy(); xi[i] -= steps[i]; xi[j] -= steps[j]; fmm = fun(xi)
            H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (4 * steps[i] * steps[j])
    return H, f0


def _natural(theta, nm, vspec):
    k, g, a, xi, nu = _var_from_u(theta[nm:], vspec.family, vspec.dist)
    out = list(theta[:nm]) + [k, g, a]
    if vspec.family != "GARCH":
        out.append(xi)
    if vspec.dist == "t":
        out.append(nu)
    return np.array(out)


def fit_model(returns, mean: MeanSpec = MeanSpec(), var: VarianceSpec = VarianceSpec(),
              seed: int = 0, n_starts: int = 3, arch_lags: int = 5, stderr: bool = True) -> VolatilityFit:
    """Joint maximum-likelihood fit of mean and variance parameters.

    Nelder-Mead from several starting points (seeded perturbations of
    typical values), then an L-BFGS-B polish of the best. Parameters are
    optimised in transformed coordinates: positivity for GARCH/GJR
    (``alpha + xi >= 0`` for GJR), ``|gamma| < 1`` for EGARCH and
    ``nu > 2.1`` for Student-t. Standard errors come from a numerical
    Hessian mapped to natural parameters; they are omitted (``None``) when
    the Hessian is not positive definite.
    """
    y = _prep(returns, mean)
    if len(y) < 300:
        raise ValueError("fit_model needs at least 300 observations")
    mfit = fit_mean(returns, mean)
    obj = _Objective(y, mean, var)
    theta_m = np.array(list(mfit.params().values()), dtype=float)
    rng = make_rng(seed)
    best = None
    for i, u0 in enumerate(_start_values(mfit.residuals, var.family, var.dist)[:max(1, n_starts)]):
        th0 = np.concatenate([theta_m, u0])
        if i > 0:
            th0 = th0 + rng.normal(0.0, 0.05, len(th0))
        r = minimize(obj, th0, method="Nelder-Mead",
                     options={"maxiter": 400 * len(th0), "maxfev": 400 * len(th0), "xatol": 1e-7,
                              "fatol": 1e-9, "adaptive": True})
        if best is None or r.fun < best.fun:
            best = r
    pol = minimize(obj, best.x, method="L-BFGS-B")
    if pol.fun <= best.fun:
        theta, converged = pol.x, bool(pol.success or best.success)
    else:
        theta, converged = best.x, bool(best.success)
    if not converged:
        warnings.warn(f"{var.label()} fit did not fully converge; best-so-far parameters returned")
    e, s2, (k, g, a, xi, nu) = obj.parts(theta)
    ll = -obj(theta)
    sigma = np.sqrt(s2)
    z = e / sigma
    se = None
    if stderr:
        nat = _natural(theta, obj.nm, var)
        H, _ = _num_hessian(obj, theta)
        try:
            np.linalg.cholesky(H)
            cov_u = np.linalg.inv(H)
            J = np.empty((len(nat), len(theta)))
            for j in range(len(theta)):
                d = 1e-6 * max(abs(theta[j]), 1.0)
                tp = theta.copy(); tp[j] += d
                tm = theta.copy(); tm[j] -= d
                J[:, j] = (_natural(tp, obj.nm, var) - _natural(tm, obj.nm, var)) / (2 * d)
            cov = J @ cov_u @ J.T
            names = list(mfit.params().keys()) + ["k", "gamma", "alpha"] + \
                (["xi"] if var.family != "GARCH" else []) + (["nu"] if var.dist == "t" else [])
            se = {nm_: float(np.sqrt(max(cov[i, i], 0.0))) for i, nm_ in enumerate(names)}
        except np.linalg.LinAlgError:
            se = None
    c, ar, ma = _split_mean(theta[:obj.nm], mean)
    mp = {"const": float(c)} if mean.constant else {}
    mp.update({f"ar{l}": float(v) for l, v in zip(mean.ar_lags, ar)})
    mp.update({f"ma{l}": float(v) for l, v in zip(mean.ma_lags, ma)})
    try:
        lm_p = arch_lm_test(z, arch_lags)
    except ValueError:
        lm_p = float("nan")
    flags = {"persistence": float(g + a + 0.5 * xi) if var.family == "GJR" else
             float(g + a) if var.family == "GARCH" else float(g)}
    flags.update({"mean_" + k_: v for k_, v in _root_flags(mean, ar, ma).items()})
    return VolatilityFit(mean, var, mp, float(k), float(g), float(a), float(xi),
                         float(nu) if var.dist == "t" else None, float(ll), len(e),
                         mean.n_params + var.n_params, sigma, z, e, float(lm_p), converged, se, flags)


def default_candidates() -> list:
    """Nine-model menu: three mean structures, each with GARCH, EGARCH and GJR.

    The first two means use Normal innovations and the third Student-t.
    """
    means = [
        (MeanSpec((1, 2, 7, 14), (1, 2, 7, 14)), "normal"),
        (MeanSpec((1, 2, 7, 14, 21), (1, 7, 14, 21)), "normal"),
        (MeanSpec((1, 7, 14, 21), (1, 7, 14, 21)), "t"),
    ]
    return [(m, VarianceSpec(f, d)) for m, d in means for f in ("GARCH", "EGARCH", "GJR")]


def select_model(returns, candidates: Sequence | None = None, seed: int = 0, **fit_kw):
    """Fit every candidate ``(MeanSpec, VarianceSpec)`` and rank them.

    Ranking is by AIC (smaller is better) with BIC as tiebreak. Failed
    fits are returned separately with the error message.

    Returns
    -------
    (ranked_fits, failures) : list of VolatilityFit, list of (label, reason)
    """
    if candidates is None:
        candidates = default_candidates()
    fits, failed = [], []
    for mspec, vspec in candidates:
        try:
            fits.append(fit_model(returns, mspec, vspec, seed=seed, **fit_kw))
        except Exception as exc:  # isolate per-candidate failures
            failed.append((f"{mspec.label()} {vspec.label()}", str(exc)))
    fits.sort(key=lambda f: (f.aic, f.bic))
    return fits, failed


def selection_table(fits: Sequence[VolatilityFit]) -> list:
    """Rows with model, LogL, AIC, BIC and ARCH-test p-value."""
    return [{"model": f.label(), "loglik": f.loglik, "aic": f.aic, "bic": f.bic,
             "arch_lm_p": f.arch_lm_p} for f in fits]


def shock_coefficient(fit, sign: str, convention: str = "derived") -> float:
    """Total response of the EGARCH log variance to a unit shock of given sign.

    From ``alpha |z| + xi z`` the slope in ``|z|`` is ``alpha + xi`` for
    positive and ``alpha - xi`` for negative shocks (``convention="derived"``).
    ``convention="printed"`` returns ``alpha + xi`` for negative and
    ``alpha - xi`` for positive shocks, the assignment found in some
    published tables.
    """
    alpha = fit.alpha if hasattr(fit, "alpha") else fit["alpha"]
    xi = fit.xi if hasattr(fit, "xi") else fit.get("xi", 0.0)
    if sign not in ("negative", "positive"):
        raise ValueError("sign must be 'negative' or 'positive'")
    if convention == "derived":
        return alpha - xi if sign == "negative" else alpha + xi
    if convention == "printed":
        return alpha + xi if sign == "negative" else alpha - xi
    raise ValueError("convention must be 'derived' or 'printed'")


def unconditional_variance(fit=None, *, family: str | None = None, k=None, gamma=None, alpha=None,
                           xi=0.0, dist="normal", nu=None, n_sim: int = 200_000, seed: int = 0):
    """Long-run variance of the fitted process.

    Closed forms: GARCH ``k/(1-gamma-alpha)``, GJR ``k/(1-gamma-alpha-xi/2)``.
    EGARCH has no closed form used here; it is estimated by simulation.

    Returns
    -------
    (variance, status) with status ``"exact"`` or ``"approximate"``.
    """
    if fit is not None:
        family, k, gamma, alpha, xi = fit.family, fit.k, fit.gamma, fit.alpha, fit.xi
        dist, nu = fit.var_spec.dist, fit.nu
    family = (family or "GARCH").upper()
    if family == "GARCH":
        if gamma + alpha >= 1:
            raise ValueError("non-stationary GARCH: gamma + alpha >= 1")
        return k / (1.0 - gamma - alpha), "exact"
    if family == "GJR":
        if gamma + alpha + 0.5 * xi >= 1:
            raise ValueError("non-stationary GJR: gamma + alpha + xi/2 >= 1")
        return k / (1.0 - gamma - alpha - 0.5 * xi), "exact"
    if abs(gamma) >= 1:
        raise ValueError("non-stationary EGARCH: |gamma| >= 1")
    r, _ = gen_garch_family("egarch11", n_sim, seed, k=k, gamma=gamma, alpha=alpha, xi=xi,
                            dist="t" if dist == "t" else "normal", nu=nu or 8.0)
    return float(np.var(r)), "approximate"


def arch_lm_test(residuals, lags: int = 5) -> float:
    """Engle's LM test: ``n R^2`` of ``e_t^2`` on its ``lags`` lags, chi-square p-value."""
    e = _arr(residuals)
    if len(e) < 100:
        raise ValueError("ARCH-LM needs at least 100 observations")
    e2 = e ** 2
    if np.ptp(e2) == 0:
        raise ValueError("degenerate regression: constant squared residuals")
    Y = e2[lags:]
    X = np.column_stack([np.ones(len(Y))] + [e2[lags - j:len(e2) - j] for j in range(1, lags + 1)])
    beta, *_ = np.linalg.lstsq(X, Y, rcond=None)
    resid = Y - X @ beta
    tss = np.sum((Y - Y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / tss
    return float(chi2.sf(len(Y) * r2, lags))
