"""Ground-truth generators for stochastic and chaotic test processes.

Every generator draws from a Philox (counter-based) bit generator keyed by an
integer seed, so a given ``(kind, parameters, length, seed)`` reproduces the
same bytes on any platform running the same NumPy major version.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.special import gammaln

__all__ = [
    "GeneratorSpec",
    "make_rng",
    "fgn_autocovariance",
    "gen_white_noise",
    "gen_ar1",
    "gen_fgn",
    "gen_fbm",
    "gen_arfima",
    "arfima_weights",
    "gen_garch_family",
    "gen_chaotic",
    "gen_sine",
    "gen_gbm",
    "logistic_lyapunov",
    "henon_lyapunov",
    "generate",
]

KINDS = (
    "white_noise", "ar1", "fgn", "fbm", "arfima", "garch11", "egarch11",
    "gjr11", "logistic", "henon", "sine", "sine_map", "gbm",
)


def make_rng(seed: int | None) -> np.random.Generator:
    """Return a Philox-backed generator; the only RNG used in the package."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n: int
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; choose from {KINDS}")
        if self.n < 1:
            raise ValueError("n must be positive")


def gen_white_noise(n: int, seed: int = 0, sigma: float = 1.0) -> np.ndarray:
    return sigma * make_rng(seed).standard_normal(n)


def gen_ar1(phi: float, n: int, seed: int = 0, sigma: float = 1.0, burn: int = 500) -> np.ndarray:
    """Gaussian AR(1) ``x_t = phi x_{t-1} + e_t`` after a discarded burn-in."""
    if abs(phi) >= 1:
        raise ValueError("AR(1) requires |phi| < 1")
    e = sigma * make_rng(seed).standard_normal(n + burn)
    x = np.empty_like(e)
    x[0] = e[0] / np.sqrt(1.0 - phi * phi)
    for t in range(1, len(e)):
        x[t] = phi * x[t - 1] + e[t]
    return x[burn:]


def fgn_autocovariance(H: float, k) -> np.ndarray:
    """Autocovariance of unit-variance fractional Gaussian noise at lag(s) ``k``."""
    k = np.abs(np.asarray(k, dtype=float))
    return 0.5 * (np.abs(k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))


def gen_fgn(H: float, n: int, seed: int = 0, return_flag: bool = False):
    """Exact fractional Gaussian noise by circulant embedding (Davies-Harte).

    Parameters
    ----------
    H : float
        Hurst exponent, ``0 < H < 1``.
    n : int
        Number of samples.
    seed : int
        Seed of the Philox generator.
    return_flag : bool
        When True also return ``"exact"`` or ``"approximate"``; the latter is
        used when the embedding has negative eigenvalues, which are then
        clipped to zero (a warning is emitted as well).

    Returns
    -------
    ndarray of shape (n,), unit variance.
    """
    if not 0.0 < H < 1.0:
        raise ValueError("H must lie in (0, 1)")
    rng = make_rng(seed)
    if n == 1:
        out = rng.standard_normal(1)
        return (out, "exact") if return_flag else out
    gamma = fgn_autocovariance(H, np.arange(n))
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    lam = np.fft.fft(row).real
    flag = "exact"
    if np.any(lam < -1e-10 * lam.max()):
        warnings.warn("circulant embedding not PSD; clipping eigenvalues (approximate fGn)")
        flag = "approximate"
    lam = np.clip(lam, 0.0, None)
    m = len(row)
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    w = np.fft.fft(np.sqrt(lam / m) * z)
    out = w.real[:n]
    return (out, flag) if return_flag else out


def gen_fbm(H: float, n: int, seed: int = 0) -> np.ndarray:
    """Fractional Brownian motion path of length ``n`` starting at 0."""
    return np.concatenate([[0.0], np.cumsum(gen_fgn(H, n - 1, seed))])


def arfima_weights(d: float, n_terms: int) -> np.ndarray:
    """MA(inf) weights psi_j = Gamma(j+d) / (Gamma(j+1) Gamma(d)) of (1-B)^{-d}."""
    psi = np.empty(n_terms)
    psi[0] = 1.0
    j = np.arange(1, n_terms)
    psi[1:] = np.cumprod((j - 1 + d) / j)
    return psi


def gen_arfima(d: float, n: int, seed: int = 0, truncation: int | None = None) -> np.ndarray:
    """ARFIMA(0, d, 0) by a truncated MA(inf) filter of Gaussian noise.

    The filter keeps ``truncation`` weights (default ``max(10 n, 10000)``).
    For ``d > 0`` the dropped tail carries a fraction of order
    ``truncation**(2d - 1)`` of the variance, below 1% for the defaults.
    """
    if not -0.5 < d < 0.5:
        raise ValueError("d must lie in (-0.5, 0.5)")
    if truncation is None:
        truncation = max(10 * n, 10000)
    e = make_rng(seed).standard_normal(n + truncation)
    if d == 0:
        return e[-n:]
    psi = arfima_weights(d, truncation + 1)
    size = 1 << int(np.ceil(np.log2(len(e) + len(psi))))
    conv = np.fft.irfft(np.fft.rfft(e, size) * np.fft.rfft(psi, size), size)
    return conv[truncation:truncation + n]


def _student_scale(nu: float) -> float:
    return np.sqrt((nu - 2.0) / nu)


def gen_garch_family(kind: str, n: int, seed: int = 0, k: float = 0.1, gamma: float = 0.5,
                     alpha: float = 0.3, xi: float = 0.0, mu: float = 0.0,
                     dist: str = "normal", nu: float = 8.0, burn: int = 1000):
    """Simulate GARCH(1,1), EGARCH(1,1) or GJR-GARCH(1,1) returns.

    Parameter names follow the volatility module: ``k`` constant, ``gamma``
    persistence, ``alpha`` shock size, ``xi`` asymmetry. For EGARCH the log
    variance obeys ``k + gamma log s2 + alpha (|z| - E|z|) + xi z``.

    Returns
    -------
    (returns, sigma) : tuple of ndarray
        Returns ``mu + sigma_t z_t`` and the latent conditional st.dev.
    """
    kind = kind.lower().replace("-", "").replace("_", "")
    kind = {"garch": "garch11", "egarch": "egarch11", "gjr": "gjr11"}.get(kind, kind)
    rng = make_rng(seed)
    if dist == "normal":
        z = rng.standard_normal(n + burn)
        e_abs = np.sqrt(2.0 / np.pi)
    elif dist in ("t", "student", "studentt"):
        if nu <= 2:
            raise ValueError("Student-t innovations need nu > 2")
        z = rng.standard_t(nu, n + burn) * _student_scale(nu)
        e_abs = _student_abs_mean(nu)
    else:
        raise ValueError(f"unknown distribution {dist!r}")

    s2 = np.empty(n + burn)
    if kind == "garch11":
        if k <= 0 or gamma < 0 or alpha < 0 or gamma + alpha >= 1:
            raise ValueError("explosive or invalid GARCH(1,1) parameters")
        s2[0] = k / (1.0 - gamma - alpha)
        for t in range(1, n + burn):
            eps = np.sqrt(s2[t - 1]) * z[t - 1]
            s2[t] = k + gamma * s2[t - 1] + alpha * eps * eps
    elif kind == "gjr11":
        if k <= 0 or gamma < 0 or alpha < 0 or alpha + xi < 0 or gamma + alpha + 0.5 * xi >= 1:
            raise ValueError("explosive or invalid GJR(1,1) parameters")
        s2[0] = k / (1.0 - gamma - alpha - 0.5 * xi)
        for t in range(1, n + burn):
            eps = np.sqrt(s2[t - 1]) * z[t - 1]
            s2[t] = k + gamma * s2[t - 1] + (alpha + (xi if eps < 0 else 0.0)) * eps * eps
    elif kind == "egarch11":
        if abs(gamma) >= 1:
            raise ValueError("EGARCH persistence must satisfy |gamma| < 1")
        ls = np.empty(n + burn)
        ls[0] = k / (1.0 - gamma)
        for t in range(1, n + burn):
            zz = z[t - 1]
            ls[t] = k + gamma * ls[t - 1] + alpha * (abs(zz) - e_abs) + xi * zz
        s2 = np.exp(ls)
    else:
        raise ValueError(f"unknown GARCH family {kind!r}")
    sigma = np.sqrt(s2)
    r = mu + sigma * z
    return r[burn:], sigma[burn:]


def _student_abs_mean(nu: float) -> float:
    """E|z| for a unit-variance Student-t variable with ``nu`` degrees of freedom."""
    return float(2.0 * np.sqrt(nu - 2.0) / (nu - 1.0)
                 * np.exp(gammaln((nu + 1) / 2) - gammaln(nu / 2)) / np.sqrt(np.pi))


def _add_noise(x: np.ndarray, snr_db: float | None, rng: np.random.Generator) -> np.ndarray:
    if snr_db is None or np.isinf(snr_db):
        return x
    noise_sd = np.std(x) / np.sqrt(10.0 ** (snr_db / 10.0))
    return x + noise_sd * rng.standard_normal(len(x))


def gen_chaotic(kind: str, n: int, seed: int = 0, noise_snr: float | None = None,
                burn: int = 1000, **params) -> np.ndarray:
    """Orbit of a chaotic map with a random initial condition.

    ``kind`` is ``"logistic"`` (``r``, default 4), ``"henon"`` (``a`` 1.4,
    ``b`` 0.3; the x coordinate is returned) or ``"sine_map"``
    (``x <- r sin(pi x)``, default ``r`` 0.5, a stable fixed point).
    ``noise_snr`` adds Gaussian observation noise at that SNR in dB;
    ``None`` or ``inf`` returns the clean orbit.
    """
    if burn < 1000:
        raise ValueError("burn-in of at least 1000 iterations is required")
    rng = make_rng(seed)
    total = n + burn
    out = np.empty(total)
    if kind == "logistic":
        r = params.get("r", 4.0)
        x = rng.uniform(0.1, 0.9)
        for t in range(total):
            x = r * x * (1.0 - x)
            out[t] = x
    elif kind == "henon":
        a, b = params.get("a", 1.4), params.get("b", 0.3)
        x, y = rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)
        for t in range(total):
            x, y = 1.0 - a * x * x + y, b * x
            out[t] = x
    elif kind == "sine_map":
        r = params.get("r", 0.5)
        x = rng.uniform(0.1, 0.9)
        for t in range(total):
            x = r * np.sin(np.pi * x)
            out[t] = x
    else:
        raise ValueError(f"unknown chaotic map {kind!r}")
    return _add_noise(out[burn:], noise_snr, rng)


def logistic_lyapunov(n_steps: int = 1_000_000, r: float = 4.0, seed: int = 0, burn: int = 1000) -> float:
    """Tangent-map estimate of the logistic-map exponent, mean log|r (1 - 2x)|."""
    x = gen_chaotic("logistic", n_steps, seed=seed, burn=burn, r=r)
    return float(np.mean(np.log(np.abs(r * (1.0 - 2.0 * x)))))


def henon_lyapunov(n_steps: int = 1_000_000, a: float = 1.4, b: float = 0.3, seed: int = 0) -> float:
    """Largest Henon exponent from a renormalised tangent vector."""
    rng = make_rng(seed)
    x, y = rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)
    for _ in range(1000):
        x, y = 1.0 - a * x * x + y, b * x
    v0, v1 = 1.0, 0.0
    acc = 0.0
    for _ in range(n_steps):
        # tangent map at the current point, then advance the point
        v0, v1 = -2.0 * a * x * v0 + v1, b * v0
        x, y = 1.0 - a * x * x + y, b * x
        norm = np.hypot(v0, v1)
        acc += np.log(norm)
        v0 /= norm
        v1 /= norm
    return acc / n_steps


def gen_sine(n: int, period: float = 20.0, amplitude: float = 1.0, phase: float = 0.0,
             seed: int = 0, noise_sd: float = 0.0) -> np.ndarray:
    t = np.arange(n)
    x = amplitude * np.sin(2 * np.pi * t / period + phase)
    if noise_sd > 0:
        x = x + noise_sd * make_rng(seed).standard_normal(n)
    return x


def gen_gbm(n: int, seed: int = 0, s0: float = 50.0, mu: float = 0.0, sigma: float = 0.02) -> np.ndarray:
    """Geometric Brownian motion price path sampled at unit steps."""
    z = make_rng(seed).standard_normal(n - 1)
    steps = (mu - 0.5 * sigma ** 2) + sigma * z
    return s0 * np.exp(np.concatenate([[0.0], np.cumsum(steps)]))


def generate(spec: GeneratorSpec) -> np.ndarray:
    """Dispatch a :class:`GeneratorSpec` to the matching generator.

    GARCH-family kinds return only the returns; call
    :func:`gen_garch_family` directly for the latent volatility.
    """
    p = dict(spec.params)
    n, seed = spec.n, spec.seed
    if spec.kind == "white_noise":
        return gen_white_noise(n, seed, **p)
    if spec.kind == "ar1":
        return gen_ar1(p.pop("phi", 0.5), n, seed, **p)
    if spec.kind == "fgn":
        return gen_fgn(p.pop("H", 0.5), n, seed)
    if spec.kind == "fbm":
        return gen_fbm(p.pop("H", 0.5), n, seed)
    if spec.kind == "arfima":
        return gen_arfima(p.pop("d", 0.0), n, seed, **p)
    if spec.kind in ("garch11", "egarch11", "gjr11"):
        return gen_garch_family(spec.kind, n, seed, **p)[0]
    if spec.kind in ("logistic", "henon", "sine_map"):
        return gen_chaotic(spec.kind, n, seed, **p)
    if spec.kind == "sine":
        return gen_sine(n, seed=seed, **p)
    if spec.kind == "gbm":
        return gen_gbm(n, seed, **p)
    raise AssertionError(spec.kind)
