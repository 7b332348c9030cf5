"""Delay-coordinate reconstruction and the usual delay/dimension diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

__all__ = [
    "EmbeddingConfig",
    "TrajectoryMatrix",
    "FNNResult",
    "acf_first_zero",
    "ami",
    "ami_first_min",
    "fnn",
    "fnn_sweep",
    "reconstruct_mod",
    "reconstruct_ssa",
    "nearest_neighbours",
]


@dataclass(frozen=True)
class EmbeddingConfig:
    tau: int = 1
    m: int = 2
    method: str = "MOD"
    p: int | None = None

    def __post_init__(self):
        if self.tau < 1 or self.m < 1:
            raise ValueError("tau and m must be >= 1")
        if self.method not in ("MOD", "SSA"):
            raise ValueError("method must be MOD or SSA")
        if self.method == "SSA" and (self.p is None or self.m > self.p):
            raise ValueError("SSA needs p >= m")


@dataclass(frozen=True)
class TrajectoryMatrix:
    rows: np.ndarray
    method: str = "MOD"
    tau: int = 1
    m: int = 1

    @property
    def M(self) -> int:
        return self.rows.shape[0]


@dataclass
class FNNResult:
    m_star: int | None
    fractions: dict
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"m_star": self.m_star, "fractions": {str(k): v for k, v in self.fractions.items()},
                "flags": self.flags}


def _arr(x) -> np.ndarray:
    return np.asarray(getattr(x, "values", x), dtype=float)


def acf_first_zero(series, max_frac: float = 0.25, tol: float = 1e-10):
    """First lag at which the sample autocorrelation reaches zero.

    Returns ``(tau, status)``: ``status`` is ``"ok"`` or ``"none"`` when the
    ACF stays positive up to ``max_frac * N`` (``tau`` is then None).
    Values with ``C(tau)/C(0) <= tol`` count as zero.
    """
    x = _arr(series)
    n = len(x)
    if n < 20:
        raise ValueError("need at least 20 samples")
    xc = x - x.mean()
    c0 = np.dot(xc, xc)
    if c0 == 0:
        raise ValueError("constant series: autocorrelation undefined")
    for k in range(1, int(n * max_frac) + 1):
        if np.dot(xc[:-k], xc[k:]) / c0 <= tol:
            return k, "ok"
    return None, "none"


def _mi_bits(a: np.ndarray, b: np.ndarray, edges: np.ndarray) -> float:
    nb = len(edges) - 1
    ia = np.clip(np.searchsorted(edges, a, side="right") - 1, 0, nb - 1)
    ib = np.clip(np.searchsorted(edges, b, side="right") - 1, 0, nb - 1)
    joint = np.zeros((nb, nb))
    np.add.at(joint, (ia, ib), 1.0)
    # marginals from integer counts so both argument orders round identically
    pa, pb = joint.sum(axis=1) / len(a), joint.sum(axis=0) / len(a)
    joint /= len(a)
    i, j = np.nonzero(joint)
    terms = joint[i, j] * np.log2(joint[i, j] / (pa[i] * pb[j]))
    # exactly rounded sum, so swapping the two arguments gives the identical value
    return max(math.fsum(terms.tolist()), 0.0)


def _edges(x: np.ndarray, bins: int | None) -> np.ndarray:
    if bins is None:
        bins = int(math.ceil(len(x) ** (1.0 / 3.0)))
    if bins < 4:
        raise ValueError("bins must be >= 4")
    lo, hi = x.min(), x.max()
    if lo == hi:
        hi = lo + 1.0
    return np.linspace(lo, hi, bins + 1)


def ami(series, max_tau: int = 20, bins: int | None = None) -> np.ndarray:
    """Average mutual information ``I(tau)`` in bits for ``tau = 0..max_tau``.

    Equal-width histogram (default ``ceil(N**(1/3))`` bins) over the range
    of the whole series, shared by both coordinates.
    """
    x = _arr(series)
    if len(x) < 200:
        raise ValueError("AMI needs at least 200 samples")
    edges = _edges(x, bins)
    out = np.empty(max_tau + 1)
    for t in range(max_tau + 1):
        out[t] = _mi_bits(x[: len(x) - t], x[t:], edges)
    return out


def ami_pair(a, b, bins: int | None = None) -> float:
    """Mutual information (bits) between two aligned samples."""
    a, b = _arr(a), _arr(b)
    return _mi_bits(a, b, _edges(np.concatenate([a, b]), bins))


def ami_first_min(series, max_tau: int = 20, bins: int | None = None, plateau_rtol: float = 0.005):
    """First minimum of :func:`ami`.

    The descent ends at the first ``tau`` where the next value no longer
    drops by more than ``plateau_rtol`` (relative). Histogram estimates of
    smooth signals often have a flat bottom there; the reported ``tau_star``
    is the middle of the run of values within ``plateau_rtol`` of that
    point. Returns ``(tau_star, flag, curve)`` with ``flag`` ``"ok"`` or
    ``"no-minimum"`` (``tau_star = max_tau``) when the curve keeps falling.
    """
    I = ami(series, max_tau, bins)
    for t in range(1, max_tau):
        if I[t + 1] >= I[t] * (1.0 - plateau_rtol):
            end = t
            while end + 1 <= max_tau and I[end + 1] <= I[t] * (1.0 + plateau_rtol):
                end += 1
            if end == max_tau and end > t:
                end = t
            return (t + end) // 2, "ok", I
    return max_tau, "no-minimum", I


def reconstruct_mod(series, tau: int, m: int) -> TrajectoryMatrix:
    """Method-of-delays matrix; row ``i`` is ``[s_i, s_{i+tau}, ..., s_{i+(m-1)tau}]``."""
    x = _arr(series)
    if tau < 1 or m < 1:
        raise ValueError("tau and m must be >= 1")
    M = len(x) - (m - 1) * tau
    if M < 1:
        raise ValueError("series too short for this (tau, m)")
    rows = np.column_stack([x[j * tau: j * tau + M] for j in range(m)])
    return TrajectoryMatrix(rows, "MOD", tau, m)


def reconstruct_ssa(series, p: int, m: int):
    """Singular-spectrum reconstruction.

    The mean-removed series is delay-embedded in ``p`` dimensions (lag 1)
    and projected on its first ``m`` right singular vectors.

    Returns
    -------
    (TrajectoryMatrix, singular_values)
    """
    x = _arr(series)
    if m > p:
        raise ValueError("m must not exceed p")
    if len(x) < 2 * p:
        raise ValueError("need N >= 2p")
    X = reconstruct_mod(x - x.mean(), 1, p).rows
    _, s, vt = np.linalg.svd(X, full_matrices=False)
    return TrajectoryMatrix(X @ vt[:m].T, "SSA", 1, m), s


@numba.njit(cache=True)
def _nn_search(Y, exclude, skip_zero):
    # brute-force nearest neighbour; ties keep the smaller index
    M, d = Y.shape
    idx = np.full(M, -1, np.int64)
    dist = np.full(M, np.inf)
    for i in range(M):
        best = np.inf
        bj = -1
        for j in range(M):
            if abs(i - j) <= exclude:
                continue
            s = 0.0
            for k in range(d):
                diff = Y[i, k] - Y[j, k]
                s += diff * diff
            if skip_zero and s == 0.0:
                continue
            if s < best:
                best = s
                bj = j
        idx[i] = bj
        dist[i] = np.sqrt(best) if bj >= 0 else np.inf
    return idx, dist


def nearest_neighbours(rows: np.ndarray, exclude: int = 0, skip_zero: bool = True):
    """Euclidean nearest neighbour of each row outside ``|i - j| <= exclude``."""
    return _nn_search(np.ascontiguousarray(rows, dtype=float), int(exclude), bool(skip_zero))


def fnn(series, tau: int = 1, max_m: int = 10, rtol: float = 15.0, atol: float = 2.0,
        threshold: float = 0.01) -> FNNResult:
    """False-nearest-neighbour fractions for ``m = 1..max_m`` (Kennel criteria).

    A neighbour is false in dimension ``m`` when the extra coordinate
    separates the pair by more than ``rtol`` times the ``m``-dim distance,
    or when the ``m+1``-dim distance exceeds ``atol`` times the series
    st.dev. ``m_star`` is the first ``m`` with fraction below ``threshold``.
    """
    x = _arr(series)
    if len(x) < 500:
        raise ValueError("FNN needs at least 500 samples")
    ra = x.std()
    if ra == 0:
        raise ValueError("constant series")
    fracs = {}
    m_star = None
    for m in range(1, max_m + 1):
        M = len(x) - m * tau
        if M < 20:
            raise ValueError(f"too few points to search neighbours at m={m}")
        Y = reconstruct_mod(x, tau, m).rows[:M]
        idx, d = nearest_neighbours(Y, 0, True)
        ok = idx >= 0
        i = np.flatnonzero(ok)
        j = idx[ok]
        extra = np.abs(x[i + m * tau] - x[j + m * tau])
        dm = d[ok]
        d1 = np.sqrt(dm ** 2 + extra ** 2)
        false = (extra / dm > rtol) | (d1 / ra > atol)
        fracs[m] = float(false.mean()) if len(i) else float("nan")
        if m_star is None and fracs[m] < threshold:
            m_star = m
    flags = {"noise_dominated": m_star is None, "rtol": rtol, "atol": atol, "threshold": threshold}
    return FNNResult(m_star, fracs, flags)


def fnn_sweep(series, taus=(1, 2, 3, 4, 5), max_m: int = 10, **kw) -> dict:
    """``m_star`` as a function of the delay."""
    return {int(t): fnn(series, int(t), max_m, **kw).m_star for t in taus}
