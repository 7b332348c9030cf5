"""BDS test of the i.i.d. null from correlation integrals.

Pair counts are exact integers obtained by walking each diagonal of the
``N x N`` closeness matrix once and recording runs of consecutive close
pairs; an ``m``-history pair is close iff the run starting at it has
length ``>= m``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.stats import norm as _normal

__all__ = ["BDSResult", "correlation_integral", "k_statistic", "bds_test", "bds_variance"]


def _arr(x) -> np.ndarray:
    return np.asarray(getattr(x, "values", x), dtype=float)


@numba.njit(cache=True)
def _pair_dist(a, b, use_max):
    s = 0.0
    for k in range(a.shape[0]):
        d = abs(a[k] - b[k])
        if use_max:
            if d > s:
                s = d
        else:
            s += d * d
    return s if use_max else np.sqrt(s)


@numba.njit(cache=True)
def _count_pairs(rows, eps, use_max):
    M = rows.shape[0]
    c = 0
    for i in range(M):
        for j in range(i + 1, M):
            if _pair_dist(rows[i], rows[j], use_max) < eps:
                c += 1
    return c


@numba.njit(cache=True)
def _neighbour_counts(rows, eps, use_max):
    M = rows.shape[0]
    c = np.zeros(M, np.int64)
    for i in range(M):
        for j in range(i + 1, M):
            if _pair_dist(rows[i], rows[j], use_max) < eps:
                c[i] += 1
                c[j] += 1
    return c


def _rows(x) -> np.ndarray:
    rows = getattr(x, "rows", x)
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[:, None]
    return np.ascontiguousarray(rows)


def correlation_integral(matrix, epsilon: float, norm: str = "max") -> float:
    """Fraction of row pairs ``i < j`` closer than ``epsilon`` (strict)."""
    rows = _rows(matrix)
    M = rows.shape[0]
    if M < 2:
        raise ValueError("need at least two rows")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return 2.0 * _count_pairs(rows, float(epsilon), norm == "max") / (M * (M - 1))


def k_statistic(series, epsilon: float, norm: str = "max") -> float:
    """Triple statistic: fraction of ordered triples ``(i, j, k)`` with
    ``j`` close to both ``i`` and ``k`` (all indices distinct).

    Equals ``sum_j c_j (c_j - 1) / (N (N-1) (N-2))`` where ``c_j`` is the
    number of neighbours of ``j``.
    """
    rows = _rows(series)
    N = rows.shape[0]
    if N < 3:
        raise ValueError("need at least three points")
    c = _neighbour_counts(rows, float(epsilon), norm == "max").astype(float)
    return float(np.sum(c * (c - 1)) / (N * (N - 1.0) * (N - 2.0)))


@numba.njit(cache=True)
def _bds_counts(x, eps, m_max):
    # runs[m] = number of close m-history pairs (m = 1..m_max)
    # fwd[i]  = number of j > i with |x_i - x_j| < eps
    # nb[i]   = number of j != i with |x_i - x_j| < eps
    N = x.shape[0]
    runs = np.zeros(m_max + 1, np.int64)
    fwd = np.zeros(N, np.int64)
    nb = np.zeros(N, np.int64)
    for d in range(1, N):
        r = 0
        for i in range(N - 1 - d, -1, -1):
            if abs(x[i] - x[i + d]) < eps:
                r += 1
                fwd[i] += 1
                nb[i] += 1
                nb[i + d] += 1
            else:
                r = 0
            k = r if r < m_max else m_max
            for m in range(1, k + 1):
                runs[m] += 1
    return runs, fwd, nb


def bds_variance(c: float, k: float, m: int) -> float:
    """Asymptotic variance of ``sqrt(n) (C_m - C_1^m)`` under i.i.d."""
    s = sum(k ** (m - j) * c ** (2 * j) for j in range(1, m))
    return 4.0 * (k ** m + 2.0 * s + (m - 1) ** 2 * c ** (2 * m) - m ** 2 * k * c ** (2 * m - 2))


@dataclass
class BDSResult:
    records: dict
    epsilon: float
    N: int
    eps_multiple: float | None = None
    norm: str = "max"
    extra: dict = field(default_factory=dict)

    def W(self, m: int) -> float:
        return self.records[m]["W"]

    def p_value(self, m: int) -> float:
        return self.records[m]["p_value"]

    def rejects(self, alpha: float = 0.05) -> bool:
        """True when any dimension rejects at level ``alpha``."""
        return any(r["p_value"] < alpha for r in self.records.values())

    def to_dict(self) -> dict:
        def f(v):
            if isinstance(v, (np.floating, np.integer)):
                v = v.item()
            if isinstance(v, float) and not np.isfinite(v):
                return None
            return v
        return {
            "N": self.N, "epsilon": f(self.epsilon), "eps_multiple": self.eps_multiple,
            "norm": self.norm,
            "dimensions": [{"m": m, **{k: f(v) for k, v in r.items()}} for m, r in sorted(self.records.items())],
            **{k: f(v) for k, v in self.extra.items()},
        }


def bds_test(series, m_max: int = 6, eps_multiple: float = 0.5, eps: float | None = None,
             norm: str = "max") -> BDSResult:
    """BDS statistic ``W = sqrt(n) (C_m - C_1^m) / sigma`` for ``m = 2..m_max``.

    Parameters
    ----------
    series : array_like
    m_max : int
        Largest embedding dimension (delay 1).
    eps_multiple : float
        ``epsilon`` as a multiple of the sample st.dev. (ddof=1).
    eps : float, optional
        Absolute ``epsilon``; overrides ``eps_multiple``.
    norm : {"max", "euclidean"}
        Only the max norm permits the fast diagonal pair count; the
        Euclidean norm falls back to explicit ``m``-history distances.

    Notes
    -----
    For dimension ``m`` there are ``n = N - m + 1`` histories. ``C_m`` is
    the fraction of close history pairs and ``C_1`` is computed on the
    last ``n`` observations so both use the same sample span. The
    variance uses ``C_1`` and ``K`` from the full sample. ``p`` is
    two-sided against the standard normal.
    """
    x = _arr(series)
    N = len(x)
    if m_max < 2:
        raise ValueError("m_max must be >= 2")
    if N < m_max + 3:
        raise ValueError("series too short")
    sd = x.std(ddof=1)
    if sd == 0:
        raise ValueError("zero-variance series")
    epsilon = float(eps) if eps is not None else float(eps_multiple * sd)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    runs, fwd, nb = _bds_counts(x, epsilon, m_max)
    if norm != "max":
        for m in range(2, m_max + 1):
            rows = np.column_stack([x[j:N - m + 1 + j] for j in range(m)])
            runs[m] = _count_pairs(rows, epsilon, False)
    nbf = nb.astype(float)
    c1_full = runs[1] / (N * (N - 1) / 2.0)
    k_full = float(np.sum(nbf * (nbf - 1)) / (N * (N - 1.0) * (N - 2.0)))
    records = {}
    cum_fwd = np.concatenate([[0], np.cumsum(fwd)])
    for m in range(2, m_max + 1):
        n = N - m + 1
        npairs = n * (n - 1) / 2.0
        cm = runs[m] / npairs
        c1_tail_pairs = runs[1] - cum_fwd[m - 1]
        c1 = c1_tail_pairs / npairs
        stat = cm - c1 ** m
        var = bds_variance(c1_full, k_full, m)
        sigma = np.sqrt(var) if var > 0 else float("nan")
        W = np.sqrt(n) * stat / sigma
        p = float(2.0 * _normal.sf(abs(W))) if np.isfinite(W) else float("nan")
        records[m] = {
            "W": float(W), "p_value": p, "bds_statistic": float(stat), "C_m": float(cm),
            "C_1": float(c1), "C_1^m": float(c1 ** m), "sigma_hat": float(sigma),
            "std_error": float(sigma / np.sqrt(n)), "pairs_m": int(runs[m]),
            "pairs_1": int(c1_tail_pairs), "n": int(n),
        }
    self_pairs = float(2 * runs[1] + N)
    triples = float(np.sum((nbf + 1.0) ** 2))
    extra = {
        "C1_full": float(c1_full), "K": k_full,
        "pairs_within_eps": self_pairs, "V_pairs": self_pairs / N ** 2,
        "triples_within_eps": triples, "V_triples": triples / float(N) ** 3,
    }
    return BDSResult(records, epsilon, N, None if eps is not None else eps_multiple, norm, extra)
