"""Small least-squares helpers shared by the scaling estimators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    stderr: float
    r2: float


def ols_line(x, y) -> LineFit:
    """Ordinary least-squares line ``y = a + b x`` with slope standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < 2:
        raise ValueError("need at least two points for a line fit")
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0:
        raise ValueError("degenerate regressor (all x equal)")
    slope = np.sum((x - xm) * (y - ym)) / sxx
    intercept = ym - slope * xm
    resid = y - intercept - slope * x
    sse = float(np.sum(resid ** 2))
    syy = float(np.sum((y - ym) ** 2))
    r2 = 1.0 - sse / syy if syy > 0 else 1.0
    stderr = np.sqrt(sse / (n - 2) / sxx) if n > 2 else float("nan")
    return LineFit(float(slope), float(intercept), float(stderr), float(min(max(r2, 0.0), 1.0)))
