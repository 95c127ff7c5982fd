"""Weighted tail fits against the exponential target shapes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError


@dataclass(frozen=True)
class TailFit:
    slope: float
    intercept: float
    slope_stderr: float
    multiplier: str | None


def tail_fit(points, multiplier="1+z"):
    """Weighted least squares for log p = intercept + slope * z, optionally
    after removing a fixed polynomial multiplier from p.

    points: iterable of (z, p_hat, stderr_p) with p_hat > 0 at >= 3 distinct
    offsets.  multiplier "1+z" divides p by (1+z) before taking logs (the
    right-tail target shape), "z" divides by z, None fits the bare
    exponential.  Weights are inverse variances of log p.
    """
    rows = [(z, p, se) for (z, p, se) in points if p > 0]
    if len(rows) < 3 or len({z for z, _, _ in rows}) < 3:
        raise PreconditionError("need at least 3 grid points with p > 0")
    z = np.array([r[0] for r in rows])
    p = np.array([r[1] for r in rows])
    se = np.array([r[2] for r in rows])
    if multiplier == "1+z":
        y = np.log(p) - np.log1p(z)
    elif multiplier == "z":
        if np.any(z <= 0):
            raise PreconditionError("multiplier 'z' needs positive offsets")
        y = np.log(p) - np.log(z)
    elif multiplier is None:
        y = np.log(p)
    else:
        raise PreconditionError(f"unknown multiplier {multiplier!r}")
    se_log = np.where(se > 0, se / p, np.min(se[se > 0] / p[se > 0]) if np.any(se > 0) else 1.0)
    w = 1.0 / np.maximum(se_log, 1e-12) ** 2
    X = np.column_stack([np.ones_like(z), z])
    WX = X * w[:, None]
    xtwx = X.T @ WX
    beta = np.linalg.solve(xtwx, WX.T @ y)
    cov = np.linalg.inv(xtwx)
    dof = max(len(z) - 2, 1)
    resid = y - X @ beta
    scale = float((w * resid**2).sum() / dof)
    slope_se = math.sqrt(max(cov[1, 1], 0.0) * max(scale, 1.0))
    return TailFit(float(beta[1]), float(beta[0]), slope_se, multiplier)


def regression_slope(x, y):
    """Plain least-squares slope with its standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 3:
        raise PreconditionError("need at least 3 points")
    X = np.column_stack([np.ones_like(x), x])
    beta, res, _, _ = np.linalg.lstsq(X, y, rcond=None)
    dof = max(len(x) - 2, 1)
    sigma2 = float(res[0]) / dof if res.size else float(np.sum((y - X @ beta) ** 2)) / dof
    cov = sigma2 * np.linalg.inv(X.T @ X)
    return float(beta[1]), math.sqrt(max(cov[1, 1], 0.0))
