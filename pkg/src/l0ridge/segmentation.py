"""Least-squares segmentation with a first-difference L0 penalty.

The exact problem is

    min_mu  sum_i (y_i - mu_i)^2 + lam * #{i : mu_i != mu_{i+1}},

which adaptive ridge approaches through the weighted ridge loss

    SL(mu; lam, w) = sum_i (y_i - mu_i)^2 + lam * sum_i w_i (mu_{i+1} - mu_i)^2.

The ridge minimizer is computed in O(n) by writing ``mu_i = a_i + b_i mu_{i+1}``
and substituting forward; ``dp_exact_segment`` gives the exact optimum for
comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .core import ARConfig, ARResult, InvalidInputError, run_ar

MERGE_TOL = 1e-4
DEFAULT_SCALE = 6.0


@dataclass
class SegmentationFit:
    mu: np.ndarray
    breakpoints: np.ndarray
    criterion: float
    ar: Optional[ARResult] = None

    @property
    def n_segments(self) -> int:
        return len(self.breakpoints) + 1


def _check_signal(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise InvalidInputError("signal must be 1-d with at least two points")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("signal contains NaN or infinite values")
    return y


@njit(cache=True)
def _ridge_recursion(y, lw):
    n = y.shape[0]
    a = np.empty(n - 1)
    b = np.empty(n - 1)
    c = np.empty(n - 1)  # c_i = 1 - b_i, carried separately to avoid cancellation
    D = 1.0 + lw[0]
    a[0] = y[0] / D
    b[0] = lw[0] / D
    c[0] = 1.0 / D
    for i in range(1, n - 1):
        carry = lw[i - 1] * c[i - 1]
        D = 1.0 + lw[i] + carry
        a[i] = (y[i] + lw[i - 1] * a[i - 1]) / D
        b[i] = lw[i] / D
        c[i] = (1.0 + carry) / D
    mu = np.empty(n)
    mu[n - 1] = (y[n - 1] + lw[n - 2] * a[n - 2]) / (1.0 + lw[n - 2] * c[n - 2])
    for i in range(n - 2, -1, -1):
        mu[i] = a[i] + b[i] * mu[i + 1]
    return mu


def seg_ridge_solve(y, lam: float, w) -> np.ndarray:
    """Minimizer of the weighted ridge segmentation loss, in O(n)."""
    y = _check_signal(y)
    w = np.asarray(w, dtype=float)
    if w.shape != (y.size - 1,):
        raise InvalidInputError(f"need {y.size - 1} weights, got {w.shape}")
    if lam < 0 or np.any(w < 0):
        raise InvalidInputError("lam and weights must be non-negative")
    return _ridge_recursion(y, lam * w)


def stationarity_residual(y, lam: float, w, mu) -> np.ndarray:
    """Residual of the normal equations of the ridge loss at ``mu``."""
    y, mu, w = (np.asarray(v, dtype=float) for v in (y, mu, w))
    d = lam * w * np.diff(mu)
    r = y - mu
    r[:-1] += d
    r[1:] -= d
    return r


def breakpoints_of(mu, merge_tol: float = MERGE_TOL) -> np.ndarray:
    """Start indices (0-based) of every segment after the first.

    Equivalently the 1-based positions i with ``mu_i != mu_{i+1}``.
    """
    return np.flatnonzero(np.abs(np.diff(np.asarray(mu, dtype=float))) > merge_tol) + 1


def segment_means(y, breakpoints) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    edges = np.concatenate(([0], np.asarray(breakpoints, dtype=int), [y.size]))
    mu = np.empty_like(y)
    for s, e in zip(edges[:-1], edges[1:]):
        mu[s:e] = y[s:e].mean()
    return mu


def seg_criterion(y, mu, lam: float, merge_tol: float = MERGE_TOL) -> float:
    """``sum (y - mu)^2 + lam * #changes``; a change is ``|diff| > merge_tol``."""
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if y.shape != mu.shape:
        raise InvalidInputError("y and mu must have the same length")
    return float(np.sum((y - mu) ** 2) + lam * breakpoints_of(mu, merge_tol).size)


def ar_segment(y, lambda_tilde: float, config: Optional[ARConfig] = None, *,
               criterion_lambda: Optional[float] = None, scale: float = DEFAULT_SCALE,
               merge_tol: float = MERGE_TOL, warm: Optional[tuple] = None) -> SegmentationFit:
    """Adaptive ridge segmentation.

    The criterion is reported for ``criterion_lambda`` (default
    ``scale * lambda_tilde``) after refitting every detected segment by its
    mean. ``warm = (mu, w)`` restarts from a previous solution.
    """
    y = _check_signal(y)
    cfg = ARConfig(lambda_tilde=lambda_tilde) if config is None else replace(
        config, lambda_tilde=lambda_tilde)
    beta0 = None
    if warm is not None:
        beta0 = warm[0]
        cfg = replace(cfg, initial_weights=np.asarray(warm[1], dtype=float))

    def solver(w, _mu_prev):
        return _ridge_recursion(y, lambda_tilde * w)

    res = run_ar(solver, cfg, y.size, beta0=beta0, penalized=np.diff)
    bps = breakpoints_of(res.beta, merge_tol)
    mu = segment_means(y, bps)
    lam = scale * lambda_tilde if criterion_lambda is None else criterion_lambda
    return SegmentationFit(mu=mu, breakpoints=bps,
                           criterion=seg_criterion(y, mu, lam, merge_tol), ar=res)


def _cost_matrix(y):
    """``C[i, j]`` = squared error of y[i:j] around its mean (inf where j <= i)."""
    n = y.size
    s1 = np.concatenate(([0.0], np.cumsum(y)))
    s2 = np.concatenate(([0.0], np.cumsum(y * y)))
    i = np.arange(n + 1)[:, None]
    j = np.arange(n + 1)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        length = (j - i).astype(float)
        C = (s2[None, :] - s2[:, None]) - (s1[None, :] - s1[:, None]) ** 2 / length
    C = np.where(j > i, np.maximum(C, 0.0), np.inf)
    return C


def _segment_cost_row(s1, s2, j):
    i = np.arange(j)
    length = j - i
    return np.maximum((s2[j] - s2[i]) - (s1[j] - s1[i]) ** 2 / length, 0.0)


def dp_exact_segment(y, k_max: int, lam: float) -> SegmentationFit:
    """Exact minimizer of the penalized criterion with at most ``k_max`` segments.

    Dynamic programming over (number of segments, end position) in
    O(k_max n^2); when ``k_max >= n`` the segment count is unconstrained and
    the O(n^2) optimal-partitioning recursion is used instead. Ties go to
    fewer segments, then to earlier breakpoints.
    """
    y = _check_signal(y)
    n = y.size
    if not 1 <= k_max <= n:
        raise InvalidInputError(f"k_max must lie in [1, {n}]")
    yc = y - y.mean()
    if k_max >= n:
        bps = _optimal_partitioning(yc, lam)
    else:
        bps = _constrained_dp(yc, k_max, lam)
    mu = segment_means(y, bps)
    crit = float(np.sum((y - mu) ** 2) + lam * len(bps))
    return SegmentationFit(mu=mu, breakpoints=np.asarray(bps, dtype=int), criterion=crit)


def _optimal_partitioning(y, lam):
    n = y.size
    s1 = np.concatenate(([0.0], np.cumsum(y)))
    s2 = np.concatenate(([0.0], np.cumsum(y * y)))
    F = np.empty(n + 1)
    nseg = np.zeros(n + 1, dtype=np.int64)
    last = np.zeros(n + 1, dtype=np.int64)
    F[0] = -lam
    for j in range(1, n + 1):
        cand = F[:j] + _segment_cost_row(s1, s2, j) + lam
        best = cand.min()
        # among (numerically) tied predecessors prefer fewer segments
        ties = np.flatnonzero(cand <= best + 1e-12 * (1.0 + abs(best)))
        i = int(ties[np.argmin(nseg[ties])])
        F[j], last[j], nseg[j] = cand[i], i, nseg[i] + 1
    bps = []
    j = n
    while j > 0:
        i = int(last[j])
        if i > 0:
            bps.append(i)
        j = i
    return sorted(bps)


def _constrained_dp(y, k_max, lam):
    n = y.size
    C = _cost_matrix(y)
    cost = np.full((k_max + 1, n + 1), np.inf)
    arg = np.zeros((k_max + 1, n + 1), dtype=np.int64)
    cost[1] = C[0]
    for k in range(2, k_max + 1):
        tot = cost[k - 1][:, None] + C
        arg[k] = np.argmin(tot, axis=0)
        cost[k] = tot[arg[k], np.arange(n + 1)]
    pen = cost[1:, n] + lam * np.arange(k_max)
    k = int(np.argmin(pen)) + 1
    bps = []
    j = n
    while k > 1:
        i = int(arg[k, j])
        bps.append(i)
        j, k = i, k - 1
    return sorted(bps)


def calibrate_scale(signals: Sequence, lam: float, scales=None,
                    config: Optional[ARConfig] = None) -> dict:
    """Mean excess of the AR criterion over the exact one, per scale.

    For each signal the AR fits are warm-started along increasing
    ``lambda_tilde = lam / scale`` (i.e. decreasing scale). Returns a dict
    with the scales, the mean excess per scale and the best scale.
    """
    scales = np.asarray([12, 10, 8, 7, 6, 5, 4, 3] if scales is None else scales, dtype=float)
    order = np.argsort(-scales)
    excess = np.zeros(scales.size)
    for y in signals:
        y = _check_signal(y)
        exact = dp_exact_segment(y, y.size, lam).criterion
        warm = None
        for idx in order:
            fit = ar_segment(y, lam / scales[idx], config, criterion_lambda=lam, warm=warm)
            excess[idx] += fit.criterion - exact
            warm = (fit.ar.beta, fit.ar.weights)
    excess /= max(len(signals), 1)
    return {"scales": scales, "mean_excess": excess,
            "best_scale": float(scales[int(np.argmin(excess))])}


def default_lambda(n: int) -> float:
    """Penalty of the exact criterion, ``2 log n``."""
    return 2.0 * math.log(n)
