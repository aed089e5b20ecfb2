"""Newton-Raphson adaptive ridge for Poisson and logistic regression.

The weighted ridge log-likelihood is

    l(beta; lam, w) = loglik(beta) - 0.5 * lam * beta' diag(w) beta

(for Poisson the ``log y!`` constant is dropped). Every AR iteration takes
a single Newton step on it and then refreshes the weights, instead of
maximizing it to convergence first.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.special import expit, gammaln

from .core import (ARConfig, ARResult, InvalidInputError, NumericalError,
                   extract_support, update_weights_stable)

log = logging.getLogger(__name__)

POISSON = "poisson"
LOGISTIC = "logistic"
FAMILIES = (POISSON, LOGISTIC)

_PCLIP = 1e-12


@dataclass(frozen=True)
class GlmDataset:
    X: np.ndarray
    y: np.ndarray
    family: str

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.family not in FAMILIES:
            raise InvalidInputError(f"unknown family {self.family!r}")
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise InvalidInputError(f"incompatible shapes X {X.shape}, y {y.shape}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidInputError("data contain NaN or infinite values")
        if self.family == LOGISTIC and not np.all((y == 0) | (y == 1)):
            raise InvalidInputError("logistic responses must be 0 or 1")
        if self.family == POISSON and not (np.all(y >= 0) and np.all(y == np.round(y))):
            raise InvalidInputError("Poisson responses must be non-negative integers")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def subset(self, columns) -> "GlmDataset":
        return replace(self, X=self.X[:, np.asarray(columns, dtype=int)])


@dataclass
class PathPoint:
    lambda_tilde: float
    result: Optional[ARResult]
    bic: float
    error: Optional[str] = None


@dataclass
class RegularizationPath:
    points: list = field(default_factory=list)

    @property
    def best(self) -> PathPoint:
        """Path point with the smallest refit BIC (first one on ties)."""
        ok = [pt for pt in self.points if pt.result is not None]
        if not ok:
            raise NumericalError("every point of the path failed")
        return min(ok, key=lambda pt: pt.bic)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


def _eta(data, beta):
    return data.X @ beta


def loglik(data: GlmDataset, beta) -> float:
    """Full log-likelihood (Poisson includes the ``-log y!`` term)."""
    eta = _eta(data, np.asarray(beta, dtype=float))
    y = data.y
    if data.family == POISSON:
        with np.errstate(over="ignore"):
            return float(y @ eta - np.sum(np.exp(eta)) - np.sum(gammaln(y + 1)))
    # log pi = -log(1+e^-eta), log(1-pi) = -log(1+e^eta)
    return float(-np.sum(y * np.logaddexp(0, -eta) + (1 - y) * np.logaddexp(0, eta)))


def penalized_loglik(data: GlmDataset, beta, lambda_tilde: float, w) -> float:
    """Weighted ridge penalized log-likelihood.

    Poisson: ``beta'X'y - u'mu - lam/2 beta'Wbeta`` (no ``log y!``).
    Logistic: ``sum (1-y) log(1-pi) + y log(pi) - lam/2 beta'Wbeta`` with pi
    clipped to [1e-12, 1 - 1e-12]; a fitted probability that rounds to 0 or
    1 against the observed label therefore gives a large finite penalty
    instead of ``-inf``.
    """
    beta = np.asarray(beta, dtype=float)
    w = np.asarray(w, dtype=float)
    if beta.shape != (data.p,) or w.shape != (data.p,):
        raise InvalidInputError("beta and w must have one entry per column")
    pen = 0.5 * lambda_tilde * float(beta @ (w * beta))
    eta = _eta(data, beta)
    if data.family == POISSON:
        with np.errstate(over="ignore"):
            return float(data.y @ eta - np.sum(np.exp(eta))) - pen
    pi = np.clip(expit(eta), _PCLIP, 1 - _PCLIP)
    y = data.y
    return float(np.sum((1 - y) * np.log1p(-pi) + y * np.log(pi))) - pen


def grad_hess(data: GlmDataset, beta, lambda_tilde: float, w):
    """Gradient and Hessian of :func:`penalized_loglik` (unclipped)."""
    beta = np.asarray(beta, dtype=float)
    w = np.asarray(w, dtype=float)
    X, y = data.X, data.y
    eta = X @ beta
    if data.family == POISSON:
        mu = np.exp(eta)
        resid, v = y - mu, mu
    else:
        pi = expit(eta)
        # (1 - pi) y - (1 - y) pi == y - pi
        resid, v = y - pi, pi * (1 - pi)
    g = X.T @ resid - lambda_tilde * w * beta
    H = -(X.T @ (v[:, None] * X))
    H[np.diag_indices_from(H)] -= lambda_tilde * w
    return g, H


def _newton_direction(g, H, k):
    try:
        c = linalg.cho_factor(-H, check_finite=False)
        return linalg.cho_solve(c, g, check_finite=False)
    except linalg.LinAlgError:
        try:
            return linalg.solve(-H, g, assume_a="sym", check_finite=False)
        except linalg.LinAlgError as exc:
            raise NumericalError(f"singular Hessian at iteration {k}: {exc}") from None


def _newton_step(data, beta, lam, w, k, safeguard=True):
    g, H = grad_hess(data, beta, lam, w)
    step = _newton_direction(g, H, k)
    if not safeguard:
        return beta + step
    f0 = -penalized_loglik(data, beta, lam, w)
    t = 1.0
    for _ in range(31):
        cand = beta + t * step
        f1 = -penalized_loglik(data, cand, lam, w)
        if np.isfinite(f1) and f1 <= f0 + 1e-8:
            return cand
        t *= 0.5
    log.debug("step halving exhausted at iteration %d", k)
    return beta + t * step


def nr_ar(data: GlmDataset, config: ARConfig, warm: Optional[tuple] = None, *,
          safeguard: bool = True, inner_iter: int = 1) -> ARResult:
    """Newton-Raphson adaptive ridge.

    Starts from ``beta = 0, w = 1`` (or ``warm = (beta, w)``), then repeats
    one Newton step on the weighted problem followed by a weight update.
    ``inner_iter > 1`` takes that many Newton steps per weight update.
    Converged requires a step below ``conv_tol`` and a small gradient of the
    final weighted problem.
    """
    p = data.p
    if warm is not None:
        beta = np.array(warm[0], dtype=float)
        w = np.array(warm[1], dtype=float)
    else:
        beta = np.zeros(p)
        w = np.ones(p) if config.initial_weights is None else config.initial_weights.copy()
    if beta.shape != (p,) or w.shape != (p,):
        raise InvalidInputError("warm start has wrong dimensions")
    free = w == 0.0
    lam = config.lambda_tilde
    gtol = 1e-6 * (1.0 + float(np.max(np.abs(data.X.T @ data.y)))) if p else 0.0

    converged = False
    k = 0
    for k in range(1, config.max_iter + 1):
        new = beta
        for _ in range(inner_iter):
            new = _newton_step(data, new, lam, w, k, safeguard)
        if not np.all(np.isfinite(new)):
            raise NumericalError(f"non-finite coefficients at iteration {k}")
        step = float(np.max(np.abs(new - beta))) if p else 0.0
        beta = new
        w_old = w
        w = update_weights_stable(beta, config)
        w[free] = 0.0
        if step < config.conv_tol:
            g, _ = grad_hess(data, beta, lam, w_old)
            converged = bool(np.max(np.abs(g), initial=0.0) < gtol)
            if converged:
                break
    return ARResult(beta=beta, weights=w,
                    support=extract_support(beta, config.selection_threshold),
                    iterations=k, converged=converged)


def fit_ml(data: GlmDataset, support: Optional[Sequence[int]] = None,
           beta0=None, max_iter: int = 100, tol: float = 1e-10) -> tuple[np.ndarray, float]:
    """Unpenalized maximum likelihood on ``support``: (coefficients, loglik).

    Damped Newton iterations; for separated logistic data the likelihood has
    no maximizer and the iterate after ``max_iter`` steps is returned.
    """
    if support is not None:
        support = np.asarray(support, dtype=int)
        data = data.subset(support)
    p = data.p
    if p == 0:
        return np.zeros(0), loglik(data, np.zeros(0))
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=float)
    zeros = np.zeros(p)
    f = -penalized_loglik(data, beta, 0.0, zeros)
    for k in range(max_iter):
        g, H = grad_hess(data, beta, 0.0, zeros)
        step = _newton_direction(g, H, k)
        t = 1.0
        for _ in range(40):
            cand = beta + t * step
            fc = -penalized_loglik(data, cand, 0.0, zeros)
            if np.isfinite(fc) and fc <= f + 1e-12 * (1 + abs(f)):
                break
            t *= 0.5
        delta = float(np.max(np.abs(cand - beta)))
        beta, f = cand, fc
        if delta < tol * (1 + float(np.max(np.abs(beta)))):
            break
    return beta, loglik(data, beta)


def bic(data: GlmDataset, support, lam: Optional[float] = None, beta0=None) -> float:
    """``-2 loglik(beta_M) + lam * |M|`` at the ML refit (lam defaults to log n)."""
    lam = math.log(data.n) if lam is None else lam
    support = np.asarray(support, dtype=int)
    _, ll = fit_ml(data, support, beta0=beta0)
    return -2.0 * ll + lam * support.size


def default_grid(n: int, num: int = 50) -> np.ndarray:
    """Log-spaced grid from 1e-4 log(n) to 2 log(n)."""
    return np.geomspace(1e-4 * math.log(n), 2 * math.log(n), num)


def regularization_path(data: GlmDataset, grid=None, config: Optional[ARConfig] = None,
                        criterion_lambda: Optional[float] = None, *,
                        warm_start: bool = True, safeguard: bool = True) -> RegularizationPath:
    """Adaptive ridge fits along an increasing penalty grid.

    Each point starts from the previous point's coefficients and weights.
    Every point is scored by the refit criterion (BIC by default); a point
    whose fit fails is recorded with its error and the path continues from
    the last good state.
    """
    grid = default_grid(data.n) if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidInputError("grid must be a non-empty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise InvalidInputError("grid must be strictly increasing")
    base = config if config is not None else ARConfig(lambda_tilde=float(grid[0]))
    path = RegularizationPath()
    warm = None
    for lt in grid:
        cfg = replace(base, lambda_tilde=float(lt))
        try:
            res = nr_ar(data, cfg, warm if warm_start else None, safeguard=safeguard)
            score = bic(data, res.support, criterion_lambda)
        except (NumericalError, np.linalg.LinAlgError) as exc:
            log.warning("path point lambda_tilde=%g failed: %s", lt, exc)
            path.points.append(PathPoint(float(lt), None, math.inf, str(exc)))
            continue
        path.points.append(PathPoint(float(lt), res, score))
        warm = (res.beta, res.weights)
    return path
