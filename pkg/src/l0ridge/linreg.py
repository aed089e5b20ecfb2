"""Adaptive ridge for linear regression with known error variance.

Regressors are centered and scaled so that ``X_j' X_j = n`` and the
response is centered; models carry no intercept on that scale.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .core import ARConfig, ARResult, InvalidInputError, NumericalError, run_ar

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dataset:
    """Standardized design and response plus what is needed to undo it."""

    X: np.ndarray
    y: np.ndarray
    sigma2: float = 1.0
    x_center: Optional[np.ndarray] = None
    x_scale: Optional[np.ndarray] = None
    y_center: float = 0.0

    def __post_init__(self):
        if self.X.ndim != 2 or self.y.ndim != 1 or self.X.shape[0] != self.y.shape[0]:
            raise InvalidInputError(
                f"incompatible shapes X {self.X.shape}, y {self.y.shape}")
        if not self.sigma2 > 0:
            raise InvalidInputError(f"sigma2 must be positive, got {self.sigma2}")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def subset(self, columns) -> "Dataset":
        columns = np.asarray(columns, dtype=int)
        return replace(
            self, X=self.X[:, columns],
            x_center=None if self.x_center is None else self.x_center[columns],
            x_scale=None if self.x_scale is None else self.x_scale[columns])

    def with_sigma2(self, sigma2: float) -> "Dataset":
        return replace(self, sigma2=float(sigma2))

    def to_raw_scale(self, beta) -> tuple[float, np.ndarray]:
        """Return ``(intercept, slopes)`` on the original measurement scale."""
        beta = np.asarray(beta, dtype=float)
        scale = np.ones(self.p) if self.x_scale is None else self.x_scale
        center = np.zeros(self.p) if self.x_center is None else self.x_center
        slopes = beta / scale
        return float(self.y_center - center @ slopes), slopes


@dataclass
class ModelFit:
    support: np.ndarray
    beta_ml: np.ndarray
    criterion: float
    notes: list = field(default_factory=list)


def standardize(X_raw, y_raw, sigma2: float = 1.0) -> Dataset:
    """Center every column, scale it to ``X_j' X_j = n``, center the response."""
    X_raw = np.asarray(X_raw, dtype=float)
    y_raw = np.asarray(y_raw, dtype=float)
    if X_raw.ndim == 1:
        X_raw = X_raw[:, None]
    n = X_raw.shape[0]
    if n < 2:
        raise InvalidInputError("need at least two observations")
    if y_raw.shape != (n,):
        raise InvalidInputError(f"response has shape {y_raw.shape}, expected ({n},)")
    if not (np.all(np.isfinite(X_raw)) and np.all(np.isfinite(y_raw))):
        raise InvalidInputError("data contain NaN or infinite values")
    center = X_raw.mean(axis=0)
    Xc = X_raw - center
    scale = np.sqrt(np.sum(Xc ** 2, axis=0) / n)
    # relative check, so that tiny-but-genuine columns survive
    flat = scale <= 1e-12 * np.maximum(1.0, np.abs(center))
    if np.any(flat):
        raise InvalidInputError(
            f"column {int(np.flatnonzero(flat)[0])} has zero variance")
    y_center = float(y_raw.mean())
    return Dataset(X=Xc / scale, y=y_raw - y_center, sigma2=float(sigma2),
                   x_center=center, x_scale=scale, y_center=y_center)


def estimate_sigma2(data: Dataset) -> float:
    """Residual variance of the full least-squares fit, RSS / (n - p - 1).

    One degree of freedom is charged for the centering. Never used
    implicitly; call it and pass the result to :meth:`Dataset.with_sigma2`.
    """
    n, p = data.X.shape
    if p >= n - 1:
        raise InvalidInputError("variance estimate needs p < n - 1")
    beta, *_ = np.linalg.lstsq(data.X, data.y, rcond=None)
    r = data.y - data.X @ beta
    return float(r @ r / (n - p - 1))


def _spd_solve(A, b):
    try:
        c = linalg.cho_factor(A, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"weighted ridge system is singular: {exc}") from None
    return linalg.cho_solve(c, b, check_finite=False)


def weighted_ridge_solve(data: Dataset, lambda_tilde: float, w,
                         gram: Optional[np.ndarray] = None,
                         xty: Optional[np.ndarray] = None) -> np.ndarray:
    """Solve ``(X'X + lambda_tilde * sigma2 * diag(w)) beta = X'y``."""
    G = data.X.T @ data.X if gram is None else gram
    b = data.X.T @ data.y if xty is None else xty
    A = G + np.diag(lambda_tilde * data.sigma2 * np.asarray(w, dtype=float))
    return _spd_solve(A, b)


def ols(data: Dataset) -> np.ndarray:
    return weighted_ridge_solve(data, 0.0, np.zeros(data.p))


def ar_linear(data: Dataset, config: ARConfig, *, keep_trace: bool = False,
              check_bound: bool = False, callback=None) -> ARResult:
    """Adaptive ridge with the closed-form weighted ridge solver.

    With ``check_bound`` every iterate's Euclidean norm is compared against
    the OLS norm; violations (iteration, norm, bound) are logged and stored
    in ``result.info["bound_violations"]``.
    """
    G = data.X.T @ data.X
    b = data.X.T @ data.y
    scale = config.lambda_tilde * data.sigma2

    def solver(w, _beta_prev):
        return _spd_solve(G + np.diag(scale * w), b)

    violations = []
    hook = callback
    if check_bound:
        bound = float(np.linalg.norm(_spd_solve(G, b)))

        def hook(k, beta, w):
            nb = float(np.linalg.norm(beta))
            if nb > bound * (1 + 1e-12):
                violations.append((k, nb, bound))
                log.debug("iterate %d norm %.6g exceeds OLS norm %.6g", k, nb, bound)
            if callback is not None:
                callback(k, beta, w)

    res = run_ar(solver, config, data.p, keep_trace=keep_trace, callback=hook)
    if check_bound:
        res.info["bound_violations"] = violations
    return res


def rss(data: Dataset, support) -> tuple[float, np.ndarray]:
    """Least-squares fit restricted to ``support``: (RSS, coefficients)."""
    support = np.asarray(support, dtype=int)
    if support.size == 0:
        return float(data.y @ data.y), np.zeros(0)
    Xm = data.X[:, support]
    if np.linalg.matrix_rank(Xm) < support.size:
        raise NumericalError(f"design restricted to {support.tolist()} is rank deficient")
    beta, *_ = np.linalg.lstsq(Xm, data.y, rcond=None)
    r = data.y - Xm @ beta
    return float(r @ r), beta


def l0_criterion(data: Dataset, support: Sequence[int], lam: float) -> ModelFit:
    """``RSS(beta_M) / sigma2 + lam * |M|`` at the least-squares fit on M."""
    support = np.unique(np.asarray(support, dtype=int))
    if support.size and (support.min() < 0 or support.max() >= data.p):
        raise InvalidInputError("support indices out of range")
    if support.size > data.n:
        raise InvalidInputError("support larger than the sample size")
    r, beta = rss(data, support)
    return ModelFit(support=support, beta_ml=beta,
                    criterion=r / data.sigma2 + lam * support.size)
