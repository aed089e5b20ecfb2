"""Model-agnostic adaptive ridge machinery.

The adaptive ridge (AR) iteration alternates a weighted ridge solve

    beta^(k) = argmin C(beta) + lambda * sum_j w_j^(k-1) * beta_j^2

with the component-wise weight update

    w_j^(k) = (|beta_j^(k)|^gamma + delta^gamma)^((q - 2) / gamma)

so that the quadratic penalty approaches an L_q penalty (an L0 penalty for
q = 0). Backends (linear regression, GLMs, segmentation) provide the
weighted ridge solver; this module owns the weights and the driver loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

DEFAULT_SELECTION_THRESHOLD = 1e-3

# smallest positive double, used instead of an underflowed zero weight
_TINY = float(np.nextafter(0.0, 1.0))


class InvalidInputError(ValueError):
    """Raised when inputs violate a documented precondition."""


class NumericalError(ArithmeticError):
    """Raised when a linear system cannot be solved reliably."""


@dataclass(frozen=True)
class ARConfig:
    """Hyperparameters of the adaptive ridge iteration.

    Attributes
    ----------
    lambda_tilde : float
        AR penalty, >= 0.
    q : float
        Target penalty exponent, 0 <= q <= 2. q = 2 is plain ridge.
    gamma : float
        Sharpness of the L_q approximation.
    delta : float
        Relevance scale: coefficients much smaller than delta are shrunk
        to (numerical) zero.
    max_iter : int
    conv_tol : float
        Stop once the max-norm change of the coefficients drops below this.
    initial_weights : array or None
        Starting weights; None means all ones. A zero weight leaves the
        coefficient unpenalized for the whole run.
    selection_threshold : float
        Cutoff used to turn the converged coefficients into a support.
    """

    lambda_tilde: float
    q: float = 0.0
    gamma: float = 2.0
    delta: float = 1e-5
    max_iter: int = 1000
    conv_tol: float = 1e-8
    initial_weights: Optional[np.ndarray] = field(default=None, compare=False)
    selection_threshold: float = DEFAULT_SELECTION_THRESHOLD

    def __post_init__(self):
        if not 0.0 <= self.q <= 2.0:
            raise InvalidInputError(f"q must lie in [0, 2], got {self.q}")
        if not self.gamma > 0:
            raise InvalidInputError(f"gamma must be positive, got {self.gamma}")
        if not self.delta > 0:
            raise InvalidInputError(f"delta must be positive, got {self.delta}")
        if not (np.isfinite(self.lambda_tilde) and self.lambda_tilde >= 0):
            raise InvalidInputError(
                f"lambda_tilde must be finite and >= 0, got {self.lambda_tilde}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise InvalidInputError(f"max_iter must be a positive integer, got {self.max_iter}")
        if not self.conv_tol > 0:
            raise InvalidInputError(f"conv_tol must be positive, got {self.conv_tol}")
        if not self.selection_threshold > 0:
            raise InvalidInputError("selection_threshold must be positive")
        if self.initial_weights is not None:
            w0 = np.asarray(self.initial_weights, dtype=float)
            if w0.ndim != 1 or not np.all(np.isfinite(w0)) or np.any(w0 < 0):
                raise InvalidInputError("initial_weights must be a finite non-negative vector")
            object.__setattr__(self, "initial_weights", w0)

    def to_dict(self) -> dict:
        d = {
            "lambda_tilde": self.lambda_tilde,
            "q": self.q,
            "gamma": self.gamma,
            "delta": self.delta,
            "max_iter": self.max_iter,
            "conv_tol": self.conv_tol,
            "selection_threshold": self.selection_threshold,
        }
        d["initial_weights"] = (None if self.initial_weights is None
                                else self.initial_weights.tolist())
        return d


@dataclass
class ARResult:
    """Outcome of an adaptive ridge run.

    ``support`` is computed from the penalized quantities, which are the
    coefficients themselves except for difference-penalized problems
    (segmentation), where they are the successive differences.
    """

    beta: np.ndarray
    weights: np.ndarray
    support: np.ndarray
    iterations: int
    converged: bool
    trace: Optional[list] = None
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "beta": self.beta.tolist(),
            "weights": self.weights.tolist(),
            "support": self.support.tolist(),
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _check_beta(beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if not np.all(np.isfinite(beta)):
        raise InvalidInputError("coefficients contain NaN or infinite entries")
    return beta


def update_weights(beta, config: ARConfig) -> np.ndarray:
    """Direct weight formula ``(|b|^gamma + delta^gamma)^((q-2)/gamma)``.

    Overflows for very large coefficients; see :func:`update_weights_stable`.
    """
    beta = _check_beta(beta)
    g = config.gamma
    with np.errstate(over="ignore", under="ignore"):
        return (np.abs(beta) ** g + config.delta ** g) ** ((config.q - 2.0) / g)


def update_weights_stable(beta, config: ARConfig) -> np.ndarray:
    """Weight update evaluated through ``log1p`` to avoid over/underflow.

    For |b| <= delta the weight is ``delta^(q-2) * (1 + |b/delta|^g)^((q-2)/g)``,
    otherwise ``|b|^(q-2) * (1 + |delta/b|^g)^((q-2)/g)``. Both are computed
    in log space; results below the smallest positive double are clamped
    to it so that weights stay strictly positive.
    """
    beta = _check_beta(beta)
    q, g, d = config.q, config.gamma, config.delta
    expo = (q - 2.0) / g
    a = np.abs(beta)
    small = a <= d
    logw = np.empty_like(a)
    with np.errstate(over="ignore", under="ignore", divide="ignore"):
        logw[small] = (q - 2.0) * np.log(d) + expo * np.log1p((a[small] / d) ** g)
        big = ~small
        logw[big] = (q - 2.0) * np.log(a[big]) + expo * np.log1p((d / a[big]) ** g)
        w = np.exp(logw)
    return np.maximum(w, _TINY)


def effective_penalty(beta, weights) -> float:
    """Quadratic penalty ``sum_j w_j beta_j^2``; counts active terms when q = 0."""
    beta = np.asarray(beta, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if beta.shape != weights.shape:
        raise InvalidInputError(
            f"dimension mismatch: beta {beta.shape} vs weights {weights.shape}")
    return float(np.sum(weights * beta ** 2))


def extract_support(beta, threshold: float = DEFAULT_SELECTION_THRESHOLD) -> np.ndarray:
    """Indices j with ``|beta_j| > threshold`` (strict)."""
    if not threshold > 0:
        raise InvalidInputError("threshold must be positive")
    return np.flatnonzero(np.abs(np.asarray(beta, dtype=float)) > threshold)


# solver(weights, beta_prev) -> beta_next
Solver = Callable[[np.ndarray, np.ndarray], np.ndarray]


def run_ar(solver: Solver, config: ARConfig, dim: int, *,
           beta0=None, penalized: Optional[Callable[[np.ndarray], np.ndarray]] = None,
           keep_trace: bool = False,
           callback: Optional[Callable[[int, np.ndarray, np.ndarray], None]] = None,
           ) -> ARResult:
    """Generic adaptive ridge fixed-point driver.

    Parameters
    ----------
    solver : callable
        ``solver(w, beta_prev)`` returns the next coefficient vector. Exact
        backends minimize the weighted ridge contrast and ignore
        ``beta_prev``; iterative backends (Newton-Raphson) take one step
        from it.
    config : ARConfig
    dim : int
        Number of coefficients.
    beta0 : array, optional
        Starting coefficients (zeros by default).
    penalized : callable, optional
        Maps coefficients to the penalized quantities D @ beta. Identity by
        default; segmentation passes first differences.
    keep_trace : bool
        Store the Euclidean norm of every iterate in ``ARResult.trace``.
    callback : callable, optional
        Called as ``callback(k, beta, w)`` after every solve, before the
        weight update.
    """
    D = penalized if penalized is not None else (lambda b: b)
    beta = np.zeros(dim) if beta0 is None else np.array(beta0, dtype=float)
    if beta.shape != (dim,):
        raise InvalidInputError(f"beta0 must have length {dim}")
    m = D(beta).shape[0]
    if config.initial_weights is not None:
        w = config.initial_weights.copy()
        if w.shape != (m,):
            raise InvalidInputError(f"initial_weights must have length {m}")
    else:
        w = np.ones(m)
    # weights of exactly zero are never re-weighted (unpenalized coordinates)
    free = w == 0.0

    trace = [] if keep_trace else None
    converged = False
    k = 0
    for k in range(1, config.max_iter + 1):
        new = np.asarray(solver(w, beta), dtype=float)
        if not np.all(np.isfinite(new)):
            raise NumericalError(f"solver returned non-finite coefficients at iteration {k}")
        step = float(np.max(np.abs(new - beta))) if dim else 0.0
        beta = new
        if keep_trace:
            trace.append(float(np.linalg.norm(beta)))
        if callback is not None:
            callback(k, beta, w)
        if config.q == 2.0:
            # weights are identically one: a single ridge solve is the answer
            converged = True
            break
        w = update_weights_stable(D(beta), config)
        w[free] = 0.0
        if step < config.conv_tol:
            converged = True
            break

    support = extract_support(D(beta), config.selection_threshold)
    return ARResult(beta=beta, weights=w, support=support, iterations=k,
                    converged=converged, trace=trace)
