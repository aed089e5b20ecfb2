"""One-dimensional AR dynamics under an orthogonal design.

With ``X'X = n I`` every coordinate evolves on its own:

    x_k = beta_hat / f(x_{k-1}),    f(x) = 1 + K / (delta^2 + x^2),

where ``K = lambda_tilde * sigma2 / n``. Clearing denominators in the
stationarity condition ``x f(x) = beta_hat`` gives the monic cubic

    x^3 - beta_hat x^2 + (K + delta^2) x - beta_hat delta^2 = 0,

whose real roots are the fixed points. Selection happens exactly when the
cubic has three real roots (roughly ``beta_hat^2 > 4K``), which makes AR
with ``lambda_tilde`` equivalent to L0 selection with ``lambda = 4 lambda_tilde``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import InvalidInputError

ATTRACTIVE = "attractive"
REPELLING = "repelling"
SADDLE = "saddle"


@dataclass(frozen=True)
class ScalarDynamics:
    beta_hat: float
    K: float
    delta: float = 1e-5

    def __post_init__(self):
        if not self.K > 0:
            raise InvalidInputError(f"K must be positive, got {self.K}")
        if not self.delta > 0:
            raise InvalidInputError(f"delta must be positive, got {self.delta}")

    @property
    def regular(self) -> bool:
        """True in the usual regime ``K > 8 delta^2`` where x f(x) has two extrema."""
        return self.K > 8 * self.delta ** 2

    def f(self, x):
        return 1.0 + self.K / (self.delta ** 2 + np.square(x))

    def cubic(self, x):
        b, K, d2 = self.beta_hat, self.K, self.delta ** 2
        return ((x - b) * x + (K + d2)) * x - b * d2

    def cubic_prime(self, x):
        return (3 * x - 2 * self.beta_hat) * x + self.K + self.delta ** 2


@dataclass(frozen=True)
class FixedPointSet:
    roots: tuple
    classification: tuple
    predicted_limit: float
    start: float

    @property
    def selected(self) -> bool:
        return len(self.roots) >= 2 and self.predicted_limit == self.roots[-1]


def dynamics_step(x: float, dyn: ScalarDynamics) -> float:
    return dyn.beta_hat / dyn.f(x)


def iterate(dyn: ScalarDynamics, steps: int, x0=None) -> float:
    """Run the scalar map ``steps`` times, from ``beta_hat / (1 + K)`` by default."""
    x = dyn.beta_hat / (1.0 + dyn.K) if x0 is None else float(x0)
    b, K, d2 = dyn.beta_hat, dyn.K, dyn.delta ** 2
    for _ in range(steps):
        x = b / (1.0 + K / (d2 + x * x))
    return x


def local_min_x_star(dyn: ScalarDynamics) -> float:
    """Location of the positive local minimum of ``x f(x)``.

    ``x*^2 = K/2 - delta^2 + sqrt((K - 2 delta^2)^2 - 4 delta^2) / 2``
    """
    if not dyn.regular:
        raise InvalidInputError(
            f"x f(x) has no positive local extrema for K={dyn.K} <= 8 delta^2")
    K, d2 = dyn.K, dyn.delta ** 2
    # (K - 2d2)^2 - 4d2 written without the cancellation-prone square
    disc = (K - 2 * d2) ** 2 - 4 * d2
    return math.sqrt(K / 2 - d2 + 0.5 * math.sqrt(disc))


def _polish(dyn: ScalarDynamics, r: float) -> float:
    # Newton steps are kept only if they stay in (0, beta_hat] and shrink
    # the residual; near a double root p' vanishes and a raw step can jump.
    pr = abs(dyn.cubic(r))
    for _ in range(3):
        dp = dyn.cubic_prime(r)
        if dp == 0:
            break
        nr = r - dyn.cubic(r) / dp
        if not (np.isfinite(nr) and 0 < nr <= dyn.beta_hat):
            break
        pn = abs(dyn.cubic(nr))
        if pn >= pr:
            break
        r, pr = nr, pn
    return r


def _positive_roots(dyn: ScalarDynamics) -> tuple[list, int | None]:
    """Real roots of the cubic for beta_hat > 0, ascending.

    Returns the roots and, when two roots merge, the index of the double
    root. The cubic is monotone between its critical points, so each root
    is bracketed and found with Brent's method.
    """
    b, K, d2 = dyn.beta_hat, dyn.K, dyn.delta ** 2
    p = dyn.cubic
    # all real roots lie in (0, b): p(0) = -b d2 < 0 and p(b) = b K > 0
    lo, hi = 0.0, b
    disc = b * b - 3 * (K + d2)
    xtol = 1e-300
    if disc <= 0:
        return [brentq(p, lo, hi, xtol=xtol, rtol=1e-15, maxiter=500)], None
    s = math.sqrt(disc)
    c1 = (b - s) / 3  # local max of p
    c2 = (b + s) / 3  # local min of p
    # Vieta form of c1 avoids cancellation when K is tiny relative to b^2
    c1 = (K + d2) / (b + s) if b > 0 else c1
    p1, p2 = p(c1), p(c2)
    scale = b * (K + d2) + b ** 3  # magnitude of the cubic's terms
    tie = 64 * np.finfo(float).eps * scale
    if p1 < -tie or p2 > tie:
        # one real root, left of c1 or right of c2
        if p1 < 0:
            return [brentq(p, c2, hi, xtol=xtol, rtol=1e-15, maxiter=500)], None
        return [brentq(p, lo, c1, xtol=xtol, rtol=1e-15, maxiter=500)], None
    if abs(p1) <= tie:
        # double root at the local maximum (merging of the two lower roots)
        r3 = brentq(p, c2, hi, xtol=xtol, rtol=1e-15, maxiter=500)
        return [c1, r3], 0
    if abs(p2) <= tie:
        r1 = brentq(p, lo, c1, xtol=xtol, rtol=1e-15, maxiter=500)
        return [r1, c2], 1
    r1 = brentq(p, lo, c1, xtol=xtol, rtol=1e-15, maxiter=500)
    r2 = brentq(p, c1, c2, xtol=xtol, rtol=1e-15, maxiter=500)
    r3 = brentq(p, c2, hi, xtol=xtol, rtol=1e-15, maxiter=500)
    return [r1, r2, r3], None


def fixed_points(dyn: ScalarDynamics) -> FixedPointSet:
    """Fixed points of the scalar map, their type, and the limit from x1.

    Roots are ordered by magnitude; for negative ``beta_hat`` they are the
    mirror images of the roots for ``|beta_hat|``.
    """
    b = dyn.beta_hat
    x1 = b / (1.0 + dyn.K)
    if b == 0:
        return FixedPointSet((0.0,), (ATTRACTIVE,), 0.0, x1)
    sign = math.copysign(1.0, b)
    pos = ScalarDynamics(abs(b), dyn.K, dyn.delta)
    roots, double = _positive_roots(pos)
    roots = [_polish(pos, r) for r in roots]
    if len(roots) == 3:
        kinds = (ATTRACTIVE, REPELLING, ATTRACTIVE)
        limit = roots[2] if abs(x1) > roots[1] else roots[0]
    elif len(roots) == 2:
        # the merged root attracts from one side only
        if double == 1:
            kinds = (ATTRACTIVE, SADDLE)
            limit = roots[1] if abs(x1) > roots[1] else roots[0]
        else:
            kinds = (SADDLE, ATTRACTIVE)
            limit = roots[1] if abs(x1) > roots[0] else roots[0]
    else:
        kinds = (ATTRACTIVE,)
        limit = roots[0]
    return FixedPointSet(tuple(sign * r for r in roots), kinds, sign * limit, x1)


def shrinkage_residual(dyn: ScalarDynamics, x: float) -> float:
    """``x (1 + K / (delta^2 + x^2)) - beta_hat``."""
    return x * dyn.f(x) - dyn.beta_hat


def threshold_select(beta_hats, lambda_tilde: float, sigma2: float, n: int) -> np.ndarray:
    """Indices the AR iteration keeps under an orthogonal design.

    A coordinate is kept when its scalar map has three fixed points and the
    ridge start lands above the middle one. Up to O(delta) terms this is the
    rule ``beta_hat_j^2 > 4 K``; boundary ties are not selected.
    """
    beta_hats = np.atleast_1d(np.asarray(beta_hats, dtype=float))
    K = lambda_tilde * sigma2 / n
    if K >= 1:
        warnings.warn(f"K = {K:.4g} >= 1: ridge start may fall below the middle "
                      "fixed point; thresholding equivalence not guaranteed",
                      RuntimeWarning, stacklevel=2)
    keep = [j for j, b in enumerate(beta_hats)
            if fixed_points(ScalarDynamics(b, K)).selected]
    return np.asarray(keep, dtype=int)


def xfx_curve(beta_hat: float, K: float, delta: float = 1e-5,
              x_max: float = None, num: int = 401) -> tuple[np.ndarray, np.ndarray]:
    """Samples of ``x f(x)`` on ``[0, x_max]`` (the map's defining curve)."""
    dyn = ScalarDynamics(beta_hat, K, delta)
    x_max = 1.2 * abs(beta_hat) if x_max is None else x_max
    x = np.linspace(0.0, x_max, num)
    return x, x * dyn.f(x)
