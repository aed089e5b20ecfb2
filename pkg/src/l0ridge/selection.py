"""Reference model selectors: exhaustive search and a three-phase stepwise search.

All linear selectors minimize ``RSS(beta_M) / sigma2 + lam * |M|`` with lam
given by a :class:`Criterion`; the GLM stepwise search minimizes
``-2 loglik(beta_M) + lam * |M|``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Optional

import numpy as np

from .core import InvalidInputError, NumericalError
from .glm import GlmDataset, fit_ml
from .linreg import Dataset, ModelFit, l0_criterion

log = logging.getLogger(__name__)

MAX_ALL_SUBSET_P = 20
STEPWISE_START = 40


@dataclass(frozen=True)
class Criterion:
    """An L0 penalty per selected coefficient.

    ``kind`` is one of ``"aic"``, ``"bic"``, ``"mbic"`` or ``"custom"`` (with
    ``value``). ``n`` and ``p`` are the sample size and the number of
    candidate regressors.
    """

    kind: str
    n: int
    p: int
    value: Optional[float] = None

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in ("aic", "bic", "mbic", "custom"):
            raise InvalidInputError(f"unknown criterion {self.kind!r}")
        if kind == "custom" and (self.value is None or self.value < 0):
            raise InvalidInputError("custom criterion needs a non-negative value")

    @property
    def penalty(self) -> float:
        if self.kind == "aic":
            return 2.0
        if self.kind == "bic":
            return math.log(self.n)
        if self.kind == "mbic":
            return math.log(self.n * self.p ** 2 / 4.0)
        return float(self.value)

    @classmethod
    def custom(cls, lam: float, n: int = 0, p: int = 0) -> "Criterion":
        return cls("custom", n, p, lam)


@lru_cache(maxsize=64)
def _combos(p: int, k: int) -> np.ndarray:
    if k == 0:
        return np.zeros((1, 0), dtype=np.intp)
    return np.array(list(combinations(range(p), k)), dtype=np.intp)


def _subset_rss(G, b, yy, idx):
    """RSS of every subset in the rows of ``idx`` (inf where singular)."""
    if idx.shape[1] == 0:
        return np.array([yy])
    Gs = G[idx[:, :, None], idx[:, None, :]]
    bs = b[idx]
    try:
        sol = np.linalg.solve(Gs, bs[..., None])[..., 0]
        return yy - np.einsum("ij,ij->i", bs, sol)
    except np.linalg.LinAlgError:
        out = np.empty(idx.shape[0])
        for r, (g, v) in enumerate(zip(Gs, bs)):
            if np.linalg.matrix_rank(g) < g.shape[0]:
                out[r] = np.inf
            else:
                out[r] = yy - v @ np.linalg.solve(g, v)
        return out


def all_subset_select(data: Dataset, criterion: Criterion,
                      max_p: int = MAX_ALL_SUBSET_P) -> ModelFit:
    """Exact minimizer over all 2^p supports.

    Ties go to the smaller support, then to the lexicographically first.
    """
    p = data.p
    if p > max_p:
        raise InvalidInputError(
            f"all-subset search over p={p} > {max_p} regressors is not feasible; "
            "use stepwise_select instead")
    lam = criterion.penalty
    G = data.X.T @ data.X
    b = data.X.T @ data.y
    yy = float(data.y @ data.y)
    best_val, best = math.inf, None
    for k in range(min(p, data.n) + 1):
        idx = _combos(p, k)
        vals = _subset_rss(G, b, yy, idx) / data.sigma2 + lam * k
        r = int(np.argmin(vals))
        if vals[r] < best_val:
            best_val, best = float(vals[r]), idx[r]
    return l0_criterion(data, best, lam)


def marginal_prescreen(data: Dataset, m: int) -> np.ndarray:
    """Top ``m`` regressors by ``|X_j' y|``, strongest first (ties: lower index)."""
    if not 1 <= m <= data.p:
        raise InvalidInputError(f"m must lie in [1, {data.p}]")
    score = np.abs(data.X.T @ data.y)
    return np.argsort(-score, kind="stable")[:m]


def _independent_columns(X, cols, notes):
    """Drop columns of X[:, cols] that are (numerically) linear combinations of earlier ones."""
    keep = []
    for c in cols:
        trial = keep + [c]
        if np.linalg.matrix_rank(X[:, trial]) == len(trial):
            keep.append(c)
        else:
            notes.append(f"dropped collinear column {c}")
            log.info("stepwise: dropped collinear column %d", c)
    return keep


def _backward_path(G, b, yy, model, sigma2, lam):
    """Greedy elimination down to one regressor; returns [(criterion, model), ...]."""
    model = sorted(model)
    path = []
    while True:
        idx = np.asarray(model)
        Ginv = np.linalg.inv(G[np.ix_(idx, idx)])
        beta = Ginv @ b[idx]
        rss = yy - b[idx] @ beta
        path.append((rss / sigma2 + lam * len(model), list(model)))
        if len(model) == 1:
            return path
        increase = beta ** 2 / np.diag(Ginv)
        model.pop(int(np.argmin(increase)))


def _forward(X, y, model, crit, sigma2, lam, notes):
    n, p = X.shape
    model = sorted(model)
    tol = 1e-10 * n
    while len(model) < n - 1:
        if model:
            Q, _ = np.linalg.qr(X[:, model])
            r = y - Q @ (Q.T @ y)
            Xp = X - Q @ (Q.T @ X)
        else:
            r, Xp = y, X
        rss = float(r @ r)
        norms = np.einsum("ij,ij->j", Xp, Xp)
        ok = norms > tol
        ok[model] = False
        if not ok.any():
            break
        gain = np.zeros(p)
        gain[ok] = (Xp[:, ok].T @ r) ** 2 / norms[ok]
        gain[~ok] = -np.inf
        j = int(np.argmax(gain))
        new = (rss - gain[j]) / sigma2 + lam * (len(model) + 1)
        if not new < crit:
            break
        model = sorted(model + [j])
        crit = new
    return model


def stepwise_select(data: Dataset, criterion: Criterion,
                    start_size: int = STEPWISE_START) -> ModelFit:
    """Three-phase stepwise search.

    1. Start from the ``start_size`` best regressors by marginal statistic.
    2. Greedy backward elimination all the way down to a single regressor.
    3. From the best model met in phase 2, greedy forward selection over all
       regressors while the criterion strictly improves.

    Ties in greedy steps go to the smallest column index.
    """
    n, p = data.X.shape
    lam = criterion.penalty
    notes: list = []
    m = min(start_size, p, n - 1)
    start = _independent_columns(data.X, sorted(marginal_prescreen(data, m).tolist()), notes)
    G = data.X.T @ data.X
    b = data.X.T @ data.y
    yy = float(data.y @ data.y)
    path = _backward_path(G, b, yy, start, data.sigma2, lam)
    crit, model = min(path, key=lambda t: t[0])
    model = _forward(data.X, data.y, model, crit, data.sigma2, lam, notes)
    fit = l0_criterion(data, model, lam)
    fit.notes.extend(notes)
    return fit


# --- GLM versions --------------------------------------------------------

def glm_marginal_prescreen(data: GlmDataset, m: int) -> np.ndarray:
    """Top ``m`` regressors by the absolute score statistic at beta = 0."""
    if not 1 <= m <= data.p:
        raise InvalidInputError(f"m must lie in [1, {data.p}]")
    X, y = data.X, data.y
    if data.family == "poisson":
        resid, v = y - 1.0, 1.0
    else:
        resid, v = y - 0.5, 0.25
    info = np.sqrt(v * np.sum(X ** 2, axis=0))
    score = np.abs(X.T @ resid) / np.where(info > 0, info, np.inf)
    return np.argsort(-score, kind="stable")[:m]


def glm_criterion(data: GlmDataset, support, lam: float, beta0=None):
    support = sorted(int(j) for j in support)
    beta, ll = fit_ml(data, support, beta0=beta0)
    return -2.0 * ll + lam * len(support), beta


def glm_stepwise_select(data: GlmDataset, criterion: Criterion,
                        start_size: int = STEPWISE_START) -> ModelFit:
    """Same three phases as :func:`stepwise_select`, scored by ``-2 loglik + lam |M|``.

    Every candidate model is refit by maximum likelihood, warm-started from
    the current coefficients.
    """
    n, p = data.X.shape
    lam = criterion.penalty
    notes: list = []
    m = min(start_size, p, n - 1)
    model = _independent_columns(data.X, sorted(glm_marginal_prescreen(data, m).tolist()), notes)

    crit, beta = glm_criterion(data, model, lam)
    path = [(crit, list(model), beta)]
    while len(model) > 1:
        best = None
        for pos in range(len(model)):
            cand = model[:pos] + model[pos + 1:]
            c, bb = glm_criterion(data, cand, lam, np.delete(beta, pos))
            if best is None or c < best[0]:
                best = (c, cand, bb)
        crit, model, beta = best
        path.append((crit, list(model), beta))
    crit, model, beta = min(path, key=lambda t: t[0])

    while len(model) < n - 1:
        best = None
        for j in range(p):
            if j in model:
                continue
            cand = sorted(model + [j])
            pos = cand.index(j)
            b0 = np.insert(beta, pos, 0.0)
            try:
                c, bb = glm_criterion(data, cand, lam, b0)
            except NumericalError:
                notes.append(f"skipped column {j}: singular refit")
                continue
            if best is None or c < best[0]:
                best = (c, cand, bb)
        if best is None or not best[0] < crit:
            break
        crit, model, beta = best
    return ModelFit(support=np.asarray(model, dtype=int), beta_ml=beta,
                    criterion=float(crit), notes=notes)
