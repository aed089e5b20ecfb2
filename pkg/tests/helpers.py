"""Shared test fixtures."""

import math

import numpy as np
from scipy.stats import ortho_group

from l0ridge.linreg import Dataset


def orthogonal_dataset(beta_hat, n=100, rng=None, sigma2=1.0):
    """Design with X'X = n I whose OLS estimate is exactly ``beta_hat``."""
    rng = np.random.default_rng(0) if rng is None else rng
    p = len(beta_hat)
    Q = ortho_group.rvs(n, random_state=rng)
    # columns orthogonal to the constant vector: rotate inside its complement
    ones = np.ones(n) / math.sqrt(n)
    B = Q[:, : p + 1] - np.outer(ones, ones @ Q[:, : p + 1])
    U, _, _ = np.linalg.svd(B, full_matrices=False)
    X = math.sqrt(n) * U[:, :p]
    resid = U[:, p] * rng.standard_normal()
    y = X @ np.asarray(beta_hat) + resid
    return Dataset(X=X, y=y, sigma2=sigma2)


ACCEPTANCE_LINES = []


def report(number, title, ok, detail=""):
    """Record one acceptance line; printed in the terminal summary."""
    status = "PASS" if ok else "FAIL"
    line = f"criterion {number} [{status}] {title}"
    if detail:
        line += f": {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok
