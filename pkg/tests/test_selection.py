import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from l0ridge.core import ARConfig, InvalidInputError
from l0ridge.glm import GlmDataset, bic
from l0ridge.linreg import Dataset, ar_linear, l0_criterion, standardize
from l0ridge.ortho import threshold_select
from l0ridge.selection import (Criterion, all_subset_select, glm_marginal_prescreen,
                               glm_stepwise_select, marginal_prescreen, stepwise_select)
from l0ridge.simulation import correlated_scenario, glm_scenario, make_replicate

from helpers import orthogonal_dataset


def brute_force(data, lam):
    """Second enumerator: plain loops over itertools.combinations and lstsq."""
    best = (data.y @ data.y / data.sigma2, ())
    for k in range(1, data.p + 1):
        for s in itertools.combinations(range(data.p), k):
            Xs = data.X[:, s]
            b = np.linalg.lstsq(Xs, data.y, rcond=None)[0]
            r = data.y - Xs @ b
            c = r @ r / data.sigma2 + lam * k
            if c < best[0] - 1e-10:
                best = (c, s)
    return best


def test_criterion_penalties():
    assert Criterion("aic", 50, 15).penalty == 2.0
    assert Criterion("BIC", 50, 15).penalty == pytest.approx(math.log(50))
    assert Criterion("mbic", 100, 1000).penalty == pytest.approx(math.log(100 * 1000 ** 2 / 4))
    assert Criterion.custom(3.5).penalty == 3.5
    with pytest.raises(InvalidInputError):
        Criterion("hqic", 10, 2)
    with pytest.raises(InvalidInputError):
        Criterion("custom", 10, 2)


@given(st.integers(2, 10 ** 6), st.integers(3, 10 ** 5))
def test_mbic_exceeds_bic(n, p):
    assert Criterion("mbic", n, p).penalty > Criterion("bic", n, p).penalty


def test_all_subset_single_regressor():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(30)
    for effect in (0.0, 1.0):
        d = standardize(x, effect * x + rng.standard_normal(30))
        fit = all_subset_select(d, Criterion("bic", 30, 1))
        null = d.y @ d.y
        full = l0_criterion(d, [0], math.log(30)).criterion
        assert fit.support.tolist() == ([0] if full < null else [])


def test_all_subset_matches_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(10):
        X = rng.standard_normal((40, 10)) + 0.5 * rng.standard_normal((40, 1))
        beta = np.zeros(10)
        beta[rng.choice(10, 3, replace=False)] = rng.normal(0, 0.7, 3)
        d = standardize(X, X @ beta + rng.standard_normal(40), sigma2=rng.uniform(0.5, 2))
        lam = rng.uniform(1, 6)
        crit, s = brute_force(d, lam)
        fit = all_subset_select(d, Criterion.custom(lam))
        assert fit.criterion == pytest.approx(crit, abs=1e-9)
        assert tuple(fit.support.tolist()) == s


def test_all_subset_orthogonal_is_threshold_rule():
    n = 100
    lt = math.log(n) / 4
    bh = np.array([0.5, -0.25, 0.2, 0.22, -0.1, 0.0, 0.3])
    d = orthogonal_dataset(bh, n)
    fit = all_subset_select(d, Criterion.custom(4 * lt))
    assert fit.support.tolist() == threshold_select(bh, lt, 1.0, n).tolist()


def test_all_subset_guard():
    d = Dataset(X=np.random.default_rng(2).standard_normal((50, 25)), y=np.zeros(50))
    with pytest.raises(InvalidInputError, match="stepwise"):
        all_subset_select(d, Criterion("bic", 50, 25))


def test_all_subset_tie_prefers_smaller_then_lexicographic():
    # duplicated regressor: {0} and {1} fit identically, {0,1} is singular
    x = np.random.default_rng(3).standard_normal(20)
    d = standardize(np.column_stack([x, x]), 2 * x)
    fit = all_subset_select(d, Criterion.custom(1.0))
    assert fit.support.tolist() == [0]


def test_marginal_prescreen():
    d = orthogonal_dataset(np.array([0.0, 0.9, 0.0, 0.0]), 30)
    assert marginal_prescreen(d, 1).tolist() == [1]
    rng = np.random.default_rng(4)
    d = standardize(rng.standard_normal((50, 10)), rng.standard_normal(50))
    order = marginal_prescreen(d, 10)
    assert sorted(order.tolist()) == list(range(10))
    # univariate F statistic oracle: F_j increases with R^2_j
    f = []
    for j in range(10):
        xj = d.X[:, j]
        b = xj @ d.y / (xj @ xj)
        r = d.y - b * xj
        f.append((d.y @ d.y - r @ r) / (r @ r / 48))
    assert order.tolist() == np.argsort(-np.array(f), kind="stable").tolist()
    with pytest.raises(InvalidInputError):
        marginal_prescreen(d, 11)


def test_stepwise_spurious_regressors():
    rng = np.random.default_rng(5)
    d = standardize(rng.standard_normal((60, 30)), rng.standard_normal(60))
    fit = stepwise_select(d, Criterion.custom(20.0))
    assert fit.support.size <= 1
    start = l0_criterion(d, marginal_prescreen(d, 30), 20.0).criterion
    assert fit.criterion <= start


def test_stepwise_never_beats_all_subset():
    for rho in (0.0, 0.5, 0.8):
        spec = correlated_scenario(1, rho, replicates=15, seed=6)
        for r in range(15):
            d, _ = make_replicate(spec, r)
            crit = Criterion("bic", d.n, d.p)
            best = all_subset_select(d, crit).criterion
            assert stepwise_select(d, crit).criterion >= best - 1e-9
            ar = ar_linear(d, ARConfig(lambda_tilde=crit.penalty / 4))
            assert l0_criterion(d, ar.support, crit.penalty).criterion >= best - 1e-9


def test_stepwise_deterministic_and_handles_collinearity():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((50, 12))
    X[:, 5] = X[:, 2] + X[:, 3]
    d = standardize(X, X[:, 2] + rng.standard_normal(50))
    a = stepwise_select(d, Criterion("bic", 50, 12))
    b = stepwise_select(d, Criterion("bic", 50, 12))
    assert a.support.tolist() == b.support.tolist() and a.criterion == b.criterion
    assert any("collinear" in note for note in a.notes)


def test_stepwise_high_dimensional_finds_strong_signal():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((100, 300))
    beta = np.zeros(300)
    beta[[3, 50, 200]] = [1.5, -1.2, 1.0]
    d = standardize(X, X @ beta + rng.standard_normal(100))
    fit = stepwise_select(d, Criterion("mbic", 100, 300))
    assert {3, 50, 200} <= set(fit.support.tolist())


def test_glm_prescreen_and_stepwise():
    spec = glm_scenario("poisson", n=200, p=15, k=4, replicates=1, seed=9)
    d, truth = make_replicate(spec, 0)
    order = glm_marginal_prescreen(d, 15)
    assert sorted(order.tolist()) == list(range(15))
    fit = glm_stepwise_select(d, Criterion("bic", d.n, d.p))
    assert fit.criterion == pytest.approx(bic(d, fit.support), abs=1e-6)
    # exhaustive check over every support of size <= 5 for this small problem
    best = min(bic(d, s) for k in range(6) for s in itertools.combinations(range(15), k))
    assert fit.criterion <= best + 2.0


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_all_subset_lower_bound_property(seed):
    rng = np.random.default_rng(seed)
    n, p = 30, 8
    X = rng.standard_normal((n, p)) + rng.uniform(0, 1) * rng.standard_normal((n, 1))
    beta = rng.normal(0, 0.5, p) * (rng.random(p) < 0.4)
    d = standardize(X, X @ beta + rng.standard_normal(n))
    crit = Criterion("bic", n, p)
    best = all_subset_select(d, crit).criterion
    assert stepwise_select(d, crit, start_size=p).criterion >= best - 1e-9
