"""Scenario generators, selection methods and Monte Carlo bookkeeping.

Every replicate draws from its own generator seeded with ``(seed, replicate)``,
so serial and parallel runs produce identical tables.
"""

from __future__ import annotations

import configparser
import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .core import ARConfig, InvalidInputError, NumericalError
from .glm import GlmDataset, nr_ar, regularization_path
from .linreg import Dataset, ar_linear, l0_criterion, standardize
from .segmentation import ar_segment, default_lambda, dp_exact_segment
from .selection import (Criterion, all_subset_select, glm_criterion,
                        glm_stepwise_select, marginal_prescreen, stepwise_select)

log = logging.getLogger(__name__)

LINEAR, POISSON, LOGISTIC, SEGMENTATION = "linear", "poisson", "logistic", "segmentation"
CORRELATIONS = ("independent", "cs", "ar1")


@dataclass(frozen=True)
class ScenarioSpec:
    """A simulation design.

    ``effect`` is either a fixed coefficient for every true regressor or
    ``("normal", sd)`` for normally drawn coefficients. For GLMs the design
    is drawn with entries of standard deviation ``x_sd`` and used as is; for
    linear models it is standardized. Segmentation uses ``means`` and
    ``breakpoints`` (segment start indices) and ignores the regression
    fields. Indices are 0-based.
    """

    n: int
    p: int = 0
    true_support: tuple = ()
    effect: Union[float, tuple] = 0.5
    corr: str = "independent"
    rho: float = 0.0
    family: str = LINEAR
    sigma: float = 1.0
    x_sd: float = 1.0
    means: tuple = ()
    breakpoints: tuple = ()
    replicates: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "true_support", tuple(int(j) for j in self.true_support))
        object.__setattr__(self, "breakpoints", tuple(int(j) for j in self.breakpoints))
        object.__setattr__(self, "means", tuple(float(m) for m in self.means))
        if self.family not in (LINEAR, POISSON, LOGISTIC, SEGMENTATION):
            raise InvalidInputError(f"unknown family {self.family!r}")
        if self.corr not in CORRELATIONS:
            raise InvalidInputError(f"unknown correlation {self.corr!r}")
        if not 0 <= self.rho < 1:
            raise InvalidInputError("rho must lie in [0, 1)")
        if self.replicates < 1:
            raise InvalidInputError("replicates must be >= 1")
        if self.family == SEGMENTATION:
            if len(self.means) != len(self.breakpoints) + 1:
                raise InvalidInputError("need one more segment mean than breakpoints")
            if any(not 0 < b < self.n for b in self.breakpoints):
                raise InvalidInputError("breakpoints must lie in (0, n)")
        else:
            if len(set(self.true_support)) > self.p or any(
                    not 0 <= j < self.p for j in self.true_support):
                raise InvalidInputError("true_support must be a subset of range(p)")

    def with_(self, **kw) -> "ScenarioSpec":
        return replace(self, **kw)


@dataclass(frozen=True)
class Metrics:
    power: float
    fp: int
    fdr: float
    mis: int


def evaluate(selected, truth, p: int) -> Metrics:
    """Power, false positives, FDR (0/0 -> 0) and misclassifications.

    With an empty truth power is reported as 1.
    """
    sel = {int(j) for j in selected}
    tru = {int(j) for j in truth}
    if any(not 0 <= j < p for j in sel | tru):
        raise InvalidInputError("indices must lie in range(p)")
    tp = len(sel & tru)
    fp = len(sel - tru)
    fn = len(tru - sel)
    power = tp / len(tru) if tru else 1.0
    fdr = fp / max(1, fp + tp)
    return Metrics(power=power, fp=fp, fdr=fdr, mis=fp + fn)


def correlation_matrix(p: int, corr: str, rho: float) -> np.ndarray:
    if corr == "independent" or rho == 0:
        return np.eye(p)
    if corr == "cs":
        return np.full((p, p), rho) + (1 - rho) * np.eye(p)
    lag = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    return rho ** lag


def _draw_rows(spec, rng):
    n, p = spec.n, spec.p
    Z = rng.standard_normal((n, p))
    if spec.corr == "independent" or spec.rho == 0:
        return Z
    if spec.corr == "cs":
        # X = sqrt(rho) * common + sqrt(1 - rho) * own
        common = rng.standard_normal((n, 1))
        return math.sqrt(spec.rho) * common + math.sqrt(1 - spec.rho) * Z
    L = np.linalg.cholesky(correlation_matrix(p, spec.corr, spec.rho))
    return Z @ L.T


def gen_design(spec: ScenarioSpec, rng: np.random.Generator):
    """Draw the design; linear designs come back standardized (y still zero)."""
    if spec.family == SEGMENTATION:
        raise InvalidInputError("segmentation scenarios have no design matrix")
    X = _draw_rows(spec, rng)
    if spec.family == LINEAR:
        return standardize(X, np.zeros(spec.n), sigma2=spec.sigma ** 2)
    return GlmDataset(spec.x_sd * X, np.zeros(spec.n), spec.family)


def true_coefficients(spec: ScenarioSpec, rng: np.random.Generator) -> np.ndarray:
    beta = np.zeros(spec.p)
    idx = list(spec.true_support)
    if isinstance(spec.effect, (tuple, list)):
        kind, sd = spec.effect
        if kind != "normal":
            raise InvalidInputError(f"unknown effect law {kind!r}")
        beta[idx] = rng.normal(0.0, float(sd), len(idx))
    else:
        beta[idx] = float(spec.effect)
    return beta


def gen_response(design, spec: ScenarioSpec, rng: np.random.Generator, beta=None):
    """Response for ``design``; returns the dataset with the response filled in."""
    beta = true_coefficients(spec, rng) if beta is None else np.asarray(beta, dtype=float)
    eta = design.X @ beta
    if spec.family == LINEAR:
        y = eta + spec.sigma * rng.standard_normal(spec.n)
        return replace(design, y=y - y.mean())
    if spec.family == POISSON:
        if eta.max() > 700:
            raise InvalidInputError("Poisson means overflow; use smaller effects or x_sd")
        return replace(design, y=rng.poisson(np.exp(eta)).astype(float))
    pi = 1.0 / (1.0 + np.exp(-eta))
    return replace(design, y=(rng.random(spec.n) < pi).astype(float))


def gen_signal(spec: ScenarioSpec, rng: np.random.Generator) -> np.ndarray:
    edges = (0,) + spec.breakpoints + (spec.n,)
    mu = np.concatenate([np.full(e - s, m) for s, e, m in
                         zip(edges[:-1], edges[1:], spec.means)])
    return mu + spec.sigma * rng.standard_normal(spec.n)


def replicate_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(rep)])


def make_replicate(spec: ScenarioSpec, rep: int):
    """(dataset or signal, truth) for one replicate."""
    rng = replicate_rng(spec.seed, rep)
    if spec.family == SEGMENTATION:
        return gen_signal(spec, rng), spec.breakpoints
    design = gen_design(spec, rng)
    return gen_response(design, spec, rng), spec.true_support


# --- methods -------------------------------------------------------------

def _criterion(kind, data) -> Criterion:
    if isinstance(kind, Criterion):
        return kind
    if isinstance(kind, (int, float)):
        return Criterion.custom(float(kind), data.n, data.p)
    return Criterion(kind, data.n, data.p)


def _glm_score(data, support, lam):
    return glm_criterion(data, support, lam)[0]


@dataclass(frozen=True)
class ARMethod:
    """Adaptive ridge with ``lambda_tilde = lambda / rescale``.

    ``prescreen`` keeps only the top regressors by marginal statistic before
    running AR. The reported criterion is the refit one on the full data.
    """

    criterion: object = "bic"
    rescale: float = 4.0
    prescreen: Optional[int] = None
    delta: float = 1e-5
    max_iter: int = 1000
    label: Optional[str] = None

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        return f"AR-{_crit_name(self.criterion)}"

    def run(self, data):
        crit = _criterion(self.criterion, data)
        lam = crit.penalty
        cfg = ARConfig(lambda_tilde=lam / self.rescale, delta=self.delta, max_iter=self.max_iter)
        cols = np.arange(data.p)
        if self.prescreen is not None and data.p > self.prescreen:
            if isinstance(data, Dataset):
                cols = np.sort(marginal_prescreen(data, self.prescreen))
            else:
                from .selection import glm_marginal_prescreen
                cols = np.sort(glm_marginal_prescreen(data, self.prescreen))
        sub = data.subset(cols)
        if isinstance(data, Dataset):
            res = ar_linear(sub, cfg)
            support = cols[res.support]
            return support, l0_criterion(data, support, lam).criterion
        res = nr_ar(sub, cfg)
        support = cols[res.support]
        return support, _glm_score(data, support, lam)


@dataclass(frozen=True)
class PathMethod:
    """GLM adaptive ridge along a penalty grid, keeping the best refit criterion."""

    criterion: object = "bic"
    grid: Optional[tuple] = None
    label: Optional[str] = None

    @property
    def name(self) -> str:
        return self.label or f"ARpath-{_crit_name(self.criterion)}"

    def run(self, data):
        lam = _criterion(self.criterion, data).penalty
        path = regularization_path(data, None if self.grid is None else np.asarray(self.grid),
                                   criterion_lambda=lam)
        best = path.best
        return best.result.support, best.bic


@dataclass(frozen=True)
class AllSubsetMethod:
    criterion: object = "bic"
    label: Optional[str] = None

    @property
    def name(self) -> str:
        return self.label or f"AllSubset-{_crit_name(self.criterion)}"

    def run(self, data):
        fit = all_subset_select(data, _criterion(self.criterion, data))
        return fit.support, fit.criterion


@dataclass(frozen=True)
class StepwiseMethod:
    criterion: object = "bic"
    label: Optional[str] = None

    @property
    def name(self) -> str:
        return self.label or f"Stepwise-{_crit_name(self.criterion)}"

    def run(self, data):
        crit = _criterion(self.criterion, data)
        if isinstance(data, Dataset):
            fit = stepwise_select(data, crit)
        else:
            fit = glm_stepwise_select(data, crit)
        return fit.support, fit.criterion


@dataclass(frozen=True)
class ARSegmentMethod:
    """AR segmentation with ``lambda_tilde = lam / scale``, scored at ``lam``."""

    lam: Optional[float] = None
    scale: float = 6.0
    label: Optional[str] = None

    @property
    def name(self) -> str:
        return self.label or "AR-seg"

    def run(self, y):
        lam = default_lambda(y.size) if self.lam is None else self.lam
        fit = ar_segment(y, lam / self.scale, criterion_lambda=lam)
        return fit.breakpoints, fit.criterion


@dataclass(frozen=True)
class DPSegmentMethod:
    lam: Optional[float] = None
    k_max: Optional[int] = None
    label: Optional[str] = None

    @property
    def name(self) -> str:
        return self.label or "DP-seg"

    def run(self, y):
        lam = default_lambda(y.size) if self.lam is None else self.lam
        fit = dp_exact_segment(y, y.size if self.k_max is None else self.k_max, lam)
        return fit.breakpoints, fit.criterion


def _crit_name(c) -> str:
    if isinstance(c, Criterion):
        return c.kind.upper() if c.kind != "custom" else f"lam={c.value:g}"
    if isinstance(c, (int, float)):
        return f"lam={c:g}"
    return str(c).upper()


# --- harness -------------------------------------------------------------

@dataclass
class ScenarioResult:
    spec: ScenarioSpec
    methods: list
    # per method: list over replicates of (support tuple, criterion) or None
    selections: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)

    def failures(self, name: str) -> int:
        return sum(s is None for s in self.selections[name])

    def mean_metrics(self, name: str) -> dict:
        ms = [m for m in self.metrics[name] if m is not None]
        if not ms:
            return {"power": math.nan, "fp": math.nan, "fdr": math.nan, "mis": math.nan}
        return {k: float(np.mean([getattr(m, k) for m in ms]))
                for k in ("power", "fp", "fdr", "mis")}

    def criteria(self, name: str) -> np.ndarray:
        return np.array([math.nan if s is None else s[1] for s in self.selections[name]])

    def criterion_differences(self, a: str, b: str) -> np.ndarray:
        """Per-replicate criterion of ``a`` minus that of ``b`` (NaN where either failed)."""
        return self.criteria(a) - self.criteria(b)

    def table(self) -> list:
        rows = []
        for name in self.methods:
            row = {"method": name, **self.mean_metrics(name),
                   "replicates": self.spec.replicates, "failures": self.failures(name)}
            rows.append(row)
        return rows

    def write_table(self, path) -> None:
        rows = self.table()
        with open(path, "w", newline="") as fh:
            wr = csv.DictWriter(fh, fieldnames=list(rows[0]))
            wr.writeheader()
            for r in rows:
                wr.writerow({k: _fmt(v) for k, v in r.items()})

    def write_differences(self, path) -> None:
        names = self.methods
        pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1:]]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["replicate", "method_a", "method_b", "difference"])
            for a, b in pairs:
                for rep, d in enumerate(self.criterion_differences(a, b)):
                    wr.writerow([rep, a, b, _fmt(d)])


def _fmt(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return v


def _run_replicate(args):
    spec, methods, rep = args
    data, truth = make_replicate(spec, rep)
    p = spec.n - 1 if spec.family == SEGMENTATION else spec.p
    out = []
    for m in methods:
        try:
            support, crit = m.run(data)
            support = tuple(int(j) for j in support)
            out.append(((support, float(crit)), evaluate(support, truth, p)))
        except (NumericalError, np.linalg.LinAlgError, InvalidInputError) as exc:
            log.warning("replicate %d, method %s failed: %s", rep, m.name, exc)
            out.append((None, None))
    return out


def run_scenario(spec: ScenarioSpec, methods: Sequence, jobs: int = 1,
                 replicates: Optional[Sequence[int]] = None) -> ScenarioResult:
    """Run every method on every replicate of ``spec``.

    Failed method/replicate pairs are logged and excluded from the averages
    (see :meth:`ScenarioResult.failures`).
    """
    names = [m.name for m in methods]
    if len(set(names)) != len(names):
        raise InvalidInputError(f"method names must be unique: {names}")
    reps = range(spec.replicates) if replicates is None else replicates
    tasks = [(spec, list(methods), r) for r in reps]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            outs = list(ex.map(_run_replicate, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        outs = [_run_replicate(t) for t in tasks]
    res = ScenarioResult(spec=spec, methods=names)
    for i, name in enumerate(names):
        res.selections[name] = [o[i][0] for o in outs]
        res.metrics[name] = [o[i][1] for o in outs]
    return res


# --- scenario presets -----------------------------------------------------

def correlated_scenario(which: int, rho: float, replicates: int = 500, seed: int = 0) -> ScenarioSpec:
    """p = 15, n = 50, five effects of 0.5, sigma = 1.

    Scenario 1: compound symmetry, effects on regressors 0..4.
    Scenario 2: AR(1) correlation, effects on regressors 1, 4, 7, 10, 13.
    """
    if which == 1:
        return ScenarioSpec(n=50, p=15, true_support=range(5), effect=0.5, corr="cs",
                            rho=rho, sigma=1.0, replicates=replicates, seed=seed)
    if which == 2:
        return ScenarioSpec(n=50, p=15, true_support=(1, 4, 7, 10, 13), effect=0.5,
                            corr="ar1", rho=rho, sigma=1.0, replicates=replicates, seed=seed)
    raise InvalidInputError("scenario must be 1 or 2")


def high_dimensional_scenario(p: int, replicates: int = 1000, seed: int = 0) -> ScenarioSpec:
    """n = 100, 24 true regressors with N(0, 0.5^2) effects, independent design."""
    return ScenarioSpec(n=100, p=p, true_support=range(24), effect=("normal", 0.5),
                        corr="independent", sigma=1.0, replicates=replicates, seed=seed)


def glm_scenario(family: str, n: int = 300, p: int = 50, k: int = 10,
                 effect_sd: Optional[float] = None, replicates: int = 100,
                 seed: int = 0) -> ScenarioSpec:
    """Design entries N(0, 0.1^2); effects N(0, 1.5^2) (Poisson) or N(0, 3.5^2) (logistic)."""
    if effect_sd is None:
        effect_sd = 1.5 if family == POISSON else 3.5
    return ScenarioSpec(n=n, p=p, true_support=range(k), effect=("normal", effect_sd),
                        family=family, x_sd=0.1, replicates=replicates, seed=seed)


def segmentation_scenario(replicates: int = 200, seed: int = 0) -> ScenarioSpec:
    """n = 500, breakpoints at 100, 250, 375, means (-0.3, 0.7, 1.5, 0.5), unit noise."""
    return ScenarioSpec(n=500, family=SEGMENTATION, means=(-0.3, 0.7, 1.5, 0.5),
                        breakpoints=(100, 250, 375), sigma=1.0,
                        replicates=replicates, seed=seed)


# --- config files --------------------------------------------------------

def _parse_indices(text: str) -> tuple:
    out = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _parse_method(text: str):
    kind, *args = [t.strip() for t in text.split(":")]
    kind = kind.lower()
    if kind == "ar":
        crit = args[0] if args else "bic"
        rescale = float(args[1]) if len(args) > 1 else 4.0
        pre = int(args[2]) if len(args) > 2 else None
        return ARMethod(criterion=crit, rescale=rescale, prescreen=pre)
    if kind == "path":
        return PathMethod(criterion=args[0] if args else "bic")
    if kind in ("all-subset", "allsubset"):
        return AllSubsetMethod(criterion=args[0] if args else "bic")
    if kind == "stepwise":
        return StepwiseMethod(criterion=args[0] if args else "bic")
    if kind == "ar-seg":
        return ARSegmentMethod(scale=float(args[0]) if args else 6.0)
    if kind == "dp-seg":
        return DPSegmentMethod()
    raise InvalidInputError(f"unknown method {text!r}")


def load_scenario_config(path) -> tuple[ScenarioSpec, list]:
    """Read an INI-style scenario file.

    ::

        [scenario]
        family = linear
        n = 50
        p = 15
        support = 0-4          # 0-based, ranges allowed
        effect = 0.5           # or normal:0.5
        corr = cs
        rho = 0.4
        sigma = 1
        replicates = 500
        seed = 0

        [methods]
        methods = all-subset:bic, ar:bic:4
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if not cp.read(path):
        raise FileNotFoundError(path)
    s = cp["scenario"]
    kw = {"n": s.getint("n"), "family": s.get("family", LINEAR),
          "replicates": s.getint("replicates", 1), "seed": s.getint("seed", 0),
          "sigma": s.getfloat("sigma", 1.0)}
    if kw["family"] == SEGMENTATION:
        kw["means"] = tuple(float(v) for v in s.get("means").split(","))
        kw["breakpoints"] = _parse_indices(s.get("breakpoints"))
    else:
        kw["p"] = s.getint("p")
        kw["true_support"] = _parse_indices(s.get("support", ""))
        eff = s.get("effect", "0.5")
        kw["effect"] = ("normal", float(eff.split(":")[1])) if eff.startswith("normal") else float(eff)
        kw["corr"] = s.get("corr", "independent")
        kw["rho"] = s.getfloat("rho", 0.0)
        kw["x_sd"] = s.getfloat("x_sd", 1.0)
    spec = ScenarioSpec(**kw)
    methods = [_parse_method(m) for m in cp.get("methods", "methods", fallback="").split(",") if m.strip()]
    return spec, methods
