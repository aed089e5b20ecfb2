"""Command-line front end.

Subcommands: ``fit``, ``path``, ``segment``, ``simulate`` and ``oracle``.
Every run writes its artifacts into ``--out`` together with a
``summary.json`` that echoes the full configuration.

Exit codes: 0 ok, 2 input error, 3 numerical failure, 4 non-convergence
(artifacts are still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .core import ARConfig, InvalidInputError, NumericalError
from .glm import FAMILIES, GlmDataset, bic, default_grid, fit_ml, nr_ar, regularization_path
from .linreg import ar_linear, estimate_sigma2, l0_criterion, standardize
from .ortho import ScalarDynamics, fixed_points, xfx_curve
from .segmentation import ar_segment, default_lambda, dp_exact_segment
from .selection import Criterion, all_subset_select
from .simulation import load_scenario_config, run_scenario

log = logging.getLogger("l0ridge")

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_NOCONV = 0, 2, 3, 4

DEFAULT_RESCALE = {"linear": 4.0, "poisson": 4.0, "logistic": 5.0, "segmentation": 6.0}


class NotConverged(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    inputs: list = field(default_factory=list)
    family: str = "linear"
    criterion: str = "bic"
    lam: Optional[float] = None
    lambda_tilde: Optional[float] = None
    rescale: Optional[float] = None
    delta: float = 1e-5
    gamma: float = 2.0
    q: float = 0.0
    max_iter: int = 1000
    tol: float = 1e-8
    seed: int = 0
    jobs: int = 1
    out: str = "."
    response: Optional[str] = None
    sigma2: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lam is not None and self.lambda_tilde is not None:
            raise InvalidInputError("give either --lambda (with --rescale) or --lambda-tilde, not both")
        if self.lambda_tilde is not None and self.rescale is not None:
            raise InvalidInputError("--rescale only applies together with --lambda or --criterion")

    def effective_rescale(self) -> float:
        return self.rescale if self.rescale is not None else DEFAULT_RESCALE.get(self.family, 4.0)

    def ar_config(self, lambda_tilde: float) -> ARConfig:
        return ARConfig(lambda_tilde=lambda_tilde, q=self.q, gamma=self.gamma, delta=self.delta,
                        max_iter=self.max_iter, conv_tol=self.tol)


# --- I/O -----------------------------------------------------------------

def fmt(v) -> str:
    """17 significant digits: enough for an exact float round trip."""
    return format(float(v), ".17g")


def read_table(path, response: Optional[str] = None):
    """Read a numeric CSV with a header row.

    Returns ``(names, X, y)``; the response is the named column or, by
    default, the last one. With ``response=""`` every column is returned in
    ``X`` and ``y`` is None.
    """
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise InvalidInputError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:]])
    except ValueError as exc:
        raise InvalidInputError(f"{path}: non-numeric entry ({exc})") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise InvalidInputError(f"{path}: rows do not all have {len(header)} columns")
    if response == "":
        return header, data, None
    col = len(header) - 1 if response is None else _column(header, response, path)
    names = header[:col] + header[col + 1:]
    return names, np.delete(data, col, axis=1), data[:, col]


def _column(header, name, path):
    if name in header:
        return header.index(name)
    raise InvalidInputError(f"{path}: no column named {name!r}")


def read_signal(path, response: Optional[str] = None) -> np.ndarray:
    header, data, _ = read_table(path, "")
    col = 0 if response is None else _column(header, response, path)
    return data[:, col]


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def write_summary(out: Path, cfg: RunConfig, body: dict):
    body = {"version": __version__, **body, "config": asdict(cfg)}
    with open(out / "summary.json", "w") as fh:
        json.dump(_jsonable(body), fh, indent=2)
        fh.write("\n")


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _single_input(cfg: RunConfig):
    if len(cfg.inputs) != 1:
        raise InvalidInputError(f"{cfg.subcommand} expects exactly one input file")
    return cfg.inputs[0]


def _positive_float(text, what) -> float:
    try:
        v = float(text)
    except ValueError:
        raise InvalidInputError(f"{what} must be a number, got {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise InvalidInputError(f"{what} must be positive and finite, got {text!r}")
    return v


def _penalties(cfg: RunConfig, n: int, p: int) -> tuple[float, float]:
    """(criterion lambda, AR lambda_tilde)."""
    if cfg.lam is not None:
        lam = cfg.lam
    elif cfg.family == "segmentation":
        lam = default_lambda(n)
    else:
        lam = Criterion(cfg.criterion, n, p).penalty
    lt = cfg.lambda_tilde if cfg.lambda_tilde is not None else lam / cfg.effective_rescale()
    return lam, lt


# --- subcommands ---------------------------------------------------------

def cmd_fit(cfg: RunConfig) -> int:
    names, X, y = read_table(_single_input(cfg), cfg.response)
    out = _out_dir(cfg)
    n, p = X.shape
    lam, lt = _penalties(cfg, n, p)
    ar_cfg = cfg.ar_config(lt)
    body = {"family": cfg.family, "criterion_lambda": lam, "lambda_tilde": lt}
    if cfg.family == "linear":
        data = standardize(X, y)
        if cfg.sigma2 in (None, "estimate"):
            s2 = estimate_sigma2(data) if cfg.sigma2 == "estimate" else 1.0
        else:
            s2 = _positive_float(cfg.sigma2, "--sigma2")
        data = data.with_sigma2(s2)
        res = ar_linear(data, ar_cfg)
        refit = l0_criterion(data, res.support, lam)
        intercept, slopes = data.to_raw_scale(res.beta)
        full = np.zeros(p)
        full[refit.support] = refit.beta_ml
        _, refit_slopes = data.to_raw_scale(full)
        crit = refit.criterion
        body.update(intercept=intercept, sigma2=s2)
    else:
        data = GlmDataset(X, y, cfg.family)
        res = nr_ar(data, ar_cfg)
        beta_ml, _ = fit_ml(data, res.support)
        slopes = res.beta
        refit_slopes = np.zeros(p)
        refit_slopes[res.support] = beta_ml
        crit = bic(data, res.support, lam)
    sel = np.zeros(p, dtype=int)
    sel[res.support] = 1
    write_csv(out / "coefficients.csv", ["index", "name", "beta", "beta_refit", "selected"],
              [(j, names[j], slopes[j], refit_slopes[j], sel[j]) for j in range(p)])
    body.update(support=res.support, support_names=[names[j] for j in res.support],
                criterion=crit, iterations=res.iterations, converged=res.converged)
    write_summary(out, cfg, body)
    if not res.converged:
        raise NotConverged(f"no convergence after {res.iterations} iterations")
    return EXIT_OK


def cmd_path(cfg: RunConfig) -> int:
    names, X, y = read_table(_single_input(cfg), cfg.response)
    if cfg.family not in FAMILIES:
        raise InvalidInputError(f"path supports the GLM families {FAMILIES}")
    if cfg.lambda_tilde is not None:
        raise InvalidInputError("path scans a grid; --lambda-tilde does not apply")
    out = _out_dir(cfg)
    data = GlmDataset(X, y, cfg.family)
    lam, _ = _penalties(cfg, data.n, data.p)
    grid = default_grid(data.n, int(cfg.extra.get("grid_size", 50)))
    path = regularization_path(data, grid, cfg.ar_config(float(grid[0])), criterion_lambda=lam)
    rows = []
    for pt in path:
        beta = pt.result.beta if pt.result is not None else np.full(data.p, np.nan)
        k = len(pt.result.support) if pt.result is not None else -1
        conv = int(pt.result.converged) if pt.result is not None else 0
        rows.append([pt.lambda_tilde, pt.bic, k, conv, *beta])
    write_csv(out / "path.csv", ["lambda_tilde", "criterion", "n_selected", "converged",
                                 *[f"beta_{nm}" for nm in names]], rows)
    best = path.best
    body = {"family": cfg.family, "criterion_lambda": lam, "grid": grid,
            "best_lambda_tilde": best.lambda_tilde, "best_criterion": best.bic,
            "best_support": best.result.support,
            "failed_points": [pt.lambda_tilde for pt in path if pt.result is None],
            "converged": all(pt.result.converged for pt in path if pt.result is not None)}
    write_summary(out, cfg, body)
    if not body["converged"]:
        raise NotConverged("some path points did not converge")
    return EXIT_OK


def cmd_segment(cfg: RunConfig) -> int:
    y = read_signal(_single_input(cfg), cfg.response)
    out = _out_dir(cfg)
    cfg.family = "segmentation"
    lam, lt = _penalties(cfg, y.size, y.size - 1)
    fit = ar_segment(y, lt, cfg.ar_config(lt), criterion_lambda=lam)
    starts = set(fit.breakpoints.tolist())
    write_csv(out / "segments.csv", ["index", "y", "mu_ar", "mu", "breakpoint"],
              [(i, y[i], fit.ar.beta[i], fit.mu[i], int(i in starts)) for i in range(y.size)])
    body = {"n": y.size, "criterion_lambda": lam, "lambda_tilde": lt,
            "breakpoints": fit.breakpoints, "n_segments": fit.n_segments,
            "criterion": fit.criterion, "iterations": fit.ar.iterations,
            "converged": fit.ar.converged}
    write_summary(out, cfg, body)
    if not fit.ar.converged:
        raise NotConverged(f"no convergence after {fit.ar.iterations} iterations")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    path = Path(_single_input(cfg))
    if not path.is_file():
        raise InvalidInputError(f"scenario file not found: {path}")
    spec, methods = load_scenario_config(path)
    if not methods:
        raise InvalidInputError(f"{path}: no methods listed under [methods]")
    if cfg.extra.get("seed_given"):
        spec = spec.with_(seed=cfg.seed)
    if cfg.extra.get("replicates"):
        spec = spec.with_(replicates=int(cfg.extra["replicates"]))
    out = _out_dir(cfg)
    res = run_scenario(spec, methods, jobs=cfg.jobs)
    res.write_table(out / "table.csv")
    res.write_differences(out / "differences.csv")
    write_summary(out, cfg, {"scenario": asdict(spec), "table": res.table(),
                             "failures": {m: res.failures(m) for m in res.methods}})
    return EXIT_OK


def cmd_oracle(cfg: RunConfig) -> int:
    kind = cfg.extra.get("kind")
    out = _out_dir(cfg)
    if kind == "all-subset":
        names, X, y = read_table(_single_input(cfg), cfg.response)
        data = standardize(X, y, 1.0 if cfg.sigma2 is None else _positive_float(cfg.sigma2, "--sigma2"))
        lam, _ = _penalties(cfg, data.n, data.p)
        fit = all_subset_select(data, Criterion.custom(lam, data.n, data.p))
        full = np.zeros(data.p)
        full[fit.support] = fit.beta_ml
        _, slopes = data.to_raw_scale(full)
        sel = np.zeros(data.p, dtype=int)
        sel[fit.support] = 1
        write_csv(out / "coefficients.csv", ["index", "name", "beta_refit", "selected"],
                  [(j, names[j], slopes[j], sel[j]) for j in range(data.p)])
        body = {"kind": kind, "criterion_lambda": lam, "support": fit.support,
                "criterion": fit.criterion}
    elif kind == "dp":
        y = read_signal(_single_input(cfg), cfg.response)
        lam = default_lambda(y.size) if cfg.lam is None else cfg.lam
        k_max = int(cfg.extra.get("k_max") or y.size)
        fit = dp_exact_segment(y, k_max, lam)
        starts = set(fit.breakpoints.tolist())
        write_csv(out / "segments.csv", ["index", "y", "mu", "breakpoint"],
                  [(i, y[i], fit.mu[i], int(i in starts)) for i in range(y.size)])
        body = {"kind": kind, "criterion_lambda": lam, "k_max": k_max,
                "breakpoints": fit.breakpoints, "criterion": fit.criterion}
    elif kind == "dynamics-curve":
        b, K = cfg.extra.get("beta_hat"), cfg.extra.get("K")
        if b is None or K is None:
            raise InvalidInputError("dynamics-curve needs --beta-hat and --K")
        dyn = ScalarDynamics(float(b), float(K), cfg.delta)
        x, fx = xfx_curve(dyn.beta_hat, dyn.K, dyn.delta)
        write_csv(out / "curve.csv", ["x", "x_f_x"], zip(x, fx))
        fp = fixed_points(dyn)
        body = {"kind": kind, "beta_hat": dyn.beta_hat, "K": dyn.K, "roots": fp.roots,
                "classification": fp.classification, "predicted_limit": fp.predicted_limit,
                "selected": fp.selected}
    else:
        raise InvalidInputError("oracle needs --kind all-subset, dp or dynamics-curve")
    write_summary(out, cfg, body)
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "path": cmd_path, "segment": cmd_segment,
            "simulate": cmd_simulate, "oracle": cmd_oracle}


# --- argument parsing ----------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", default="linear", choices=["linear", *FAMILIES])
    common.add_argument("--criterion", default="bic", choices=["aic", "bic", "mbic"])
    common.add_argument("--lambda", dest="lam", type=float,
                        help="criterion penalty per parameter (overrides --criterion)")
    common.add_argument("--lambda-tilde", type=float, help="explicit AR penalty")
    common.add_argument("--rescale", type=float,
                        help="lambda_tilde = lambda / rescale (defaults: linear 4, "
                             "poisson 4, logistic 5, segmentation 6)")
    common.add_argument("--delta", type=float, default=1e-5)
    common.add_argument("--gamma", type=float, default=2.0)
    common.add_argument("--q", type=float, default=0.0)
    common.add_argument("--max-iter", type=int, default=1000)
    common.add_argument("--tol", type=float, default=1e-8)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--out", default=".")
    common.add_argument("--response", help="response column name (default: last column)")
    common.add_argument("--sigma2", help="known error variance, or 'estimate' (default 1)")

    ap = _Parser(prog="l0ridge", description="L0 adaptive ridge model selection")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    sub.add_parser("fit", parents=[common], help="one adaptive ridge fit").add_argument("input")
    p = sub.add_parser("path", parents=[common], help="GLM regularization path")
    p.add_argument("input")
    p.add_argument("--grid-size", type=int, default=50)
    sub.add_parser("segment", parents=[common], help="AR segmentation").add_argument("input")
    p = sub.add_parser("simulate", parents=[common], help="run a scenario file")
    p.add_argument("input")
    p.add_argument("--replicates", type=int)
    p = sub.add_parser("oracle", parents=[common], help="exact reference solvers")
    p.add_argument("input", nargs="?")
    p.add_argument("--kind", required=True, choices=["all-subset", "dp", "dynamics-curve"])
    p.add_argument("--k-max", type=int)
    p.add_argument("--beta-hat", type=float)
    p.add_argument("--K", type=float)
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    extra = {}
    for key in ("grid_size", "replicates", "kind", "k_max", "beta_hat", "K"):
        if getattr(ns, key, None) is not None:
            extra[key] = getattr(ns, key)
    extra["seed_given"] = ns.seed is not None
    return RunConfig(
        subcommand=ns.subcommand, inputs=[ns.input] if getattr(ns, "input", None) else [],
        family=ns.family, criterion=ns.criterion, lam=ns.lam, lambda_tilde=ns.lambda_tilde,
        rescale=ns.rescale, delta=ns.delta, gamma=ns.gamma, q=ns.q, max_iter=ns.max_iter,
        tol=ns.tol, seed=0 if ns.seed is None else ns.seed, jobs=ns.jobs, out=ns.out,
        response=ns.response, sigma2=ns.sigma2, extra=extra)


def _setup_logging():
    level = os.environ.get("L0RIDGE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.subcommand](cfg)
    except (InvalidInputError, FileNotFoundError) as exc:
        print(f"l0ridge: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"l0ridge: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NotConverged as exc:
        print(f"l0ridge: warning: {exc}", file=sys.stderr)
        return EXIT_NOCONV


if __name__ == "__main__":
    sys.exit(main())
