"""Curves x f(x) of the scalar AR map and their fixed points.

One CSV per (beta_hat, K) pair, plus a summary of roots, their type and the
limit reached from the ridge start.
"""

import argparse
import csv
from pathlib import Path

from l0ridge.ortho import ScalarDynamics, fixed_points, iterate, xfx_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--beta-hat", type=float, nargs="+", default=[0.9])
    ap.add_argument("--K", type=float, nargs="+", default=[0.05, 0.1, 0.2, 0.3])
    ap.add_argument("--delta", type=float, default=1e-5)
    ap.add_argument("--out", type=Path, default=Path("results/dynamics"))
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    for b in args.beta_hat:
        for K in args.K:
            dyn = ScalarDynamics(b, K, args.delta)
            fp = fixed_points(dyn)
            x, y = xfx_curve(b, K, args.delta)
            with open(args.out / f"curve_b{b:g}_K{K:g}.csv", "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(["x", "xfx"])
                wr.writerows(zip(x.tolist(), y.tolist()))
            roots = ", ".join(f"{r:.6g} ({k})" for r, k in zip(fp.roots, fp.classification))
            print(f"beta_hat={b:g} K={K:g}: {roots}; limit {fp.predicted_limit:.6g} "
                  f"(iterated {iterate(dyn, 10_000):.6g}), selected={fp.selected}")


if __name__ == "__main__":
    main()
