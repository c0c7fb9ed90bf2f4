"""Realized variance error of the Euler path of stopped Brownian motion against the step size.

Prints RMS(sum of squared increments - elapsed time) for a ladder of steps;
successive ratios near sqrt(ratio of steps) indicate order 1/2.
"""
import argparse
import math

import numpy as np

from martlab import models
from martlab.quadvar import realized_qv_grid
from martlab.rng import Seed


def rms_error(model, h, n, seed):
    err = np.empty(n)
    for i in range(n):
        p = models.generate_path(model, Seed(seed, i), h)
        err[i] = realized_qv_grid(p.cont_values) - p.end_time
    return math.sqrt(np.mean(err**2))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--t-max", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    model = models.stopped_brownian_upper(a=args.a, horizon_cap=args.t_max)
    prev = None
    for h in (4e-3, 1e-3, 2.5e-4):
        r = rms_error(model, h, args.paths, args.seed)
        extra = f"  ratio to previous {prev / r:.3f}" if prev else ""
        print(f"h={h:<8g} RMS {r:.5f}  sqrt(2h) {math.sqrt(2 * h):.5f}{extra}")
        prev = r
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
