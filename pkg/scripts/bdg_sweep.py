"""Ratio E sup L^2 / (K^2 E<M>) over a horizon sweep for the jump models."""
import argparse

import numpy as np

from martlab import checks, models


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--horizons", default="10,100,1000")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    horizons = [float(h) for h in args.horizons.split(",")]
    cases = [
        ("C", models.compensated_poisson_upper(), 1e-3),
        ("D a=b=1", models.jump_diffusion_two_sided(), 1e-3),
        ("D a=b=10", models.jump_diffusion_two_sided(a=10.0, b=10.0), 1e-2),
        ("E", models.random_walk_atoms_upper(), 1e-3),
    ]
    for name, model, h in cases:
        sweep = checks.bdg_sweep(model, horizons, n_paths=args.paths, seed=args.seed, step=h)
        cells = "  ".join(f"t={p.horizon:g}: {p.ratio:.4f}+-{p.se:.4f}" for p in sweep.points)
        print(f"{name:9s} {cells}  variation {sweep.variation:.1%}  finite {sweep.finite}")
    return 0


if __name__ == "__main__":
    np.set_printoptions(precision=4)
    raise SystemExit(main())
