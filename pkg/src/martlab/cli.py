"""Experiment runner and command line entry point.

    martlab run --config exp.cfg [--seed N] [--paths N] [--out DIR] [--threads N]
    martlab run --model A --param a=1 --paths 1000000
    martlab models

Exit codes: 0 success, 1 config error, 2 I/O error, 3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import checks as chk
from . import tails
from .config import ConfigError, ExperimentConfig, config_from_dict, parse_kv
from .models import CATALOG, ModelKind, ModelSpec, sample_terminals

log = logging.getLogger("martlab")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_INVARIANT = 0, 1, 2, 3
CSV_VERSION = "v1"


def qv_cap(model: ModelSpec) -> float:
    """<M> accrued by a path that is still running at the horizon cap."""
    t = model.horizon_cap
    if model.kind is ModelKind.RANDOM_WALK_ATOMS_UPPER:
        return float(math.floor(t))
    return model.sigma**2 * t + model.jump_qv_rate * t


@dataclass
class ExperimentReport:
    model: dict
    n_total: int
    n_censored: int
    mean_terminal: dict
    curves: dict
    limits: dict
    tauberian: dict
    checks: dict
    class_d_verdict: str
    status: str = "ok"
    warnings: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    def payload(self) -> dict:
        """Everything except wall-clock figures; identical across reruns and worker counts."""
        d = dataclasses.asdict(self)
        d.pop("timing")
        return d

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _est(e: tails.Estimate) -> dict:
    return {"value": e.value, "se": e.se}


def _curve_dict(c: tails.TailCurve) -> dict:
    return {"mode": c.mode.value, "n": c.n_samples, "lambda": c.lambdas.tolist(),
            "value": c.values.tolist(), "std_error": c.std_errors.tolist()}


def _model_dict(m: ModelSpec) -> dict:
    d = dataclasses.asdict(m)
    d["kind"] = m.kind.value
    return d


def run_experiment(config: ExperimentConfig, write: bool = True) -> ExperimentReport:
    model = config.model
    t0 = time.perf_counter()
    batch = sample_terminals(model, config.master_seed, config.n_paths, step=config.step, threads=config.threads)
    t_sample = time.perf_counter() - t0
    warnings = []

    cap_qv = qv_cap(model)
    sqrt_cap = math.sqrt(cap_qv)
    if config.big_lambdas is None:
        big_qv = tails.default_big_lambdas(batch.qv_pred, cap_qv)
        big_neg = tails.default_big_lambdas(batch.sup_neg, cap_qv, tails.TailMode.PLAIN_TAIL)
    else:
        big_qv = big_neg = np.asarray(config.big_lambdas, dtype=float)
    curve_pred = tails.empirical_tail_curve(batch.qv_pred, big_qv, cap=sqrt_cap)
    curve_opt = tails.empirical_tail_curve(batch.qv_opt, big_qv, cap=sqrt_cap)
    curve_neg = tails.sup_neg_tail_curve(batch.sup_neg, big_neg)
    mean = tails.mean_terminal(batch.m_inf, batch.censored)
    taub = tails.tauberian_compare(batch.qv_pred, config.small_lambdas, big_qv, batch.m_inf, batch.censored,
                                   cap=sqrt_cap)
    verdict = tails.class_d_diagnostic([curve_pred, curve_opt, curve_neg])

    limits = {}
    for name, c in (("qv_pred", curve_pred), ("qv_opt", curve_opt), ("sup_neg", curve_neg)):
        limits[name] = {"plateau": _est(tails.plateau(c)), "extrapolated": _est(tails.extrapolate_tail(c))}

    lap_rows = []
    n_cens = int(batch.censored.sum())
    for lam in config.small_lambdas:
        e = tails.laplace_side(batch.qv_pred, lam)
        lap_rows.append((lam, e.value, e.se, tails.laplace_censoring_bias(n_cens, len(batch), lam, cap_qv)))

    results = {}
    enabled = config.checks_enabled
    if "mean_one" in enabled:
        results["mean_one"] = [dataclasses.asdict(chk.mean_one_density_check(model, lam, batch=batch))
                               for lam in config.check_lambdas if abs(lam) <= model.epsilon]
    if "sandwich" in enabled:
        s = chk.sandwich_check(model, config.small_lambdas, batch=batch)
        results["sandwich"] = {"fraction": s.fraction, "n_pairs": s.n_pairs, "lambdas": list(s.lambdas),
                               "skipped_lambdas": list(s.skipped_lambdas), "n_violations": len(s.violations)}
        if s.n_pairs and s.fraction != 1.0:
            raise chk.InvariantViolation(f"sandwich bounds violated: {s.violations[:1]}")
    if "bdg" in enabled and model.jump_bound > 0:
        sweep = chk.bdg_sweep(model, config.check_horizons, n_paths=config.check_paths, seed=config.master_seed,
                              step=config.step, threads=config.threads)
        results["bdg"] = {"points": [dataclasses.asdict(p) for p in sweep.points], "variation": sweep.variation}
    if "zeta" in enabled:
        results["zeta"] = dataclasses.asdict(chk.theorem2_condition_check(model, config.small_lambdas, batch=batch))

    frac = batch.censored_fraction
    if frac > config.censor_threshold:
        warnings.append(f"censored fraction {frac:.4g} above threshold {config.censor_threshold}")
    wall = time.perf_counter() - t0
    report = ExperimentReport(
        model=_model_dict(model),
        n_total=len(batch),
        n_censored=n_cens,
        mean_terminal=_est(mean),
        curves={"qv_pred": _curve_dict(curve_pred), "qv_opt": _curve_dict(curve_opt),
                "sup_neg": _curve_dict(curve_neg)},
        limits=limits,
        tauberian={"laplace_limit": _est(taub.laplace_limit), "tail_limit": _est(taub.tail_limit),
                   "ratio": _est(taub.ratio), "mean_terminal": _est(taub.mean_terminal),
                   "sqrt_2_over_pi_times_mean": tails.SQRT_2_OVER_PI * mean.value},
        checks=results,
        class_d_verdict=verdict.value,
        status="warning" if warnings else "ok",
        warnings=warnings,
        timing={"wall_seconds": wall, "sampling_seconds": t_sample,
                "paths_per_second": len(batch) / t_sample if t_sample > 0 else math.inf},
    )
    if write:
        write_outputs(report, config, [curve_pred, curve_opt, curve_neg], lap_rows)
    return report


def write_outputs(report: ExperimentReport, config: ExperimentConfig, curves, lap_rows):
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    tag = f"model={config.model.kind.value}; seed={config.master_seed}; n={report.n_total}"
    for name, c in zip(("tails_qvpred.csv", "tails_qvopt.csv", "tails_supneg.csv"), curves):
        c.to_csv(os.path.join(out, name), tag)
    with open(os.path.join(out, "laplace.csv"), "w", newline="") as fh:
        fh.write(f"# martlab laplace side {CSV_VERSION}; {tag}\n")
        fh.write("lambda,value,std_error,n,censoring_bias_bound\n")
        for lam, v, se, bias in lap_rows:
            fh.write(f"{float(lam)!r},{float(v)!r},{float(se)!r},{report.n_total},{float(bias)!r}\n")
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def list_models() -> list[dict]:
    return [dict(name=k.value, **CATALOG[k]) for k in ModelKind]


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _build_config(args) -> ExperimentConfig:
    kv = {}
    if args.config:
        with open(args.config) as fh:
            kv = parse_kv(fh.read())
    if args.model:
        kv["model.kind"] = args.model
    for k, v in _parse_params(args.param).items():
        kv[k if k.startswith("model.") else f"model.{k}"] = v
    for flag, key in ((args.seed, "master_seed"), (args.paths, "n_paths"), (args.out, "output_dir"),
                      (args.threads, "threads")):
        if flag is not None:
            kv[key] = str(flag)
    return config_from_dict(kv)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="martlab", description="Monte Carlo tail asymptotics of stopped martingales")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--config", help="key = value config file")
    run.add_argument("--seed", type=int, help="master seed (overrides config; default 0)")
    run.add_argument("--paths", type=int, help="number of paths")
    run.add_argument("--out", help="output directory (default ./out)")
    run.add_argument("--threads", type=int, help="worker threads")
    run.add_argument("--model", help="model letter or name, e.g. A or StoppedBrownianUpper")
    run.add_argument("--param", action="append", metavar="KEY=VALUE", help="model parameter override")
    run.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("models", help="list the model catalog")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "models":
        for entry in list_models():
            print(f"{entry['letter']}  {entry['name']}: {entry['summary']}")
            print(f"   params: {', '.join(f'{k} ({v})' for k, v in entry['params'].items())}")
            print(f"   oracles: {', '.join(entry['oracles'])}")
        return EXIT_OK
    try:
        config = _build_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        report = run_experiment(config)
    except chk.InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    t = report.tauberian
    print(f"model {report.model['kind']}: n={report.n_total} censored={report.n_censored} status={report.status}")
    print(f"  mean M_inf        {report.mean_terminal['value']:.5f} +- {report.mean_terminal['se']:.5f}")
    print(f"  tail plateau      {t['tail_limit']['value']:.5f} +- {t['tail_limit']['se']:.5f}"
          f"   (sqrt(2/pi) E M_inf = {t['sqrt_2_over_pi_times_mean']:.5f})")
    print(f"  laplace limit     {t['laplace_limit']['value']:.5f} +- {t['laplace_limit']['se']:.5f}")
    print(f"  ratio             {t['ratio']['value']:.5f} +- {t['ratio']['se']:.5f}")
    print(f"  class D verdict   {report.class_d_verdict}")
    print(f"  throughput        {report.timing['paths_per_second']:.4g} paths/s")
    for w in report.warnings:
        print(f"  warning: {w}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
