"""`stin` command line: simulate (one operating point), sweep (axis grid),
convergence (single-run iteration trace).

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

import argparse
import dataclasses
import math
import sys

import numpy as np

from .decouple import MECHANISMS, ReportValues
from .harness import (AXES, METHODS, SweepSpec, run_trial, sweep,
                      trial_seed_key, write_outputs)
from .scenario import ConfigError, SystemConfig, load_config


def _load_cfg(args, **extra):
    cfg = load_config(args.config) if args.config else SystemConfig()
    over = dict(extra)
    if getattr(args, "seed", None) is not None:
        over["seed"] = int(args.seed)
    if over:
        cfg = dataclasses.replace(cfg, **over)
    return cfg.validate()


def parse_values(text):
    """Axis values: 'start:step:stop' (inclusive) or a comma list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range syntax is start:step:stop (got {text!r})")
        start, step, stop = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError("range step must be > 0")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(start + i * step for i in range(max(n, 0)))
    vals = tuple(float(t) for t in text.split(",") if t.strip())
    if not vals:
        raise ConfigError(f"no axis values in {text!r}")
    return vals


def _summarize(results, axis, axis_value, method):
    sums = [r.sum_rate for r in results]
    n = len(sums)
    mean = float(np.mean(sums)) if n else float("nan")
    stderr = float(np.std(sums, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    mech = results[0].mechanism if results else "none"
    return [(axis, axis_value, method, mech, mean, stderr, n)]


def cmd_simulate(args):
    cfg = _load_cfg(args)
    reports = ReportValues.load(args.reports) if args.reports else None
    results = []
    for t in range(args.trials):
        seed = trial_seed_key(cfg.seed, 0, 0, t)
        results.append(run_trial(cfg, args.method, seed,
                                 mechanism=args.mechanism,
                                 avg_samples=args.avg_samples,
                                 reports=reports, trace=args.trace))
    summary = _summarize(results, "snr", cfg.snr_db, args.method)
    cdf = [(args.method, float(r)) for res in results for r in res.user_rates]
    trace_rows = [row for res in results if res.trace is not None
                  for row in res.trace.rows] if args.trace else None
    for path in write_outputs(summary, cdf, args.out, trace_rows):
        print(path)
    return 0


def cmd_sweep(args):
    cfg = _load_cfg(args)
    spec = SweepSpec(base=cfg, axis=args.axis,
                     values=parse_values(args.values),
                     methods=tuple(m.strip() for m in args.methods.split(",")
                                   if m.strip()),
                     trials=args.trials, avg_samples=args.avg_samples,
                     trace=args.trace)
    summary, cdf, trace_rows = sweep(spec, workers=args.workers)
    for path in write_outputs(summary, cdf, args.out,
                              trace_rows if args.trace else None):
        print(path)
    return 0


def cmd_convergence(args):
    cfg = _load_cfg(args, snr_db=float(args.snr))
    res = run_trial(cfg, args.method, trial_seed_key(cfg.seed, 0, 0, 0),
                    trace=True)
    summary = _summarize([res], "snr", cfg.snr_db, args.method)
    cdf = [(args.method, float(r)) for r in res.user_rates]
    for path in write_outputs(summary, cdf, args.out, res.trace.rows):
        print(path)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stin",
        description="Rate-splitting precoder simulation for integrated "
                    "satellite-terrestrial networks")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--out", default="stin", help="output file prefix")

    p = sub.add_parser("simulate", help="Monte-Carlo trials at one point")
    common(p)
    p.add_argument("--method", required=True, choices=sorted(METHODS))
    p.add_argument("--mechanism", choices=MECHANISMS,
                   help="report mechanism override for gpi methods")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--reports", help="inject a precomputed report file")
    p.add_argument("--avg-samples", type=int, default=1000)
    p.add_argument("--trace", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="grid over an axis and several methods")
    common(p)
    p.add_argument("--axis", default="snr", choices=AXES)
    p.add_argument("--values", default="0:5:30",
                   help="'start:step:stop' or comma list")
    p.add_argument("--methods", default="gpi-avg,slnr,zf")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--avg-samples", type=int, default=1000)
    p.add_argument("--trace", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("convergence", help="per-iteration trace of one run")
    common(p)
    p.add_argument("--snr", type=float, default=15.0)
    p.add_argument("--method", default="gpi-ins", choices=sorted(METHODS))
    p.set_defaults(func=cmd_convergence)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
