"""Monte-Carlo harness: trial pipeline, sweeps, and CSV emission.

A trial is: place users -> draw a fading block -> estimate CSIT -> obtain
reports -> design precoders -> score on the *true* channels.  Sweeps repeat
trials over an axis (snr, sat_antennas, kt_int) and methods; per-trial RNG
streams derive from (master seed, axis index, method index, trial index), so
results are byte-identical for any worker count.
"""

import concurrent.futures
import csv
import dataclasses
import math

import numpy as np

from . import baselines
from . import gpi as gpi_mod
from .channel import draw_channels, mmse_estimate, spatial_covariances
from .decouple import compute_reports, instantaneous_reports, zero_reports
from .rates import build_quadratic_forms, true_instantaneous_rates, unstack
from .scenario import ConfigError, link_budget, place_users

# method name -> (kind, report mechanism, rate splitting at evaluation)
METHODS = {
    "gpi-ins": ("gpi", "instantaneous", True),
    "gpi-avg": ("gpi", "average", True),
    "gpi-zero": ("gpi", "zero", True),
    "slnr": ("slnr", None, False),
    "zf": ("zf", None, False),
    "zf-local": ("zf-local", None, False),
}
AXES = ("snr", "sat_antennas", "kt_int")


@dataclasses.dataclass
class TrialResult:
    method: str
    mechanism: str
    sum_rate: float
    r_c: float
    r_p_su: np.ndarray
    r_p_tu: np.ndarray
    user_rates: np.ndarray     # per-user attribution (SUs then TUs)
    converged: bool
    res_sat: float
    res_bs: float
    fallback: bool
    trace: object = None       # GpiTrace when requested


def resolve_method(method, mechanism=None):
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from "
                          + ", ".join(sorted(METHODS)))
    kind, mech, rs = METHODS[method]
    if mechanism is not None and kind == "gpi":
        mech = mechanism
    return kind, mech, rs


def run_trial(cfg, method, trial_seed, mechanism=None, avg_samples=1000,
              reports=None, trace=False, design_passes=2):
    """Run one full trial; `trial_seed` seeds every random stage of it."""
    kind, mech, rs_enabled = resolve_method(method, mechanism)
    rng = np.random.default_rng(trial_seed)

    placement = place_users(cfg, rng)
    budget = link_budget(cfg, placement)
    covs = spatial_covariances(cfg, placement, budget)
    real = draw_channels(cfg, placement, covs, rng)
    csit = mmse_estimate(real, covs, cfg, rng)
    forms = build_quadratic_forms(csit, cfg)

    fallback = False
    if kind == "gpi":
        settings = gpi_mod.GpiSettings.from_config(cfg, track_residuals=trace)
        init = gpi_mod.mrt_init(csit, cfg)
        if mech == "instantaneous":
            # the satellite needs this block's BS design before it can start
            v, rows_bs, info_bs = gpi_mod.run_bs_stage(
                forms.bs, init.v_bar, settings)
            rep = instantaneous_reports(forms.bs, v)
            f, rows_sat, info_sat = gpi_mod.run_sat_stage(
                forms.sat, rep, init.f_bar, settings,
                const_term=info_bs["objective"])
            p = gpi_mod.StackedPrecoders(f_bar=f, v_bar=v)
            run_trace = gpi_mod.GpiTrace(
                rows=rows_bs + rows_sat,
                converged_sat=info_sat["converged"],
                converged_bs=info_bs["converged"],
                iters_sat=info_sat["iters"], iters_bs=info_bs["iters"],
                used_best_sat=info_sat["used_best"],
                used_best_bs=info_bs["used_best"], final_mu=info_sat["mu"])
            final = dataclasses.replace(settings, mu=info_sat["mu"])
            run_trace.res_sat, run_trace.res_bs = gpi_mod.kkt_residual(
                forms, rep, p, final)
        else:
            if reports is not None:
                rep = reports
            elif mech == "zero":
                rep = zero_reports(cfg.Kt)
            else:
                rep = compute_reports("average", cfg, covs,
                                      mc_samples=avg_samples, rng=rng,
                                      design_passes=design_passes)
            p, run_trace = gpi_mod.run_stin_gpi(forms, rep, settings, init)
        F, V = unstack(p, cfg.M, cfg.N)
        converged = run_trace.converged
        res_sat, res_bs = run_trace.res_sat, run_trace.res_bs
    else:
        design = {"slnr": baselines.slnr_max, "zf": baselines.zf_single_cell,
                  "zf-local": baselines.zf_local}[kind]
        F, V, info = design(csit, cfg)
        fallback = bool(info.get("fallback"))
        converged, res_sat, res_bs = True, float("nan"), float("nan")
        run_trace = None
        mech = "none"

    rates = true_instantaneous_rates(real, F, V, cfg, rs_enabled=rs_enabled)
    user_rates = np.concatenate([rates.per_user_su(), rates.per_user_tu()])
    return TrialResult(method=method, mechanism=mech or "none",
                       sum_rate=rates.sum_rate, r_c=rates.r_c,
                       r_p_su=rates.r_p_su, r_p_tu=rates.r_p_tu,
                       user_rates=user_rates, converged=converged,
                       res_sat=res_sat, res_bs=res_bs, fallback=fallback,
                       trace=run_trace if trace else None)


@dataclasses.dataclass
class SweepSpec:
    base: object               # SystemConfig
    axis: str = "snr"
    values: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    methods: tuple = ("gpi-avg", "slnr", "zf")
    trials: int = 100
    avg_samples: int = 1000
    trace: bool = False


def apply_axis(cfg, axis, value):
    """Materialize one sweep point as a config."""
    if axis == "snr":
        return dataclasses.replace(cfg, snr_db=float(value))
    if axis == "sat_antennas":
        n = int(round(math.sqrt(value)))
        if n * n != int(value):
            raise ConfigError(
                f"sat_antennas axis needs square values (got {value})")
        return dataclasses.replace(cfg, M1=n, M2=n)
    if axis == "kt_int":
        return dataclasses.replace(cfg, Kt_int=int(value)).validate()
    raise ConfigError(f"unknown sweep axis {axis!r}; choose from {AXES}")


def trial_seed_key(master_seed, axis_idx, method_idx, trial_idx):
    return np.random.SeedSequence(
        (int(master_seed), int(axis_idx), int(method_idx), int(trial_idx)))


def _run_task(task):
    (cfg, method, seed_entropy, avg_samples, trace) = task
    seed = np.random.SeedSequence(seed_entropy)
    return run_trial(cfg, method, seed, avg_samples=avg_samples, trace=trace)


def sweep(spec, workers=1):
    """Run the full grid; returns (summary_rows, cdf_rows, trace_rows).

    The task list and the reduction are both in deterministic order, so the
    emitted tables are identical for any `workers` value.
    """
    if spec.axis not in AXES:
        raise ConfigError(f"unknown sweep axis {spec.axis!r}; choose from {AXES}")
    for m in spec.methods:
        resolve_method(m)

    tasks, keys = [], []
    for ai, value in enumerate(spec.values):
        cfg_point = apply_axis(spec.base, spec.axis, value)
        for mi, method in enumerate(spec.methods):
            for t in range(spec.trials):
                entropy = (int(spec.base.seed), ai, mi, t)
                tasks.append((cfg_point, method, entropy,
                              spec.avg_samples, spec.trace))
                keys.append((ai, value, mi, method, t))

    if workers <= 1:
        results = [_run_task(t) for t in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_task, tasks, chunksize=4))

    summary_rows, cdf_rows, trace_rows = [], [], []
    for ai, value in enumerate(spec.values):
        for mi, method in enumerate(spec.methods):
            sums = [r.sum_rate for k, r in zip(keys, results)
                    if k[0] == ai and k[2] == mi]
            mech = next(r.mechanism for k, r in zip(keys, results)
                        if k[0] == ai and k[2] == mi)
            n = len(sums)
            mean = float(np.mean(sums)) if n else float("nan")
            stderr = float(np.std(sums, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
            summary_rows.append((spec.axis, value, method, mech, mean, stderr, n))
    for key, res in zip(keys, results):
        for rate in res.user_rates:
            cdf_rows.append((key[3], float(rate)))
        if spec.trace and res.trace is not None:
            trace_rows.extend(res.trace.rows)
    return summary_rows, cdf_rows, trace_rows


SUMMARY_HEADER = ("axis", "axis_value", "method", "mechanism",
                  "mean_sum_rate", "stderr", "n")
CDF_HEADER = ("method", "user_rate")
TRACE_HEADER = ("stage", "iter", "mu", "displacement", "objective",
                "res_sat", "res_bs")


def _fmt(x):
    if isinstance(x, float):
        return repr(x)          # shortest round-trip, full double precision
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def write_outputs(summary_rows, cdf_rows, prefix, trace_rows=None):
    """Emit `<prefix>_summary.csv`, `<prefix>_cdf.csv`, and optionally
    `<prefix>_trace.csv`; headers are always written."""
    paths = []
    path = f"{prefix}_summary.csv"
    _write_csv(path, SUMMARY_HEADER, summary_rows)
    paths.append(path)
    path = f"{prefix}_cdf.csv"
    _write_csv(path, CDF_HEADER, cdf_rows)
    paths.append(path)
    if trace_rows is not None:
        path = f"{prefix}_trace.csv"
        _write_csv(path, TRACE_HEADER, trace_rows)
        paths.append(path)
    return paths
