"""Acceptance gate: ten end-to-end checks of the whole toolkit.

Each test prints one `CRITERION k: PASS/FAIL (...)` line with the measured
quantities and asserts both the criterion and its runtime budget.  Tolerances
and trial counts are fixed; the RNG seeds are frozen so the suite is
reproducible bit for bit.
"""

import dataclasses
import math
import shutil
import subprocess
import sys
import time

import numpy as np
import pytest

import stinsim as st
from stinsim.channel import _cn, sat_steering
from stinsim.rates import qform

from conftest import DESK_CFG, make_scene, random_unit, small_cfg
from test_rates import scalar_bound_rates

LN2 = math.log(2.0)


def _report(num, ok, detail, elapsed, budget):
    line = f"CRITERION {num}: {'PASS' if ok else 'FAIL'} ({detail}; {elapsed:.1f}s)"
    print(line)
    assert ok, line
    assert elapsed < budget, f"criterion {num} over budget: {elapsed:.1f}s >= {budget}s"


# --- 1: pencil directions match finite-difference tangent gradients ---------

def _local_sat_objective(sat, rep, mu):
    """Test-local satellite objective, composed from the raw form matrices."""
    def obj(x):
        u = x / np.linalg.norm(x)
        commons = []
        for row, k in enumerate(sat.int_idx):
            den = qform(sat.C_c_bs[row], u) + rep.omega[k]
            commons.append(math.log2((qform(sat.S_c_bs[row], u) + den) / den))
        for s in range(sat.Ks):
            den = qform(sat.U_c_sat[s], u)
            commons.append(math.log2((qform(sat.S_c_sat[s], u) + den) / den))
        total = st.lse_soft_min(commons, mu) + rep.epsilon_hat
        for s in range(sat.Ks):
            den = qform(sat.U_p_sat[s], u)
            total += math.log2((qform(sat.S_p_sat[s], u) + den) / den)
        leak = {int(k): row for row, k in enumerate(sat.int_idx)}
        for j in range(sat.Kt):
            q = rep.epsilon[j]
            if j in leak:
                q += qform(sat.C_p_bs[leak[j]], u)
            total -= math.log2(q)
        return total
    return obj


def _local_bs_objective(bs):
    def obj(x):
        u = x / np.linalg.norm(x)
        return sum(math.log2(qform(bs.S_p_bs[k], u) / qform(bs.U_p_bs[k], u))
                   for k in range(bs.Kt))
    return obj


def _fd_gradient(obj, x, h=1e-6):
    g = np.zeros(x.shape[0], dtype=complex)
    for i in range(x.shape[0]):
        e = np.zeros(x.shape[0], dtype=complex)
        e[i] = h
        d_re = (obj(x + e) - obj(x - e)) / (2 * h)
        e[i] = 1j * h
        d_im = (obj(x + e) - obj(x - e)) / (2 * h)
        g[i] = d_re + 1j * d_im
    return g


def _cosine(a, b):
    return abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))


def test_criterion_01_gradient_fidelity():
    t0 = time.perf_counter()
    cfg = small_cfg()                       # M=4, Ks=2, Kt=2, Kt_int=1
    mu = 0.15
    settings = st.GpiSettings(mu=mu)
    worst = 1.0
    for i in range(20):
        _, _, _, _, csit = make_scene(cfg, seed=1000 + i)
        forms = st.build_quadratic_forms(csit, cfg)
        rng = np.random.default_rng(2000 + i)
        eps = rng.uniform(0.05, 1.0, cfg.Kt)
        omega = np.where(cfg.interfered(), rng.uniform(0.05, 1.0, cfg.Kt), 0.0)
        rep = st.ReportValues(mechanism="average", epsilon=eps, omega=omega,
                              epsilon_hat=float(np.sum(np.log2(eps))))
        f = random_unit(rng, forms.sat.dim)
        v = random_unit(rng, forms.bs.dim)

        A, B = st.assemble_sat_matrices(forms.sat, rep, f, settings)
        lam = np.real(np.vdot(f, A @ f)) / np.real(np.vdot(f, B @ f))
        d_sat = (A - lam * B) @ f
        fd_sat = _fd_gradient(_local_sat_objective(forms.sat, rep, mu), f)
        worst = min(worst, _cosine(d_sat, fd_sat))

        C, D = st.assemble_bs_matrices(forms.bs, v)
        lam = np.real(np.vdot(v, C @ v)) / np.real(np.vdot(v, D @ v))
        d_bs = (C - lam * D) @ v
        fd_bs = _fd_gradient(_local_bs_objective(forms.bs), v)
        worst = min(worst, _cosine(d_bs, fd_bs))
    elapsed = time.perf_counter() - t0
    _report(1, worst >= 0.999, f"min cosine {worst:.9f} over 20 instances, "
            "both pencils", elapsed, 10.0)


# --- 2: KKT residuals at convergence on desk-scale instances ----------------

@pytest.mark.slow
def test_criterion_02_kkt_residuals(desk_cfg):
    t0 = time.perf_counter()
    n_inst, good, converged, worst = 100, 0, 0, 0.0
    for t in range(n_inst):
        res = st.run_trial(desk_cfg, "gpi-avg", st.trial_seed_key(11, 0, 0, t),
                           avg_samples=80)
        r = max(res.res_sat, res.res_bs)
        worst = max(worst, r)
        good += r <= 0.1
        converged += res.converged
    elapsed = time.perf_counter() - t0
    _report(2, good >= 95, f"{good}/100 residuals <= 0.1 "
            f"(worst {worst:.4f}, {converged}/100 converged)", elapsed, 300.0)


# --- 3: empirical MMSE error covariance vs closed form ----------------------

def test_criterion_03_csit_error_covariance(desk_cfg):
    t0 = time.perf_counter()
    cfg = desk_cfg
    rng = np.random.default_rng(123)
    placement = st.place_users(cfg, rng)
    budget = st.link_budget(cfg, placement)
    covs = st.spatial_covariances(cfg, placement, budget)
    n = 100_000
    worst = 0.0
    for tau in (0.5, 2.0, 8.0):
        c = cfg.noise_power / tau
        for label, R, draw in (
                ("sat", covs.Q[0], "rician"), ("bs", covs.R_bs[0], "gauss")):
            dim = R.shape[0]
            if draw == "rician":
                # the true satellite law: rank-one steering times Rician gain
                a = sat_steering(cfg, placement.su_theta[0], placement.su_phi[0])
                alpha = np.trace(R).real / dim
                from stinsim.channel import rician_gain
                g = rician_gain(rng, np.full(n, alpha), cfg.kappa_s)
                X = g[:, None] * a[None, :]
            else:
                X = st.sample_from_covariance(R, rng, n=n)
            W = np.linalg.solve(R + c * np.eye(dim), R)
            W = 0.5 * (W + W.conj().T)
            X_hat = (X + math.sqrt(c) * _cn(rng, (n, dim))) @ W.T
            E = X - X_hat
            emp = E.T @ E.conj() / n
            rel = np.linalg.norm(emp - c * W) / np.linalg.norm(c * W)
            worst = max(worst, rel)
    elapsed = time.perf_counter() - t0
    _report(3, worst <= 0.05, f"worst relative Frobenius error {worst:.4f} "
            "over tau_p in {0.5, 2, 8}, both links", elapsed, 60.0)


# --- 4: closed-form bound sits below the Monte-Carlo mean -------------------

def _mc_stream_rates(cfg, csit, f_bar, v_bar, rng, n):
    """Scalar Monte-Carlo of the expected rates with Gaussian CSIT error.

    Estimates carry the signal; the error of every not-yet-cancelled stream
    adds to the noise.  Returns (labels, means, stderrs) per stream.
    """
    M, N, Ks, Kt = cfg.M, cfg.N, cfg.Ks, cfg.Kt
    inv_ps = cfg.noise_power / cfg.sat_power
    inv_pt = cfg.noise_power / cfg.bs_power
    fb = np.column_stack([f_bar[b * M:(b + 1) * M] for b in range(Ks + 1)])
    vb = np.column_stack([v_bar[b * N:(b + 1) * N] for b in range(Kt)])
    mask = cfg.interfered()
    labels, means, errs = [], [], []

    def push(label, samples):
        labels.append(label)
        means.append(float(np.mean(samples)))
        errs.append(float(np.std(samples, ddof=1) / math.sqrt(len(samples))))

    for u in range(Ks):
        g = csit.G_hat[:, u]
        sig = np.abs(g.conj() @ fb) ** 2                     # (Ks+1,)
        E = st.sample_from_covariance(csit.Psi[u], rng, n=n)
        P = np.abs(E.conj() @ fb) ** 2                       # (n, Ks+1)
        den_p = np.sum(sig[1:]) - sig[u + 1] + P[:, 1:].sum(axis=1) + inv_ps
        push(f"su{u}-priv", np.log1p(sig[u + 1] / den_p) / LN2)
        den_c = np.sum(sig[1:]) + P.sum(axis=1) + inv_ps
        push(f"su{u}-comm", np.log1p(sig[0] / den_c) / LN2)

    for k in range(Kt):
        h = csit.H_hat[:, k]
        hsig = np.abs(h.conj() @ vb) ** 2
        Eh = st.sample_from_covariance(csit.Phi_bs[k], rng, n=n)
        Ph = np.abs(Eh.conj() @ vb) ** 2
        base = np.sum(hsig) + Ph.sum(axis=1) + inv_pt
        if mask[k]:
            z = csit.Z_hat[:, k]
            zsig = np.abs(z.conj() @ fb) ** 2
            Ez = st.sample_from_covariance(csit.Phi_sat[k], rng, n=n)
            Pz = np.abs(Ez.conj() @ fb) ** 2
            den_p = (base - hsig[k]
                     + np.sum(zsig[1:]) + Pz[:, 1:].sum(axis=1))
            den_c = base + np.sum(zsig[1:]) + Pz.sum(axis=1)
            push(f"tu{k}-comm", np.log1p(zsig[0] / den_c) / LN2)
        else:
            den_p = base - hsig[k]
        push(f"tu{k}-priv", np.log1p(hsig[k] / den_p) / LN2)
    return labels, np.array(means), np.array(errs)


def _bound_stream_rates(forms, f_bar, v_bar):
    """Per-stream closed-form lower bounds straight from the form matrices."""
    sat, bs = forms.sat, forms.bs
    labels, vals = [], []
    for u in range(sat.Ks):
        den = qform(sat.U_p_sat[u], f_bar)
        labels.append(f"su{u}-priv")
        vals.append(math.log1p(qform(sat.S_p_sat[u], f_bar) / den) / LN2)
        den = qform(sat.U_c_sat[u], f_bar)
        labels.append(f"su{u}-comm")
        vals.append(math.log1p(qform(sat.S_c_sat[u], f_bar) / den) / LN2)
    leak = {int(k): row for row, k in enumerate(sat.int_idx)}
    for k in range(bs.Kt):
        den = qform(bs.U_p_bs[k], v_bar)
        if k in leak:
            row = leak[k]
            den += qform(sat.C_p_bs[row], f_bar)
            dc = qform(bs.U_c_bs[row], v_bar) + qform(sat.C_c_bs[row], f_bar)
            labels.append(f"tu{k}-comm")
            vals.append(math.log1p(qform(sat.S_c_bs[row], f_bar) / dc) / LN2)
        labels.append(f"tu{k}-priv")
        vals.append(math.log1p(qform(bs.S_p_bs[k], v_bar) / den) / LN2)
    return labels, np.array(vals)


def test_criterion_04_lower_bound_validity():
    t0 = time.perf_counter()
    cfg = st.load_config(DESK_CFG, overrides={"Kt_int": 3, "G_bs": -10.0,
                                              "tau_p": 0.5})
    assert cfg.power_ratio == 1.0
    n_mc, fails = 10_000, 0
    worst_margin, worst_rel = math.inf, math.inf
    for i in range(10):
        rng = np.random.default_rng(np.random.SeedSequence((321, i)))
        placement = st.place_users(cfg, rng)
        budget = st.link_budget(cfg, placement)
        covs = st.spatial_covariances(cfg, placement, budget)
        real = st.draw_channels(cfg, placement, covs, rng)
        csit = st.mmse_estimate(real, covs, cfg, rng)
        forms = st.build_quadratic_forms(csit, cfg)

        rng_p = np.random.default_rng(np.random.SeedSequence((321, i, 1)))
        f_bar = random_unit(rng_p, forms.sat.dim)
        v_bar = random_unit(rng_p, forms.bs.dim)
        rng_mc = np.random.default_rng(np.random.SeedSequence((321, i, 2)))

        lb_mc, mc_mean, mc_se = _mc_stream_rates(cfg, csit, f_bar, v_bar,
                                                 rng_mc, n_mc)
        lb_b, bound = _bound_stream_rates(forms, f_bar, v_bar)
        order = {lab: j for j, lab in enumerate(lb_mc)}
        for j, lab in enumerate(lb_b):
            m = order[lab]
            margin = mc_mean[m] - 3.0 * mc_se[m] - bound[j]
            worst_margin = min(worst_margin, margin)
            worst_rel = min(worst_rel, margin / mc_mean[m])
            fails += margin <= 0.0
    elapsed = time.perf_counter() - t0
    _report(4, fails == 0, f"{fails} stream violations over 10 pairs "
            f"(worst margin {worst_margin:+.2e} bit, rel {worst_rel:+.1e})",
            elapsed, 120.0)


# --- 5: quadratic forms equal scalar formulas -------------------------------

def test_criterion_05_quadratic_form_equivalence():
    t0 = time.perf_counter()
    cfg = small_cfg()
    assert cfg.power_ratio == 1.0
    worst = 0.0
    for i in range(100):
        _, _, _, _, csit = make_scene(cfg, seed=5000 + i)
        forms = st.build_quadratic_forms(csit, cfg)
        rng = np.random.default_rng(6000 + i)
        p = st.StackedPrecoders(f_bar=random_unit(rng, forms.sat.dim),
                                v_bar=random_unit(rng, forms.bs.dim))
        got = st.lower_bound_rates(forms, p)
        want = scalar_bound_rates(csit, cfg, p.f_bar, p.v_bar)
        vals = np.concatenate([[got.r_c], got.r_p_su, got.r_p_tu])
        ref = np.concatenate([[want.r_c], want.r_p_su, want.r_p_tu])
        worst = max(worst, float(np.max(np.abs(vals - ref)
                                        / np.maximum(np.abs(ref), 1e-300))))
    elapsed = time.perf_counter() - t0
    _report(5, worst <= 1e-10, f"max relative deviation {worst:.2e} "
            "over 100 instances", elapsed, 10.0)


# --- 6: performance ordering at the desk operating point --------------------

@pytest.mark.slow
def test_criterion_06_performance_ordering(desk_cfg):
    t0 = time.perf_counter()
    cfg = desk_cfg
    assert cfg.snr_db == 30.0
    methods = ("gpi-ins", "gpi-avg", "gpi-zero", "slnr")
    sums = {m: [] for m in methods}
    for t in range(200):
        for m in methods:                  # paired: same seed per trial index
            res = st.run_trial(cfg, m, st.trial_seed_key(cfg.seed, 0, 0, t),
                               avg_samples=80)
            sums[m].append(res.sum_rate)
    mean = {m: float(np.mean(sums[m])) for m in methods}
    ok = (mean["gpi-ins"] >= mean["gpi-avg"] >= mean["gpi-zero"]
          and mean["gpi-avg"] >= 1.10 * mean["slnr"])
    elapsed = time.perf_counter() - t0
    _report(6, ok, "mean sum SE [bit/s/Hz]: "
            f"ins {mean['gpi-ins']:.3f} >= avg {mean['gpi-avg']:.3f} >= "
            f"zero {mean['gpi-zero']:.3f}, avg/slnr "
            f"{mean['gpi-avg'] / mean['slnr']:.3f} >= 1.10", elapsed, 1800.0)


# --- 7: robustness to the number of interfered TUs --------------------------

def test_criterion_07_ici_robustness(desk_cfg):
    t0 = time.perf_counter()
    base = dataclasses.replace(desk_cfg, snr_db=15.0)
    mean = {}
    for ki, kt_int in enumerate((1, 2, 3)):
        cfg = dataclasses.replace(base, Kt_int=kt_int).validate()
        for m in ("gpi-ins", "slnr"):
            vals = [st.run_trial(cfg, m, st.trial_seed_key(7, ki, 0, t),
                                 avg_samples=80).sum_rate for t in range(100)]
            mean[(m, kt_int)] = float(np.mean(vals))
    deg = {m: [1.0 - mean[(m, k)] / mean[(m, 1)] for k in (2, 3)]
           for m in ("gpi-ins", "slnr")}
    ok = all(deg["gpi-ins"][j] < deg["slnr"][j] for j in range(2))
    elapsed = time.perf_counter() - t0
    _report(7, ok, "relative degradation Kt_int 1->2,3: gpi-ins "
            f"{deg['gpi-ins'][0]:.1%}/{deg['gpi-ins'][1]:.1%} vs slnr "
            f"{deg['slnr'][0]:.1%}/{deg['slnr'][1]:.1%}", elapsed, 1800.0)


# --- 8: LSE sandwich --------------------------------------------------------

def test_criterion_08_lse_sandwich():
    rng = np.random.default_rng(88)
    inputs = []
    for _ in range(10_000):
        k = int(rng.integers(1, 13))
        scale = 10.0 ** rng.uniform(-3.0, 3.0)
        inputs.append(rng.standard_normal(k) * scale + rng.uniform(-1e3, 1e3))
    t0 = time.perf_counter()
    violations = 0
    for x in inputs:
        lo = float(np.min(x))
        hi_gap = math.log(len(x))
        for mu in (0.01, 0.1, 1.0):
            lse = st.lse_soft_min(x, mu)
            violations += not (lo <= lse <= lo + mu * hi_gap)
    elapsed = time.perf_counter() - t0
    _report(8, violations == 0, f"{violations} violations over 10000 inputs "
            "x 3 mu values", elapsed, 1.0)


# --- 9: zero-forcing nulls under perfect CSIT -------------------------------

def test_criterion_09_zf_nulls(desk_cfg):
    t0 = time.perf_counter()
    cfg = dataclasses.replace(desk_cfg, tau_p=math.inf).validate()
    _, _, _, _, csit = make_scene(cfg, seed=0)

    F, V, _ = st.zf_single_cell(csit, cfg)
    iui = 0.0
    for u in range(cfg.Ks):
        for i in range(cfg.Ks):
            if i != u:
                iui = max(iui, _cosine(csit.G_hat[:, i], F[:, u]))
    for k in range(cfg.Kt):
        for j in range(cfg.Kt):
            if j != k:
                iui = max(iui, _cosine(csit.H_hat[:, j], V[:, k]))

    Fl, _, _ = st.zf_local(csit, cfg)
    ici = 0.0
    for u in range(cfg.Ks):
        for k in np.flatnonzero(cfg.interfered()):
            ici = max(ici, _cosine(csit.Z_hat[:, k], Fl[:, u]))
    elapsed = time.perf_counter() - t0
    _report(9, iui <= 1e-9 and ici <= 1e-9,
            f"single-cell IUI {iui:.1e}, local ICI {ici:.1e}", elapsed, 1.0)


# --- 10: byte-identical sweeps across worker counts -------------------------

def test_criterion_10_sweep_determinism(tmp_path):
    t0 = time.perf_counter()
    stin = shutil.which("stin")
    base_cmd = [stin] if stin else [sys.executable, "-m", "stinsim.cli"]
    outputs = {}
    for tag, workers in (("a", 1), ("b", 3)):
        prefix = tmp_path / tag
        cmd = base_cmd + ["sweep", "--config", str(DESK_CFG),
                          "--values", "10,30", "--methods", "gpi-avg,slnr,zf",
                          "--trials", "5", "--avg-samples", "30",
                          "--workers", str(workers), "--out", str(prefix)]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outputs[tag] = tuple(
            (tmp_path / f"{tag}_{kind}.csv").read_bytes()
            for kind in ("summary", "cdf"))
    ok = outputs["a"] == outputs["b"]
    elapsed = time.perf_counter() - t0
    _report(10, ok, "summary+cdf byte-identical for workers 1 vs 3 "
            f"({len(outputs['a'][0])}+{len(outputs['a'][1])} bytes)",
            elapsed, 300.0)
