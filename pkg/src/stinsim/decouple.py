"""Decoupling of the two transmitters via scalar reports.

The BS reports three kinds of scalars to the satellite over a control channel:
epsilon[k] (expected BS-side denominator of TU k's private rate), omega[k]
(expected total BS power seen at interfered TU k), and epsilon_hat (expected
sum of log2 denominators).  With those frozen, the satellite's objective
depends only on f_bar and the BS's only on v_bar, so the two stages can run
without sharing CSIT.

Three mechanisms: Average (Monte-Carlo expectation over the channel law, valid
for a whole coherence region), Instantaneous (current block's exact scalars,
needs the BS design first), Zero (no report at all).
"""

import dataclasses
import math

import numpy as np

from . import channel as chan
from . import gpi
from .rates import DENOM_FLOOR, build_bs_forms, qform

MECHANISMS = ("average", "instantaneous", "zero")


@dataclasses.dataclass
class ReportValues:
    """BS-to-satellite scalars; omega is zero outside the footprint."""

    mechanism: str
    epsilon: np.ndarray      # (Kt,)
    omega: np.ndarray        # (Kt,)
    epsilon_hat: float

    def to_text(self):
        eps = ",".join(repr(float(x)) for x in self.epsilon)
        om = ",".join(repr(float(x)) for x in self.omega)
        return (f"mechanism = {self.mechanism}\n"
                f"epsilon = {eps}\n"
                f"omega = {om}\n"
                f"epsilon_hat = {self.epsilon_hat!r}\n")

    @classmethod
    def from_text(cls, text):
        fields = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, raw = (s.strip() for s in line.split("=", 1))
            fields[key] = raw
        mech = fields["mechanism"].lower()
        if mech not in MECHANISMS:
            raise ValueError(f"unknown report mechanism {mech!r}")
        parse = lambda s: np.array([float(t) for t in s.split(",") if t.strip()])
        return cls(mechanism=mech, epsilon=parse(fields["epsilon"]),
                   omega=parse(fields["omega"]),
                   epsilon_hat=float(fields["epsilon_hat"]))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())


def zero_reports(Kt):
    return ReportValues(mechanism="zero", epsilon=np.zeros(Kt),
                        omega=np.zeros(Kt), epsilon_hat=0.0)


def instantaneous_reports(bs_forms, v_bar):
    """Exact scalars of the current block for a given unit-norm v_bar."""
    Kt = bs_forms.Kt
    eps = np.array([qform(bs_forms.U_p_bs[k], v_bar) for k in range(Kt)])
    om = np.zeros(Kt)
    for row, k in enumerate(bs_forms.int_idx):
        om[k] = qform(bs_forms.U_c_bs[row], v_bar)
    ehat = float(sum(math.log2(max(e, DENOM_FLOOR)) for e in eps))
    return ReportValues(mechanism="instantaneous", epsilon=eps, omega=om,
                        epsilon_hat=ehat)


def _default_provider(cfg, design_passes):
    """BS designs for the report Monte-Carlo: MRT, optionally GPI-refined."""
    settings = gpi.GpiSettings.from_config(cfg)

    def provider(bs_forms, H_hat):
        v0 = gpi.mrt_bs(H_hat)
        if design_passes <= 1:
            return v0
        v, _, _ = gpi.run_bs_stage(bs_forms, v0, settings)
        return v
    return provider


def compute_reports(mechanism, cfg, covs, bs_precoder_provider=None,
                    mc_samples=1000, rng=None, current=None, design_passes=2):
    """Produce ReportValues under the requested mechanism.

    Average: draw `mc_samples` BS fading blocks from the covariances (the BS
    channel law is exactly CN(0, R_bs_k)), estimate CSIT, design v_bar with the
    provider, and average the three scalar families.  Instantaneous: pass the
    current block as ``current=(bs_forms, v_bar)``.  Zero: all zeros.
    """
    mechanism = mechanism.lower()
    if mechanism == "zero":
        return zero_reports(cfg.Kt)
    if mechanism == "instantaneous":
        if current is None:
            raise ValueError("instantaneous reports need current=(bs_forms, v_bar)")
        return instantaneous_reports(*current)
    if mechanism != "average":
        raise ValueError(f"unknown report mechanism {mechanism!r}")

    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if bs_precoder_provider is None:
        bs_precoder_provider = _default_provider(cfg, design_passes)

    N, Kt = cfg.N, cfg.Kt
    if math.isinf(cfg.tau_p):
        c = 0.0
    elif cfg.tau_p == 0.0:
        c = math.inf
    else:
        c = cfg.noise_power / cfg.tau_p

    eps_smp = np.zeros((mc_samples, Kt))
    om_smp = np.zeros((mc_samples, Kt))
    ehat_smp = np.zeros(mc_samples)
    for s in range(mc_samples):
        H_hat = np.zeros((N, Kt), dtype=complex)
        Phi = np.zeros((Kt, N, N), dtype=complex)
        for k in range(Kt):
            h = chan.sample_from_covariance(covs.R_bs[k], rng)
            H_hat[:, k], Phi[k] = chan._mmse_one(h, covs.R_bs[k], c, rng)
        bs_forms = build_bs_forms(H_hat, Phi, cfg)
        v = bs_precoder_provider(bs_forms, H_hat)
        rep = instantaneous_reports(bs_forms, v)
        eps_smp[s], om_smp[s], ehat_smp[s] = rep.epsilon, rep.omega, rep.epsilon_hat

    return ReportValues(mechanism="average",
                        epsilon=eps_smp.mean(axis=0),
                        omega=om_smp.mean(axis=0),
                        epsilon_hat=float(ehat_smp.mean()))


# --- decoupled spectral-efficiency surrogates -------------------------------

def leakage_factors(sat_forms, reports, f_bar):
    """Quadratic form of C_p_bs_j + eps_j I per TU; NaN marks dropped factors.

    Every TU contributes one factor to the private-SU leakage product.  A
    factor whose form falls below the denominator floor is dropped (the
    no-leakage limit), which covers non-interfered TUs under Zero reports.
    """
    Kt = sat_forms.Kt
    leak = {int(k): row for row, k in enumerate(sat_forms.int_idx)}
    vals = np.full(Kt, np.nan)
    for j in range(Kt):
        q = reports.epsilon[j] * float(np.vdot(f_bar, f_bar).real)
        if j in leak:
            q += qform(sat_forms.C_p_bs[leak[j]], f_bar)
        if q > DENOM_FLOOR:
            vals[j] = q
    return vals


def gamma_private_su(sat_forms, f_bar, reports):
    """Decoupled private-rate surrogate per SU (includes the 2^(eps_hat/Ks)
    report penalty and the Ks-th root of the leakage product)."""
    Ks = sat_forms.Ks
    lf = leakage_factors(sat_forms, reports, f_bar)
    log_leak = float(np.nansum(np.log2(lf[np.isfinite(lf)]))) if np.isfinite(lf).any() else 0.0
    out = np.zeros(Ks)
    for u in range(Ks):
        den = max(qform(sat_forms.U_p_sat[u], f_bar), DENOM_FLOOR)
        num = qform(sat_forms.S_p_sat[u], f_bar) + den
        out[u] = (reports.epsilon_hat / Ks + math.log2(num / den)
                  - log_leak / Ks)
    return out


def gamma_common_tu(sat_forms, f_bar, reports):
    """Decoupled common-rate surrogate per interfered TU."""
    out = np.zeros(len(sat_forms.int_idx))
    for row, k in enumerate(sat_forms.int_idx):
        om = reports.omega[k]
        den = max(qform(sat_forms.C_c_bs[row], f_bar) + om, DENOM_FLOOR)
        num = qform(sat_forms.S_c_bs[row], f_bar) + den
        out[row] = math.log2(num / den)
    return out


def rate_common_su(sat_forms, f_bar):
    """Common-rate bound per SU (satellite-local, no report needed)."""
    Ks = sat_forms.Ks
    out = np.zeros(Ks)
    for u in range(Ks):
        den = max(qform(sat_forms.U_c_sat[u], f_bar), DENOM_FLOOR)
        num = qform(sat_forms.S_c_sat[u], f_bar) + den
        out[u] = math.log2(num / den)
    return out


def gamma_private_tu(bs_forms, v_bar):
    """BS-local private-rate surrogate per TU (log-ratio form, may be < 0)."""
    Kt = bs_forms.Kt
    out = np.zeros(Kt)
    for k in range(Kt):
        num = max(qform(bs_forms.S_p_bs[k], v_bar), DENOM_FLOOR)
        den = max(qform(bs_forms.U_p_bs[k], v_bar), DENOM_FLOOR)
        out[k] = math.log2(num / den)
    return out
