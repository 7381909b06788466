"""Spectral-efficiency expressions: quadratic forms, bounds, and true rates.

The satellite sends one common stream plus Ks private streams (rate splitting);
the BS sends Kt unicast streams.  Design vectors are handled in stacked form:
f_bar = vec[f_c, f_p_1, ..., f_p_Ks] in C^{M(Ks+1)} and
v_bar = vec[v_1, ..., v_Kt] in C^{N Kt}, both unit norm, so that transmit
powers P_s, P_t enter the expressions explicitly.

Every ergodic-bound SINR is a ratio of Hermitian quadratic forms in f_bar or
v_bar.  The satellite-owned matrices (functions of g-hat / z-hat) act on f_bar;
the BS-owned ones (functions of h-hat) act on v_bar.  Note: the cross-link
matrices are written with an unscaled common block, so the quadratic forms
match the scalar bounds exactly only at power_ratio = 1 (the default).
"""

import dataclasses
import math

import numpy as np

DENOM_FLOOR = 1e-30   # every denominator is floored here before any log/ratio

_LN2 = math.log(2.0)


def _floor(x):
    return max(float(x), DENOM_FLOOR)


def rate_bits(signal, den):
    """log2(1 + signal/den); log1p keeps full relative accuracy when the
    ratio is tiny (log2((signal+den)/den) loses it to the 1+x rounding)."""
    return math.log1p(signal / den) / _LN2


def qform(mat, vec):
    """Real part of vec^H mat vec (matrices are Hermitian by construction)."""
    return float(np.real(np.vdot(vec, mat @ vec)))


# --- stacking ---------------------------------------------------------------

@dataclasses.dataclass
class StackedPrecoders:
    """Unit-norm stacked design vectors plus the scales removed by stack()."""

    f_bar: np.ndarray
    v_bar: np.ndarray
    f_scale: float = 1.0
    v_scale: float = 1.0


def stack(F, V):
    """Column-stack precoder matrices into unit vectors, recording norms."""
    f = np.asarray(F, dtype=complex).flatten(order="F")
    v = np.asarray(V, dtype=complex).flatten(order="F")
    fs, vs = np.linalg.norm(f), np.linalg.norm(v)
    return StackedPrecoders(f_bar=f / fs if fs > 0 else f,
                            v_bar=v / vs if vs > 0 else v,
                            f_scale=float(fs), v_scale=float(vs))


def unstack(p, M, N):
    """Invert stack(): returns (F, V) with the recorded scales restored."""
    F = (p.f_scale * p.f_bar).reshape((M, -1), order="F")
    V = (p.v_scale * p.v_bar).reshape((N, -1), order="F")
    return F, V


# --- quadratic-form assembly ------------------------------------------------

@dataclasses.dataclass
class SatForms:
    """Satellite-owned M(Ks+1)-square forms (common + leakage + private-SU)."""

    dim: int
    S_c_sat: np.ndarray   # (Ks, D, D) common-signal at SU u
    U_c_sat: np.ndarray   # (Ks, D, D) common-denominator at SU u
    S_p_sat: np.ndarray   # (Ks, D, D) private-signal at SU u
    U_p_sat: np.ndarray   # (Ks, D, D) private-denominator at SU u
    S_c_bs: np.ndarray    # (Kt_int, D, D) common-signal at interfered TU
    C_c_bs: np.ndarray    # (Kt_int, D, D) satellite-side common denominator
    C_p_bs: np.ndarray    # (Kt_int, D, D) satellite leakage into TU privates
    int_idx: np.ndarray   # (Kt_int,) TU indices the rows above refer to
    Ks: int
    Kt: int


@dataclasses.dataclass
class BsForms:
    """BS-owned N*Kt-square forms."""

    dim: int
    S_p_bs: np.ndarray    # (Kt, D, D)
    U_p_bs: np.ndarray    # (Kt, D, D)
    U_c_bs: np.ndarray    # (Kt_int, D, D) total BS power seen at interfered TU
    int_idx: np.ndarray
    Kt: int


@dataclasses.dataclass
class QuadraticFormSet:
    sat: SatForms
    bs: BsForms


def _sel(size, i):
    E = np.zeros((size, size))
    E[i, i] = 1.0
    return E


def build_quadratic_forms(csit, cfg):
    """Assemble every Hermitian form from one block's CSIT.

    Satellite side embeds the noise floor as (sigma^2/P_s) * I on the full
    stacked space; BS side uses (sigma^2/P_t) * I.
    """
    Ks, Kt = cfg.Ks, cfg.Kt
    M, N = cfg.M, cfg.N
    Df, Dv = M * (Ks + 1), N * Kt
    inv_ps = cfg.noise_power / cfg.sat_power
    inv_pt = cfg.noise_power / cfg.bs_power
    ratio = cfg.sat_power / cfg.bs_power

    eye_b = np.eye(Ks + 1)
    S_c_sat = np.zeros((Ks, Df, Df), dtype=complex)
    U_c_sat = np.zeros((Ks, Df, Df), dtype=complex)
    S_p_sat = np.zeros((Ks, Df, Df), dtype=complex)
    U_p_sat = np.zeros((Ks, Df, Df), dtype=complex)
    for u in range(Ks):
        g = csit.G_hat[:, u]
        gg = np.outer(g, g.conj())
        T = gg + csit.Psi[u]
        S_c_sat[u] = np.kron(_sel(Ks + 1, 0), gg)
        U_c_sat[u] = np.kron(eye_b, T) + inv_ps * np.eye(Df) - S_c_sat[u]
        S_p_sat[u] = np.kron(_sel(Ks + 1, u + 1), gg)
        priv = eye_b.copy()
        priv[0, 0] = 0.0
        U_p_sat[u] = np.kron(priv, T) + inv_ps * np.eye(Df) - S_p_sat[u]

    int_idx = np.flatnonzero(cfg.interfered())
    nint = len(int_idx)
    S_c_bs = np.zeros((nint, Df, Df), dtype=complex)
    C_c_bs = np.zeros((nint, Df, Df), dtype=complex)
    C_p_bs = np.zeros((nint, Df, Df), dtype=complex)
    for row, k in enumerate(int_idx):
        z = csit.Z_hat[:, k]
        zz = np.outer(z, z.conj())
        Tz = zz + csit.Phi_sat[k]
        S_c_bs[row] = np.kron(_sel(Ks + 1, 0), zz)
        C_c_bs[row] = np.kron(eye_b, Tz) - S_c_bs[row]
        C_p_bs[row] = ratio * np.kron(eye_b, Tz) - np.kron(_sel(Ks + 1, 0), Tz)

    sat = SatForms(dim=Df, S_c_sat=S_c_sat, U_c_sat=U_c_sat, S_p_sat=S_p_sat,
                   U_p_sat=U_p_sat, S_c_bs=S_c_bs, C_c_bs=C_c_bs, C_p_bs=C_p_bs,
                   int_idx=int_idx, Ks=Ks, Kt=Kt)
    bs = build_bs_forms(csit.H_hat, csit.Phi_bs, cfg)
    return QuadraticFormSet(sat=sat, bs=bs)


def build_bs_forms(H_hat, Phi_bs, cfg):
    """BS-owned forms alone (also used by the report Monte-Carlo loop)."""
    Kt, N = cfg.Kt, cfg.N
    Dv = N * Kt
    inv_pt = cfg.noise_power / cfg.bs_power
    int_idx = np.flatnonzero(cfg.interfered())

    eye_t = np.eye(Kt)
    S_p_bs = np.zeros((Kt, Dv, Dv), dtype=complex)
    U_p_bs = np.zeros((Kt, Dv, Dv), dtype=complex)
    for k in range(Kt):
        h = H_hat[:, k]
        hh = np.outer(h, h.conj())
        Th = hh + Phi_bs[k]
        S_p_bs[k] = np.kron(_sel(Kt, k), hh)
        U_p_bs[k] = np.kron(eye_t, Th) + inv_pt * np.eye(Dv) - S_p_bs[k]
    U_c_bs = np.stack([U_p_bs[k] + S_p_bs[k] for k in int_idx]) \
        if len(int_idx) else np.zeros((0, Dv, Dv), dtype=complex)
    return BsForms(dim=Dv, S_p_bs=S_p_bs, U_p_bs=U_p_bs, U_c_bs=U_c_bs,
                   int_idx=int_idx, Kt=Kt)


# --- rate reports -----------------------------------------------------------

@dataclasses.dataclass
class RateReport:
    """Per-stream rates of one block; the common rate is credited to the SUs."""

    r_c: float
    r_p_su: np.ndarray
    r_p_tu: np.ndarray

    @property
    def sum_rate(self):
        return float(self.r_c + np.sum(self.r_p_su) + np.sum(self.r_p_tu))

    def per_user_su(self):
        share = self.r_c / len(self.r_p_su) if len(self.r_p_su) else 0.0
        return self.r_p_su + share

    def per_user_tu(self):
        return self.r_p_tu.copy()


def lower_bound_rates(forms, p):
    """Ergodic lower-bound rates from the quadratic forms at (f_bar, v_bar).

    The common rate is the minimum of the common-stream bounds over the
    interfered TUs and all SUs (every one of them must decode it).
    """
    sat, bs = forms.sat, forms.bs
    f, v = p.f_bar, p.v_bar
    Ks = sat.Ks

    r_p_su = np.zeros(Ks)
    r_c_su = np.zeros(Ks)
    for u in range(Ks):
        den_p = _floor(qform(sat.U_p_sat[u], f))
        r_p_su[u] = rate_bits(qform(sat.S_p_sat[u], f), den_p)
        den_c = _floor(qform(sat.U_c_sat[u], f))
        r_c_su[u] = rate_bits(qform(sat.S_c_sat[u], f), den_c)

    r_p_tu = np.zeros(bs.Kt)
    leak = {int(k): row for row, k in enumerate(sat.int_idx)}
    for k in range(bs.Kt):
        cross = qform(sat.C_p_bs[leak[k]], f) if k in leak else 0.0
        den = _floor(qform(bs.U_p_bs[k], v) + cross)
        r_p_tu[k] = rate_bits(qform(bs.S_p_bs[k], v), den)

    r_c_tu = np.zeros(len(sat.int_idx))
    for row in range(len(sat.int_idx)):
        base = qform(bs.U_c_bs[row], v)
        den = _floor(base + qform(sat.C_c_bs[row], f))
        r_c_tu[row] = rate_bits(qform(sat.S_c_bs[row], f), den)

    r_c = float(min(np.min(r_c_su), np.min(r_c_tu))) if len(r_c_tu) \
        else float(np.min(r_c_su))
    return RateReport(r_c=r_c, r_p_su=r_p_su, r_p_tu=r_p_tu)


def true_instantaneous_rates(real, F, V, cfg, rs_enabled=True):
    """Achievable rates on the true channels for one block.

    With rs_enabled, F has Ks+1 columns (column 0 = common stream); the common
    stream is decoded first at every SU and every interfered TU, then removed.
    Without it, F has Ks columns, the common rate is zero, and TUs see all
    satellite streams as noise.
    """
    F = np.asarray(F, dtype=complex)
    V = np.asarray(V, dtype=complex)
    Ps, Pt, s2 = cfg.sat_power, cfg.bs_power, cfg.noise_power
    ratio = Ps / Pt
    Fp = F[:, 1:] if rs_enabled else F
    fc = F[:, 0] if rs_enabled else None
    mask = cfg.interfered()

    r_p_su = np.zeros(cfg.Ks)
    c_terms = []
    for u in range(cfg.Ks):
        g = real.G[:, u]
        iui = sum(abs(np.vdot(g, Fp[:, i])) ** 2 for i in range(cfg.Ks) if i != u)
        r_p_su[u] = np.log2(1.0 + abs(np.vdot(g, Fp[:, u])) ** 2
                            / (iui + s2 / Ps))
        if rs_enabled:
            den = sum(abs(np.vdot(g, Fp[:, i])) ** 2 for i in range(cfg.Ks))
            c_terms.append(np.log2(1.0 + abs(np.vdot(g, fc)) ** 2 / (den + s2 / Ps)))

    r_p_tu = np.zeros(cfg.Kt)
    for k in range(cfg.Kt):
        h, z = real.H[:, k], real.Z[:, k]
        iui = sum(abs(np.vdot(h, V[:, j])) ** 2 for j in range(cfg.Kt) if j != k)
        ici = ratio * sum(abs(np.vdot(z, Fp[:, i])) ** 2 for i in range(cfg.Ks))
        if rs_enabled and mask[k]:
            # every satellite-origin power at a TU carries Ps/Pt after
            # normalizing the BS receive equation by the BS power
            den = (sum(abs(np.vdot(h, V[:, j])) ** 2 for j in range(cfg.Kt))
                   + ici + s2 / Pt)
            c_terms.append(np.log2(1.0 + ratio * abs(np.vdot(z, fc)) ** 2 / den))
        r_p_tu[k] = np.log2(1.0 + abs(np.vdot(h, V[:, k])) ** 2
                            / (iui + ici + s2 / Pt))

    r_c = float(min(c_terms)) if rs_enabled and c_terms else 0.0
    return RateReport(r_c=r_c, r_p_su=r_p_su, r_p_tu=r_p_tu)
