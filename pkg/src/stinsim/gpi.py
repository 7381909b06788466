"""Two-stage generalized power iteration for the decoupled sum-SE objective.

Stage 1 (satellite) maximizes
    f1(f) = LSE_mu{ common-rate terms over interfered TUs and SUs }
            + sum_u Gamma_private_su(f)
over unit-norm f; stage 2 (BS) maximizes f2(v) = sum_k Gamma_private_tu(v).
Each stage iterates the leading generalized eigenvector of a matrix pencil
(A(f), B(f)) whose fixed points are stationary points of the objective on the
unit sphere.  The update is the damped power step f <- n(f + n(B^-1 A f))
(n = normalize), which shares every fixed point with the plain map f <-
n(B^-1 A f) but does not cycle when the soft min hardens.

Assembly notes (load-bearing):
  * the softmin weights are one softmax over the combined common-rate term set
    (they sum to 1 across both user groups);
  * A carries a +I completion per active leakage factor; with it,
    f^H A f = f^H B f at every unit f, the pencil shift is exactly 1, and
    (A - B) f is the exact Euclidean-tangent gradient of f1 times ln 2;
  * factors/terms whose denominator falls below the global floor are dropped
    ("no-leakage limit"), never inverted.
"""

import dataclasses
import math

import numpy as np
import scipy.linalg as sla

from .rates import DENOM_FLOOR, StackedPrecoders


@dataclasses.dataclass
class GpiSettings:
    mu: float = 0.1            # LSE smoothing (accuracy of the soft min)
    zeta: float = 0.01         # displacement tolerance |f_t - f_{t-1}|
    inner_max: int = 500       # per-stage iteration cap
    t_max: int = 1000          # total iteration cap across both stages
    mu_factor: float = 0.5     # mu <- mu * factor on a stall trigger
    mu_trigger: int = 200      # iterations without convergence before a cut
    mu_min: float = 1e-3
    track_residuals: bool = False   # KKT residual per iteration (costly)

    @classmethod
    def from_config(cls, cfg, **kw):
        return cls(mu=cfg.mu0, zeta=cfg.zeta, inner_max=cfg.inner_max,
                   t_max=cfg.t_max, **kw)


def lse_soft_min(values, mu):
    """Smooth minimum: min(x) <= lse <= min(x) + mu*ln(K), exact as mu -> 0."""
    v = np.asarray(values, dtype=float)
    m = float(v.min())
    out = m - mu * math.log(float(np.mean(np.exp(-(v - m) / mu))))
    # rounding can nudge the value an ulp outside the guaranteed envelope
    # (e.g. one input far below the rest); clamp it back in
    return min(max(out, m), m + mu * math.log(v.size))


def softmin_weights(values, mu):
    """Gradient weights of lse_soft_min: softmax(-x/mu), summing to 1."""
    v = np.asarray(values, dtype=float)
    e = np.exp(-(v - v.min()) / mu)
    return e / e.sum()


def _next_mu(mu, settings):
    return max(mu * settings.mu_factor, settings.mu_min)


def mu_schedule(trace, settings):
    """Next mu after a stall: halve (by mu_factor) down to the floor."""
    mu = trace.rows[-1][2] if getattr(trace, "rows", None) else settings.mu
    return _next_mu(mu, settings)


def _solve_pd(B, x):
    """Solve B y = x for Hermitian positive-definite B (Cholesky, jittered)."""
    try:
        return sla.cho_solve(sla.cho_factor(B, check_finite=False), x,
                             check_finite=False)
    except (sla.LinAlgError, ValueError):
        jitter = 1e-12 * max(np.trace(B).real / B.shape[0], 1.0)
        return np.linalg.solve(B + jitter * np.eye(B.shape[0]), x)


def _phase_align(f_new, f_ref):
    p = np.vdot(f_new, f_ref)
    if abs(p) > 0:
        f_new = f_new * (p / abs(p))
    return f_new


def _batch_qforms(mats, f):
    """Real quadratic forms f^H T f for a (k, D, D) stack."""
    if len(mats) == 0:
        return np.zeros(0)
    return np.real(np.einsum("i,kij,j->k", f.conj(), mats, f, optimize=True))


def _wsum(coeff, mats):
    if len(mats) == 0:
        return 0.0
    return np.einsum("k,kij->ij", coeff, mats, optimize=True)


class _SatPencil:
    """Cached constant term matrices of the satellite objective/pencil."""

    def __init__(self, sat_forms, reports):
        D = sat_forms.dim
        self.dim = D
        self.Ks = sat_forms.Ks
        eye = np.eye(D)
        X, Y = [], []
        for row, k in enumerate(sat_forms.int_idx):   # common terms, TUs first
            om = float(reports.omega[k])
            Y.append(sat_forms.C_c_bs[row] + om * eye)
            X.append(sat_forms.S_c_bs[row] + Y[-1])
        for u in range(sat_forms.Ks):                 # then SU common terms
            Y.append(sat_forms.U_c_sat[u])
            X.append(sat_forms.S_c_sat[u] + Y[-1])
        self.X = np.stack(X)
        self.Y = np.stack(Y)
        self.P = np.stack([sat_forms.S_p_sat[u] + sat_forms.U_p_sat[u]
                           for u in range(sat_forms.Ks)])
        self.Up = np.stack(list(sat_forms.U_p_sat))
        leak = {int(k): row for row, k in enumerate(sat_forms.int_idx)}
        C = []
        for j in range(sat_forms.Kt):
            mat = float(reports.epsilon[j]) * eye
            if j in leak:
                mat = mat + sat_forms.C_p_bs[leak[j]]
            C.append(mat)
        self.C = np.stack(C) if C else np.zeros((0, D, D), dtype=complex)
        self.eps_hat = float(reports.epsilon_hat)

    def _qs(self, f):
        qx = np.maximum(_batch_qforms(self.X, f), DENOM_FLOOR)
        qy = np.maximum(_batch_qforms(self.Y, f), DENOM_FLOOR)
        qp = np.maximum(_batch_qforms(self.P, f), DENOM_FLOOR)
        qu = np.maximum(_batch_qforms(self.Up, f), DENOM_FLOOR)
        qc = _batch_qforms(self.C, f)
        return qx, qy, qp, qu, qc

    def objective(self, f, mu):
        qx, qy, qp, qu, qc = self._qs(f)
        gam = np.log2(qx / qy)
        act = qc > DENOM_FLOOR
        return (lse_soft_min(gam, mu) + self.eps_hat
                + float(np.sum(np.log2(qp / qu)))
                - float(np.sum(np.log2(qc[act]))))

    def assemble(self, f, mu):
        qx, qy, qp, qu, qc = self._qs(f)
        gam = np.log2(qx / qy)
        w = softmin_weights(gam, mu)
        act = qc > DENOM_FLOOR
        eye = np.eye(self.dim)
        A = _wsum(w / qx, self.X) + _wsum(1.0 / qp, self.P) \
            + float(np.count_nonzero(act)) * eye
        coeff_c = np.where(act, 1.0 / np.maximum(qc, DENOM_FLOOR), 0.0)
        B = _wsum(w / qy, self.Y) + _wsum(1.0 / qu, self.Up) \
            + _wsum(coeff_c, self.C)
        return 0.5 * (A + A.conj().T), 0.5 * (B + B.conj().T)


class _BsPencil:
    """Cached term matrices of the BS objective/pencil."""

    def __init__(self, bs_forms):
        self.dim = bs_forms.dim
        self.S = np.stack(list(bs_forms.S_p_bs))
        self.U = np.stack(list(bs_forms.U_p_bs))

    def objective(self, v, _mu=None):
        qs = np.maximum(_batch_qforms(self.S, v), DENOM_FLOOR)
        qu = np.maximum(_batch_qforms(self.U, v), DENOM_FLOOR)
        return float(np.sum(np.log2(qs / qu)))

    def assemble(self, v, _mu=None):
        qs = np.maximum(_batch_qforms(self.S, v), DENOM_FLOOR)
        qu = np.maximum(_batch_qforms(self.U, v), DENOM_FLOOR)
        C = _wsum(1.0 / qs, self.S)
        D = _wsum(1.0 / qu, self.U)
        return 0.5 * (C + C.conj().T), 0.5 * (D + D.conj().T)


def assemble_sat_matrices(forms_sat, reports, f_bar, settings):
    """Public pencil assembly (A, B) at the given unit iterate."""
    return _SatPencil(forms_sat, reports).assemble(f_bar, settings.mu)


def assemble_bs_matrices(forms_bs, v_bar):
    """Public pencil assembly (C, D) at the given unit iterate."""
    return _BsPencil(forms_bs).assemble(v_bar)


def _pencil_residual(pencil, x, mu):
    A, B = pencil.assemble(x, mu)
    t = _solve_pd(B, A @ x)
    lam = float(np.real(np.vdot(x, t)))
    nt = np.linalg.norm(t)
    return float(np.linalg.norm(t - lam * x) / max(nt, DENOM_FLOOR))


def _power_iterate(pencil, x0, settings, stage, const_term, max_iters):
    """Shared stage loop; returns (x, rows, info)."""
    x = np.asarray(x0, dtype=complex)
    x = x / np.linalg.norm(x)
    mu = settings.mu
    rows = []
    obj = pencil.objective(x, mu) + const_term
    best_obj, best_x = obj, x.copy()
    converged = False
    since_cut = 0
    it = 0
    while it < max_iters:
        it += 1
        since_cut += 1
        A, B = pencil.assemble(x, mu)
        t = _solve_pd(B, A @ x)
        # damped update: normalize(x + B^-1 A x / |.|).  The pencil (B + A, B)
        # has the same eigenvectors as (A, B) (spectrum 1 + lambda), so the
        # fixed points are unchanged, but the averaging suppresses the limit
        # cycles the plain map falls into once the softmin sharpens.
        t = _phase_align(t / np.linalg.norm(t), x)
        x_new = x + t
        x_new = _phase_align(x_new / np.linalg.norm(x_new), x)
        disp = float(np.linalg.norm(x_new - x))
        x = x_new
        obj = pencil.objective(x, mu) + const_term
        if obj > best_obj:
            best_obj, best_x = obj, x.copy()
        res = _pencil_residual(pencil, x, mu) if settings.track_residuals \
            else float("nan")
        rows.append((stage, it, mu,
                     disp, obj,
                     res if stage == "sat" else float("nan"),
                     res if stage == "bs" else float("nan")))
        if disp < settings.zeta:
            converged = True
            break
        if stage == "sat" and since_cut >= settings.mu_trigger:
            mu = _next_mu(mu, settings)
            since_cut = 0
    used_best = False
    if not converged and best_obj > obj:
        x, used_best = best_x, True
    info = {"converged": converged, "iters": it, "mu": mu,
            "used_best": used_best, "objective": pencil.objective(x, mu)}
    return x, rows, info


def run_bs_stage(bs_forms, v0, settings, const_term=0.0, max_iters=None):
    pencil = _BsPencil(bs_forms)
    cap = max_iters if max_iters is not None else settings.inner_max
    return _power_iterate(pencil, v0, settings, "bs", const_term, cap)


def run_sat_stage(sat_forms, reports, f0, settings, const_term=0.0,
                  max_iters=None):
    pencil = _SatPencil(sat_forms, reports)
    cap = max_iters if max_iters is not None else settings.inner_max
    return _power_iterate(pencil, f0, settings, "sat", const_term, cap)


@dataclasses.dataclass
class GpiTrace:
    """Iteration log: rows of (stage, iter, mu, displacement, objective,
    res_sat, res_bs) plus termination metadata."""

    rows: list
    converged_sat: bool
    converged_bs: bool
    iters_sat: int
    iters_bs: int
    used_best_sat: bool
    used_best_bs: bool
    final_mu: float
    res_sat: float = float("nan")
    res_bs: float = float("nan")

    @property
    def converged(self):
        return self.converged_sat and self.converged_bs


def run_stin_gpi(forms, reports, settings, init):
    """Algorithm: satellite stage with frozen reports, then BS stage.

    The stages share no CSIT: stage 1 reads only the satellite-owned forms
    plus the scalar reports, stage 2 only the BS-owned forms.  Returns the
    unit-norm stacked designs and the iteration trace.  On a stage that hits
    its cap, the best-objective iterate is returned and flagged.
    """
    bs_pencil = _BsPencil(forms.bs)
    f2_init = bs_pencil.objective(init.v_bar / np.linalg.norm(init.v_bar), None)

    cap1 = min(settings.inner_max, settings.t_max)
    f, rows_sat, info_sat = run_sat_stage(forms.sat, reports, init.f_bar,
                                          settings, const_term=f2_init,
                                          max_iters=cap1)
    budget = max(settings.t_max - info_sat["iters"], 1)
    cap2 = min(settings.inner_max, budget)
    f1_final = info_sat["objective"]
    v, rows_bs, info_bs = run_bs_stage(forms.bs, init.v_bar, settings,
                                       const_term=f1_final, max_iters=cap2)

    p = StackedPrecoders(f_bar=f, v_bar=v)
    trace = GpiTrace(rows=rows_sat + rows_bs,
                     converged_sat=info_sat["converged"],
                     converged_bs=info_bs["converged"],
                     iters_sat=info_sat["iters"], iters_bs=info_bs["iters"],
                     used_best_sat=info_sat["used_best"],
                     used_best_bs=info_bs["used_best"],
                     final_mu=info_sat["mu"])
    final = dataclasses.replace(settings, mu=info_sat["mu"])
    trace.res_sat, trace.res_bs = kkt_residual(forms, reports, p, final)
    return p, trace


def kkt_residual(forms, reports, p, settings):
    """Normalized fixed-point residuals |B^-1 A x - lam x| / |B^-1 A x| with
    lam = x^H B^-1 A x, for the satellite and BS pencils at p."""
    res_sat = _pencil_residual(_SatPencil(forms.sat, reports), p.f_bar,
                               settings.mu)
    res_bs = _pencil_residual(_BsPencil(forms.bs), p.v_bar, settings.mu)
    return res_sat, res_bs


# --- initialization ---------------------------------------------------------

def _unit(col):
    n = np.linalg.norm(col)
    if n < 1e-300:
        e = np.zeros_like(col)
        e[0] = 1.0
        return e
    return col / n


def mrt_bs(H_hat):
    """Matched-filter BS stack: v_k along h_hat_k, equal per-stream power."""
    cols = [_unit(H_hat[:, k]) for k in range(H_hat.shape[1])]
    v = np.concatenate(cols)
    return v / np.linalg.norm(v)


def mrt_init(csit, cfg):
    """Matched-filter start: privates along the estimates, common stream along
    the dominant direction of the summed rank-one moments."""
    acc = csit.G_hat @ csit.G_hat.conj().T + csit.Z_hat @ csit.Z_hat.conj().T
    vals, vecs = np.linalg.eigh(acc)
    f_c = vecs[:, -1]
    cols = [f_c] + [_unit(csit.G_hat[:, u]) for u in range(cfg.Ks)]
    f = np.concatenate(cols)
    return StackedPrecoders(f_bar=f / np.linalg.norm(f), v_bar=mrt_bs(csit.H_hat))
