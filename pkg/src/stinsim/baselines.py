"""Reference precoder designs without rate splitting.

All baselines emit Ks private satellite columns (no common stream), equal
per-stream power, unit total power per transmitter (trace of F F^H and V V^H
both 1).  Each returns (F, V, info) where info records fallback events.
"""

import numpy as np

from .scenario import ConfigError


def _norm_cols(X, per_stream):
    out = np.zeros_like(X)
    for i in range(X.shape[1]):
        n = np.linalg.norm(X[:, i])
        if n < 1e-300:
            e = np.zeros(X.shape[0], dtype=complex)
            e[i % X.shape[0]] = 1.0
            out[:, i] = e * np.sqrt(per_stream)
        else:
            out[:, i] = X[:, i] / n * np.sqrt(per_stream)
    return out


def slnr_max(csit, cfg):
    """Per-stream SLNR maximizers.

    BS stream k:  (sum_{j != k} (h h^H + Phi_j) + (sigma^2/Pt) Kt I)^-1 h_k.
    Satellite stream u adds the cross-leakage toward interfered TUs weighted
    by the power ratio: (sum_{i != u} (g g^H + Psi_i)
        + (Pt/Ps) sum_k (z z^H + Phi_sat_k) + (sigma^2/Ps) Ks I)^-1 g_u.
    """
    M, N, Ks, Kt = cfg.M, cfg.N, cfg.Ks, cfg.Kt
    s2 = cfg.noise_power
    mask = cfg.interfered()

    T_su = [np.outer(csit.G_hat[:, u], csit.G_hat[:, u].conj()) + csit.Psi[u]
            for u in range(Ks)]
    T_tu = [np.outer(csit.Z_hat[:, k], csit.Z_hat[:, k].conj()) + csit.Phi_sat[k]
            for k in range(Kt) if mask[k]]
    cross = sum(T_tu) if T_tu else np.zeros((M, M), dtype=complex)
    F = np.zeros((M, Ks), dtype=complex)
    for u in range(Ks):
        leak = sum(T_su[i] for i in range(Ks) if i != u) \
            if Ks > 1 else np.zeros((M, M), dtype=complex)
        Mat = leak + (cfg.bs_power / cfg.sat_power) * cross \
            + (s2 / cfg.sat_power) * Ks * np.eye(M)
        F[:, u] = np.linalg.solve(Mat, csit.G_hat[:, u])
    F = _norm_cols(F, 1.0 / Ks)

    T_h = [np.outer(csit.H_hat[:, k], csit.H_hat[:, k].conj()) + csit.Phi_bs[k]
           for k in range(Kt)]
    V = np.zeros((N, Kt), dtype=complex)
    for k in range(Kt):
        leak = sum(T_h[j] for j in range(Kt) if j != k) \
            if Kt > 1 else np.zeros((N, N), dtype=complex)
        Mat = leak + (s2 / cfg.bs_power) * Kt * np.eye(N)
        V[:, k] = np.linalg.solve(Mat, csit.H_hat[:, k])
    V = _norm_cols(V, 1.0 / Kt)
    return F, V, {"fallback": False}


def _zf_columns(X, per_stream):
    """Pseudo-inverse beams toward the columns of X; flags a regularized
    fallback when the Gram matrix is numerically singular."""
    gram = X.conj().T @ X
    dim = gram.shape[0]
    fallback = False
    scale = max(np.trace(gram).real / max(dim, 1), 1e-300)
    cond = np.linalg.cond(gram) if dim else 0.0
    if not np.isfinite(cond) or cond > 1e12:
        gram = gram + 1e-9 * scale * np.eye(dim)
        fallback = True
    W = X @ np.linalg.inv(gram)
    return _norm_cols(W, per_stream), fallback


def zf_single_cell(csit, cfg):
    """Each transmitter zero-forces its own users, ignoring the cross link."""
    F, fb1 = _zf_columns(csit.G_hat, 1.0 / cfg.Ks)
    V, fb2 = _zf_columns(csit.H_hat, 1.0 / cfg.Kt)
    return F, V, {"fallback": fb1 or fb2}


def zf_local(csit, cfg):
    """Satellite nulls both the other SUs and the interfered TUs; BS behaves
    as in the single-cell design.  Needs Ks + Kt_int <= M degrees of freedom."""
    M, Ks = cfg.M, cfg.Ks
    mask = cfg.interfered()
    n_null = Ks - 1 + int(mask.sum())
    if Ks + int(mask.sum()) > M:
        raise ConfigError(
            f"zf_local needs Ks + Kt_int <= M (got {Ks} + {int(mask.sum())} > {M})")
    fallback = False
    F = np.zeros((M, Ks), dtype=complex)
    Z_int = csit.Z_hat[:, mask]
    for u in range(Ks):
        others = np.concatenate(
            [csit.G_hat[:, [i for i in range(Ks) if i != u]], Z_int], axis=1)
        if n_null:
            proj = np.eye(M) - others @ np.linalg.pinv(others)
            f = proj @ csit.G_hat[:, u]
        else:
            f = csit.G_hat[:, u].copy()
        if np.linalg.norm(f) < 1e-12 * max(np.linalg.norm(csit.G_hat[:, u]), 1e-300):
            f = csit.G_hat[:, u].copy()   # estimate lies in the null space
            fallback = True
        F[:, u] = f
    F = _norm_cols(F, 1.0 / Ks)
    V, fb2 = _zf_columns(csit.H_hat, 1.0 / cfg.Kt)
    return F, V, {"fallback": fallback or fb2}
