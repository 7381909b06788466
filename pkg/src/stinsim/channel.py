"""Channel synthesis and MMSE channel estimation.

Satellite links are rank-one Rician: g_u = gtilde_u * a(theta_u, phi_u) with a
deterministic steering direction and a scalar Rician gain (LoS phase 0).
Terrestrial links sum Lt Rayleigh NLoS paths over random steering directions.
CSIT comes from a one-shot linear MMSE estimate of each vector channel observed
through additive pilot noise of power sigma^2 / tau_p per antenna.
"""

import dataclasses
import math

import numpy as np


def upa_response(theta, phi, n1, n2, d1, d2):
    """Planar-array response a = a_h kron a_v, unit-modulus entries.

    a_h[m] = exp(j 2 pi d1 (m - (n1-1)/2) sin(theta) cos(phi)),
    a_v[n] = exp(j 2 pi d2 (n - (n2-1)/2) cos(theta)); spacings in wavelengths.
    |a|^2 = n1 * n2.
    """
    m = np.arange(n1) - (n1 - 1) / 2.0
    n = np.arange(n2) - (n2 - 1) / 2.0
    a_h = np.exp(2j * np.pi * d1 * m * np.sin(theta) * np.cos(phi))
    a_v = np.exp(2j * np.pi * d2 * n * np.cos(theta))
    return np.kron(a_h, a_v)


def sat_steering(cfg, theta, phi):
    return upa_response(theta, phi, cfg.M1, cfg.M2, cfg.d1_sat, cfg.d2_sat)


def bs_steering(cfg, theta, phi):
    return upa_response(theta, phi, cfg.N1, cfg.N2, cfg.d1_bs, cfg.d2_bs)


@dataclasses.dataclass
class CovarianceSet:
    """Second-moment matrices of every link (about zero, so LoS mass included)."""

    Q: np.ndarray       # (Ks, M, M) satellite->SU, rank one
    R_sat: np.ndarray   # (Kt, M, M) satellite->TU, zero outside the footprint
    R_bs: np.ndarray    # (Kt, N, N) BS->TU


def spatial_covariances(cfg, placement, budget):
    """Long-term covariances: Q_u = alpha_u a a^H; R_bs_k = beta/Lt sum aa^H."""
    M, N = cfg.M, cfg.N
    Q = np.zeros((cfg.Ks, M, M), dtype=complex)
    for u in range(cfg.Ks):
        a = sat_steering(cfg, placement.su_theta[u], placement.su_phi[u])
        Q[u] = budget.alpha_su[u] * np.outer(a, a.conj())

    R_sat = np.zeros((cfg.Kt, M, M), dtype=complex)
    for k in range(cfg.Kt):
        if placement.interfered[k]:
            a = sat_steering(cfg, placement.tu_sat_theta[k], placement.tu_sat_phi[k])
            R_sat[k] = budget.alpha_tu[k] * np.outer(a, a.conj())

    R_bs = np.zeros((cfg.Kt, N, N), dtype=complex)
    for k in range(cfg.Kt):
        acc = np.zeros((N, N), dtype=complex)
        for ell in range(cfg.Lt):
            a = bs_steering(cfg, placement.tu_path_theta[k, ell],
                            placement.tu_path_phi[k, ell])
            acc += np.outer(a, a.conj())
        R_bs[k] = budget.beta_tu[k] / cfg.Lt * acc
    return CovarianceSet(Q=Q, R_sat=R_sat, R_bs=R_bs)


@dataclasses.dataclass
class ChannelRealization:
    """One fading block of true channels (columns are users)."""

    G: np.ndarray   # (M, Ks) satellite -> SU
    Z: np.ndarray   # (M, Kt) satellite -> TU, zero columns outside footprint
    H: np.ndarray   # (N, Kt) BS -> TU


def _cn(rng, size):
    """Standard circularly-symmetric complex normal samples."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2.0)


def rician_gain(rng, alpha, kappa):
    """Scalar link gains with mean sqrt(kappa a/(1+kappa)) (LoS phase 0)."""
    alpha = np.asarray(alpha, dtype=float)
    mean = np.sqrt(kappa * alpha / (1.0 + kappa))
    std = np.sqrt(alpha / (1.0 + kappa))
    return mean + std * _cn(rng, alpha.shape)


def draw_channels(cfg, placement, covs, rng):
    """Draw one fading block consistent with the given covariances.

    Link powers are recovered from covariance traces (alpha = tr Q / M,
    beta = tr R_bs / N).  RNG consumption order (fixed): SU gains, TU satellite
    gains, TU path gains.
    """
    M, N = cfg.M, cfg.N
    alpha_su = np.trace(covs.Q, axis1=1, axis2=2).real / M
    alpha_tu = np.trace(covs.R_sat, axis1=1, axis2=2).real / M
    beta_tu = np.trace(covs.R_bs, axis1=1, axis2=2).real / N

    g_gain = rician_gain(rng, alpha_su, cfg.kappa_s)
    z_gain = rician_gain(rng, alpha_tu, cfg.kappa_s)   # exactly 0 where alpha=0
    path_gain = _cn(rng, (cfg.Kt, cfg.Lt))

    G = np.zeros((M, cfg.Ks), dtype=complex)
    for u in range(cfg.Ks):
        G[:, u] = g_gain[u] * sat_steering(cfg, placement.su_theta[u],
                                           placement.su_phi[u])
    Z = np.zeros((M, cfg.Kt), dtype=complex)
    for k in range(cfg.Kt):
        if placement.interfered[k]:
            Z[:, k] = z_gain[k] * sat_steering(cfg, placement.tu_sat_theta[k],
                                               placement.tu_sat_phi[k])
    H = np.zeros((N, cfg.Kt), dtype=complex)
    for k in range(cfg.Kt):
        acc = np.zeros(N, dtype=complex)
        for ell in range(cfg.Lt):
            acc += path_gain[k, ell] * bs_steering(cfg, placement.tu_path_theta[k, ell],
                                                   placement.tu_path_phi[k, ell])
        H[:, k] = np.sqrt(beta_tu[k]) * acc / math.sqrt(cfg.Lt)
    return ChannelRealization(G=G, Z=Z, H=H)


@dataclasses.dataclass
class CsitEstimate:
    """MMSE channel estimates and their error covariances (about zero)."""

    G_hat: np.ndarray    # (M, Ks)
    Psi: np.ndarray      # (Ks, M, M) error covariance per SU link
    Z_hat: np.ndarray    # (M, Kt), zero columns outside the footprint
    Phi_sat: np.ndarray  # (Kt, M, M), zero outside the footprint
    H_hat: np.ndarray    # (N, Kt)
    Phi_bs: np.ndarray   # (Kt, N, N)


def _mmse_one(x, R, c, rng):
    """Estimate one vector channel from y = x + noise, noise ~ CN(0, c I).

    Returns (x_hat, err_cov).  W = R (R + c I)^{-1} and err_cov = c W, using
    the second moment R about zero (the Rician mean is not subtracted, so the
    error covariance is also a second moment about zero).
    """
    dim = x.shape[0]
    if math.isinf(c):          # tau_p = 0: pure noise, estimate is the mean 0
        return np.zeros(dim, dtype=complex), R.copy()
    if c == 0.0:               # tau_p = inf: perfect CSIT
        return x.copy(), np.zeros((dim, dim), dtype=complex)
    y = x + math.sqrt(c) * _cn(rng, dim)
    W = np.linalg.solve(R + c * np.eye(dim), R)
    W = 0.5 * (W + W.conj().T)
    return W @ y, c * W


def mmse_estimate(real, covs, cfg, rng):
    """Linear MMSE CSIT for every link of one block.

    Pilot noise is synthesized explicitly so that the true channel, its
    estimate, and the estimation error are jointly consistent draws.  RNG
    consumption order (fixed): SU links, TU satellite links, TU BS links.
    """
    M, N = cfg.M, cfg.N
    if math.isinf(cfg.tau_p):
        c = 0.0
    elif cfg.tau_p == 0.0:
        c = math.inf
    else:
        c = cfg.noise_power / cfg.tau_p

    G_hat = np.zeros((M, cfg.Ks), dtype=complex)
    Psi = np.zeros((cfg.Ks, M, M), dtype=complex)
    for u in range(cfg.Ks):
        G_hat[:, u], Psi[u] = _mmse_one(real.G[:, u], covs.Q[u], c, rng)

    Z_hat = np.zeros((M, cfg.Kt), dtype=complex)
    Phi_sat = np.zeros((cfg.Kt, M, M), dtype=complex)
    for k in range(cfg.Kt):
        Z_hat[:, k], Phi_sat[k] = _mmse_one(real.Z[:, k], covs.R_sat[k], c, rng)

    H_hat = np.zeros((N, cfg.Kt), dtype=complex)
    Phi_bs = np.zeros((cfg.Kt, N, N), dtype=complex)
    for k in range(cfg.Kt):
        H_hat[:, k], Phi_bs[k] = _mmse_one(real.H[:, k], covs.R_bs[k], c, rng)
    return CsitEstimate(G_hat=G_hat, Psi=Psi, Z_hat=Z_hat, Phi_sat=Phi_sat,
                        H_hat=H_hat, Phi_bs=Phi_bs)


def sample_from_covariance(cov, rng, n=None):
    """Draw CN(0, cov) vectors; cov may be rank deficient (eigh factorization)."""
    vals, vecs = np.linalg.eigh(cov)
    factor = vecs * np.sqrt(np.clip(vals, 0.0, None))
    if n is None:
        return factor @ _cn(rng, cov.shape[0])
    # row i is (factor @ z_i)^T so that E[x x^H] = factor factor^H = cov
    return _cn(rng, (n, cov.shape[0])) @ factor.T


# --- debug dump of complex matrices (row-major "re+imj" tokens) -------------

def dump_complex_matrix(mat, path):
    mat = np.atleast_2d(np.asarray(mat, dtype=complex))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{mat.shape[0]} {mat.shape[1]}\n")
        for row in mat:
            # plain-float repr tokens so complex() can parse them back exactly
            fh.write(" ".join(f"{float(v.real)!r}{float(v.imag):+}j"
                              for v in row) + "\n")


def load_complex_matrix(path):
    with open(path, "r", encoding="utf-8") as fh:
        rows, cols = (int(t) for t in fh.readline().split())
        out = np.zeros((rows, cols), dtype=complex)
        for i in range(rows):
            out[i] = [complex(t) for t in fh.readline().split()]
    return out
