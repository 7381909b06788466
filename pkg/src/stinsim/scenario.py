"""Scenario configuration, user placement, and link budgets.

The network is a LEO satellite with an M1 x M2 planar array serving Ks
single-antenna satellite users (SUs), plus a terrestrial base station with an
N1 x N2 planar array serving Kt terrestrial users (TUs).  The first Kt_int TUs
also receive the satellite downlink ("interfered" TUs); the BS signal never
reaches the SUs.  Noise power is normalized to 1, so snr_db fixes the satellite
transmit power directly and power_ratio = P_sat / P_bs.
"""

import dataclasses
import math

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT, k as BOLTZMANN


class ConfigError(ValueError):
    """Raised for malformed configuration files or inconsistent field values."""


def linear_from_dbi(gain_dbi):
    """dBi -> linear power gain."""
    return 10.0 ** (np.asarray(gain_dbi, dtype=float) / 10.0)


_INT_FIELDS = {"M1", "M2", "N1", "N2", "Ks", "Kt", "Kt_int", "Lt",
               "t_max", "inner_max", "seed"}


@dataclasses.dataclass(frozen=True)
class SystemConfig:
    """Full scenario description; field names double as config-file keys."""

    M1: int = 5                      # satellite array elements, horizontal
    M2: int = 5                      # satellite array elements, vertical
    N1: int = 3                      # BS array elements, horizontal
    N2: int = 3                      # BS array elements, vertical
    Ks: int = 10                     # satellite users
    Kt: int = 3                      # terrestrial users
    Kt_int: int = 1                  # TUs inside the satellite footprint
    fc: float = 20e9                 # carrier frequency [Hz]
    Bw: float = 800e6                # bandwidth [Hz]
    d0_sat: float = 1000e3           # satellite altitude / reference slant [m]
    sat_coverage_radius: float = 500e3   # SU placement disc radius [m]
    bs_coverage_radius: float = 50e3     # TU placement disc radius [m]
    bs_height: float = 30.0          # BS antenna height [m]
    G_sat: float = 6.0               # satellite transmit gain [dBi]
    G_user: float = 0.0              # user receive gain [dBi]
    G_bs: float = 6.0                # BS transmit gain [dBi]
    kappa_s: float = 10.0            # Rician K-factor of satellite links
    Lt: int = 10                     # NLoS paths per terrestrial link
    rho: float = 4.0                 # terrestrial path-loss exponent
    d1_sat: float = 1.0              # satellite element spacing [wavelengths]
    d2_sat: float = 1.0
    d1_bs: float = 0.5               # BS element spacing [wavelengths]
    d2_bs: float = 0.5
    tau_p: float = 2.0               # pilot SNR gain; 0 = no CSIT, inf = perfect
    snr_db: float = 30.0             # P_sat / noise power [dB]
    power_ratio: float = 1.0         # P_sat / P_bs
    noise_temp: float = 290.0        # receiver noise temperature [K]
    mu0: float = 0.1                 # initial LSE smoothing
    zeta: float = 0.01               # GPI displacement tolerance
    t_max: int = 1000                # total GPI iteration cap (both stages)
    inner_max: int = 500             # per-stage GPI iteration cap
    seed: int = 0                    # master RNG seed (64-bit)

    # --- derived quantities -------------------------------------------------
    @property
    def M(self):
        return self.M1 * self.M2

    @property
    def N(self):
        return self.N1 * self.N2

    @property
    def noise_power(self):
        return 1.0

    @property
    def sat_power(self):
        return 10.0 ** (self.snr_db / 10.0) * self.noise_power

    @property
    def bs_power(self):
        return self.sat_power / self.power_ratio

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.fc

    def interfered(self):
        """Boolean mask over TUs; the first Kt_int are inside the footprint."""
        mask = np.zeros(self.Kt, dtype=bool)
        mask[: self.Kt_int] = True
        return mask

    def validate(self):
        for name in ("M1", "M2", "N1", "N2", "Ks", "Kt", "Lt"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1 (got {getattr(self, name)})")
        if self.Kt_int < 0 or self.Kt_int > self.Kt:
            raise ConfigError(
                f"Kt_int must lie in [0, Kt]; got Kt_int={self.Kt_int} with Kt={self.Kt}")
        for name in ("fc", "Bw", "d0_sat", "sat_coverage_radius",
                     "bs_coverage_radius", "power_ratio", "noise_temp",
                     "mu0", "zeta"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0 (got {getattr(self, name)})")
        for name in ("bs_height", "kappa_s", "rho"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0 (got {getattr(self, name)})")
        if self.tau_p < 0:
            raise ConfigError(f"tau_p must be >= 0 or inf (got {self.tau_p})")
        for name in ("d1_sat", "d2_sat", "d1_bs", "d2_bs"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0 (got {getattr(self, name)})")
        if self.t_max < 1 or self.inner_max < 1:
            raise ConfigError("t_max and inner_max must be >= 1")
        return self


def _coerce(name, raw):
    raw = raw.strip()
    try:
        if name in _INT_FIELDS:
            return int(raw, 0)
        return float(raw)   # accepts inf / nan spellings too
    except ValueError as exc:
        raise ConfigError(f"invalid value for {name}: {raw!r}") from exc


def parse_config_text(text, overrides=None):
    """Parse flat ``key = value`` text (``#`` comments) into a SystemConfig."""
    fields = {f.name for f in dataclasses.fields(SystemConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in fields:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        values[key] = _coerce(key, raw)
    if overrides:
        for key, val in overrides.items():
            if key not in fields:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = val if not isinstance(val, str) else _coerce(key, val)
    return SystemConfig(**values).validate()


def load_config(path, overrides=None):
    """Read a config file; unspecified fields keep their defaults."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), overrides)


@dataclasses.dataclass
class UserPlacement:
    """Geometric draw for one long-term block (angles in radians, distances m)."""

    su_theta: np.ndarray      # (Ks,) off-nadir angle of each SU
    su_phi: np.ndarray        # (Ks,) azimuth of each SU
    su_slant: np.ndarray      # (Ks,) geometric slant range (informational)
    tu_dist: np.ndarray       # (Kt,) 3-D BS-TU distance
    tu_sat_theta: np.ndarray  # (Kt,) satellite off-nadir angle (0 where unused)
    tu_sat_phi: np.ndarray    # (Kt,)
    tu_path_theta: np.ndarray  # (Kt, Lt) per-path elevation at the BS array
    tu_path_phi: np.ndarray    # (Kt, Lt) per-path azimuth
    interfered: np.ndarray     # (Kt,) bool mask


def _disc_radii(radius, n, rng):
    # area-uniform sampling on a disc
    return radius * np.sqrt(rng.uniform(size=n))


def place_users(cfg, rng):
    """Draw user positions; BS sits at the satellite nadir, discs concentric.

    RNG consumption order (fixed for reproducibility): SU radii, SU azimuths,
    TU radii, TU azimuths, TU path elevations, TU path azimuths.
    """
    r_su = _disc_radii(cfg.sat_coverage_radius, cfg.Ks, rng)
    phi_su = rng.uniform(0.0, 2.0 * math.pi, size=cfg.Ks)
    r_tu = _disc_radii(cfg.bs_coverage_radius, cfg.Kt, rng)
    phi_tu = rng.uniform(0.0, 2.0 * math.pi, size=cfg.Kt)
    path_theta = rng.uniform(0.0, math.pi, size=(cfg.Kt, cfg.Lt))
    path_phi = rng.uniform(0.0, 2.0 * math.pi, size=(cfg.Kt, cfg.Lt))

    mask = cfg.interfered()
    tu_sat_theta = np.where(mask, np.arctan2(r_tu, cfg.d0_sat), 0.0)
    tu_sat_phi = np.where(mask, phi_tu, 0.0)
    return UserPlacement(
        su_theta=np.arctan2(r_su, cfg.d0_sat),
        su_phi=phi_su,
        su_slant=np.hypot(cfg.d0_sat, r_su),
        tu_dist=np.hypot(r_tu, cfg.bs_height),
        tu_sat_theta=tu_sat_theta,
        tu_sat_phi=tu_sat_phi,
        tu_path_theta=path_theta,
        tu_path_phi=path_phi,
        interfered=mask,
    )


@dataclasses.dataclass
class LinkBudget:
    """Average channel powers per link (linear, relative to unit noise power)."""

    alpha_su: np.ndarray   # (Ks,) satellite -> SU
    alpha_tu: np.ndarray   # (Kt,) satellite -> TU; 0 outside the footprint
    beta_tu: np.ndarray    # (Kt,) BS -> TU


def link_budget(cfg, placement):
    """Free-space satellite gains and power-law terrestrial gains.

    alpha = G_sat G_user / (kB T B) * (c / (4 pi fc d0))^2, with d0 the fixed
    reference slant for every satellite link; beta_k uses the same frequency
    factor at 1 m and a d^-rho rolloff of the 3-D BS-TU distance.
    """
    noise_w = BOLTZMANN * cfg.noise_temp * cfg.Bw
    freq_1m = (SPEED_OF_LIGHT / (4.0 * math.pi * cfg.fc)) ** 2
    g_rx = linear_from_dbi(cfg.G_user)

    alpha = (linear_from_dbi(cfg.G_sat) * g_rx / noise_w
             * freq_1m / cfg.d0_sat ** 2)
    alpha_su = np.full(cfg.Ks, alpha)
    alpha_tu = np.where(placement.interfered, alpha, 0.0)
    beta_tu = (linear_from_dbi(cfg.G_bs) * g_rx / noise_w
               * freq_1m * placement.tu_dist ** (-cfg.rho))
    return LinkBudget(alpha_su=alpha_su, alpha_tu=alpha_tu, beta_tu=beta_tu)
