"""How tight is the ergodic spectral-efficiency lower bound?

The precoders are designed from estimated CSIT, and the design objective is a
lower bound that treats the estimation error of every stream as extra noise.
This demo fixes one scene and one fading block, sweeps the pilot quality
tau_p, and compares the bound against the rates realized on the true channels
with matched-filter precoders.  The same RNG seed is used at every tau_p, so
the true channels are identical and only the pilot noise changes; at
tau_p = inf the bound and the realized rates coincide exactly.

Run:  python3 demos/02_bound_vs_realized.py
"""

import dataclasses
import math
from pathlib import Path

import numpy as np

import stinsim as st

DESK_CFG = Path(__file__).resolve().parents[1] / "configs" / "desk.cfg"


def one_point(cfg, seed):
    """Scene -> block -> CSIT -> MRT design; returns (bound, realized)."""
    rng = np.random.default_rng(seed)
    placement = st.place_users(cfg, rng)
    budget = st.link_budget(cfg, placement)
    covs = st.spatial_covariances(cfg, placement, budget)
    real = st.draw_channels(cfg, placement, covs, rng)
    csit = st.mmse_estimate(real, covs, cfg, rng)
    forms = st.build_quadratic_forms(csit, cfg)

    p = st.mrt_init(csit, cfg)
    bound = st.lower_bound_rates(forms, p)
    F, V = st.unstack(p, cfg.M, cfg.N)
    realized = st.true_instantaneous_rates(real, F, V, cfg)
    return bound, realized


def main():
    base = st.load_config(DESK_CFG)
    print(f"scene: M = {base.M}, Ks = {base.Ks}, Kt = {base.Kt} "
          f"(Kt_int = {base.Kt_int}), SNR = {base.snr_db:g} dB, "
          f"matched-filter precoders\n")

    hdr = (f"{'tau_p':>8} | {'bound r_c':>9} {'true r_c':>9} | "
           f"{'bound sum':>9} {'true sum':>9} | {'bound/true':>10}")
    print(hdr)
    print("-" * len(hdr))
    for tau in (0.5, 2.0, 8.0, 64.0, math.inf):
        cfg = dataclasses.replace(base, tau_p=tau)
        bound, realized = one_point(cfg, seed=5)
        label = "inf" if math.isinf(tau) else f"{tau:g}"
        print(f"{label:>8} | {bound.r_c:9.3f} {realized.r_c:9.3f} | "
              f"{bound.sum_rate:9.3f} {realized.sum_rate:9.3f} | "
              f"{bound.sum_rate / realized.sum_rate:10.4f}")

    print("\nThe bound is conservative under noisy CSIT (the error of every "
          "stream is\ncharged as interference) and closes onto the realized "
          "rates as tau_p -> inf,\nwhere the estimates are exact and the "
          "error covariances vanish.")


if __name__ == "__main__":
    main()
