"""Shared fixtures: configs and pre-built random scenes."""

import dataclasses
import pathlib

import numpy as np
import pytest

import stinsim as st

REPO = pathlib.Path(__file__).resolve().parents[1]
DESK_CFG = REPO / "configs" / "desk.cfg"


@pytest.fixture(scope="session")
def desk_cfg():
    return st.load_config(DESK_CFG)


def small_cfg(**overrides):
    """Desk-style link budget at toy dimensions (M=4, Ks=2, Kt=2, Kt_int=1)."""
    base = dict(M1=2, M2=2, N1=2, N2=2, Ks=2, Kt=2, Kt_int=1,
                G_sat=57.5, G_bs=30.0, G_user=0.0,
                sat_coverage_radius=100e3, bs_coverage_radius=500.0,
                Lt=3, tau_p=2.0, snr_db=20.0, seed=0)
    base.update(overrides)
    return dataclasses.replace(st.SystemConfig(), **base).validate()


def make_scene(cfg, seed=0):
    """Placement, covariances, channels and CSIT for one block."""
    rng = np.random.default_rng(seed)
    placement = st.place_users(cfg, rng)
    budget = st.link_budget(cfg, placement)
    covs = st.spatial_covariances(cfg, placement, budget)
    real = st.draw_channels(cfg, placement, covs, rng)
    csit = st.mmse_estimate(real, covs, cfg, rng)
    return placement, budget, covs, real, csit


def random_unit(rng, dim):
    x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return x / np.linalg.norm(x)
