from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from charge_meter import rg

angles = st.floats(0.01, 2 * math.pi - 0.01)


def test_chi_profile():
    assert rg.chi(0.0) == 1.0 and rg.chi(1.0) == 1.0
    assert rg.chi(2.0) == 0.0 and rg.chi(5.0) == 0.0
    assert rg.chi(1.5) == pytest.approx(0.5)
    t = np.linspace(0, 3, 301)
    assert np.all(np.diff(rg.chi(t)) <= 0)


@pytest.mark.parametrize("ell", [16, 64, 100])
def test_partition_of_unity(ell):
    k = 2 * np.pi * (np.arange(ell) + 0.5) / ell
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    total = sum(rg.cutoff(h, k1, k2) for h in range(rg.infrared_scale(ell), 1))
    assert np.max(np.abs(total - 1)) < 1e-12


@given(st.integers(-8, -1), angles, angles)
def test_cutoff_support(h, k1, k2):
    norm = float(rg.momentum_norm(k1, k2))
    val = rg.cutoff(h, k1, k2)
    assert 0 <= val <= 1
    if norm < 2.0 ** (h - 1) or norm > 2.0 ** (h + 1):
        assert val == 0


def test_cutoff_rejects_positive_scale():
    with pytest.raises(ValueError):
        rg.cutoff(1, 0.1, 0.1)


def test_rotation_is_unitary():
    u = rg.critical_mode_rotation()
    assert np.max(np.abs(u @ u.conj().T - np.eye(4))) < 1e-15


@given(angles, angles)
def test_inv2_matches_numpy(k1, k2):
    m = rg.c_chi(k1, k2)
    assert np.allclose(rg.inv2(m), np.linalg.inv(m), rtol=1e-12, atol=1e-14)


@given(angles, angles)
def test_massless_covariance_is_schur_complement(k1, k2):
    q = rg.q_matrix(k1, k2)
    s1, s2 = math.sin(k1), math.sin(k2)
    sig = math.cos(k1) + math.cos(k2) - 2
    block = np.array([[-1j * s1 + s2, 1j * sig], [-1j * sig, -1j * s1 - s2]])
    ref = block - q @ np.linalg.inv(rg.c_chi(k1, k2)) @ q
    assert np.allclose(rg.c_psi(k1, k2), ref, atol=1e-13)


def test_massless_inverse_grows_like_inverse_momentum():
    ks = np.geomspace(1e-4, 1e-2, 8)
    mags = [np.abs(rg.inv2(rg.c_psi(k, 0.0))).max() for k in ks]
    slope, r2 = rg.loglog_slope(ks, mags)
    assert slope == pytest.approx(-1.0, abs=0.01) and r2 > 0.999


def test_fft_propagator_matches_direct_sum():
    g = rg.single_scale_propagator(-2, 16, 24)
    for x in [(0, 0), (3, 5), (15, 23), (8, 12)]:
        assert np.allclose(g[x], rg.propagator_at(-2, 16, 24, x), atol=1e-14)


def test_antiperiodic_in_both_directions():
    a = rg.propagator_at(-1, 16, 16, (3, 2))
    assert np.allclose(rg.propagator_at(-1, 16, 16, (19, 2)), -a, atol=1e-15)
    assert np.allclose(rg.propagator_at(-1, 16, 16, (3, 18)), -a, atol=1e-15)


def test_scales_sum_to_full_propagator():
    ell = 32
    full = rg.single_scale_propagator(None, ell, ell)
    parts = sum(rg.single_scale_propagator(h, ell, ell) for h in range(rg.infrared_scale(ell), 1))
    assert np.allclose(parts, full, atol=1e-13)


def test_propagator_argument_checks():
    with pytest.raises(ValueError):
        rg.single_scale_propagator(0, 15, 16)
    with pytest.raises(ValueError):
        rg.single_scale_propagator(0, 16, 16, z=0)
    with pytest.raises(ValueError):
        rg.single_scale_propagator(0, 16, 16, field="phi")


def test_sup_norm_halves_per_scale():
    n = rg.scale_sup_norms(256, 256, [-1, -2, -3])
    assert np.log2(n[0] / n[1]) == pytest.approx(1, abs=0.05)
    assert np.log2(n[1] / n[2]) == pytest.approx(1, abs=0.05)


def test_massive_propagator_decays_exponentially():
    slope, r2 = rg.chi_decay_fit(32)
    assert slope < -2 and r2 > 0.99


# frozen from the implementation; the defect falls faster than ell^-3.5
POISSON_DEFECT = {32: 3.2462842650499094e-03, 64: 3.7736769450215157e-04, 128: 1.0987663670227678e-05}


def test_poisson_image_defect():
    got = {ell: rg.poisson_image_defect(0, ell, ell) for ell in POISSON_DEFECT}
    for ell, ref in POISSON_DEFECT.items():
        assert got[ell] == pytest.approx(ref, rel=1e-6)
    slope, _ = rg.loglog_slope(list(got), list(got.values()))
    assert slope < -3.5


def test_localization_kernels_at_small_distance():
    g, d1, d2 = rg.localization_kernels(64, 64, np.array([0, 1]), np.array([0, 0]))
    assert g[0] == 1.0 and d1[0] == 0.0
    assert d1[1] == pytest.approx(1.0, abs=1e-14)
    assert np.all(d2 == 0)


def test_localization_error_is_quartic():
    slopes = rg.localization_slopes(256)
    for name in ("G", "d1", "d2"):
        assert slopes[name] == pytest.approx(4, abs=0.5)


def test_linear_fit():
    slope, r2 = rg.linear_fit([0, 1, 2], [1, 3, 5])
    assert slope == pytest.approx(2) and r2 == pytest.approx(1)
