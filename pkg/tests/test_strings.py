from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from charge_meter import exact, oracle, strings
from charge_meter.errors import ConsistencyError
from charge_meter.lattice import InteractionSpec, TorusLattice, interacting_pairs

LAT = TorusLattice(4, 4)
DIAG = InteractionSpec(1.0, 0.3, ((2, 1.0),))
SUBSET = interacting_pairs(LAT, DIAG)[:5]


def rel(a, b):
    assert a.sign == b.sign
    return abs(math.expm1(a.log_abs - b.log_abs))


def test_diagonal_pair_has_two_minimal_corner_paths():
    a, b, _ = interacting_pairs(LAT, DIAG)[0]
    paths = strings.pair_paths(LAT, a, b, allow_winding=False)
    assert len(paths) == 2
    assert {p.shape for p in paths} == {"corner-hv", "corner-vh"}
    assert all(len(p) == 2 for p in paths)
    assert paths[0].mask & paths[1].mask == 0


def test_path_endpoints_have_odd_degree():
    for a, b, _ in interacting_pairs(LAT, DIAG)[:8]:
        for p in strings.pair_paths(LAT, a, b):
            deg = np.bincount(LAT.bond_ends[list(p.bonds)].ravel(), minlength=LAT.n_sites)
            odd = set(np.flatnonzero(deg % 2).tolist())
            assert odd == {a, b}


def test_winding_paths_come_last():
    a, b, _ = interacting_pairs(LAT, DIAG)[0]
    paths = strings.pair_paths(LAT, a, b)
    assert [p.winds for p in paths] == sorted(p.winds for p in paths)
    assert any(p.winds for p in paths)


def test_catalog_cap():
    with pytest.raises(ValueError):
        strings.string_catalog(LAT, DIAG, cap=2)


def test_unknown_convention():
    with pytest.raises(ValueError):
        strings.channels(LAT, DIAG, 0.3, convention="nope")


def test_two_channels_per_pair():
    chans = strings.channels(LAT, DIAG, 0.4, "split", pairs=SUBSET)
    assert len(chans) == 2 * len(SUBSET)
    assert all(c.tau == pytest.approx(math.tanh(0.4 * 0.3 / 2)) for c in chans)


def blackened_by_subsets(chans):
    # every subset of channels explicitly
    out = {}
    for bits in range(1 << len(chans)):
        mask, w = 0, 1.0
        for i, ch in enumerate(chans):
            if bits >> i & 1:
                mask ^= ch.path.mask
                w *= ch.tau
        out[mask] = out.get(mask, 0.0) + w
    return out


def test_blackened_weights_match_subset_sum():
    chans = strings.channels(LAT, DIAG, 0.5, "split", pairs=SUBSET)
    fast = strings.blackened_weights(chans)
    slow = blackened_by_subsets(chans)
    assert fast.keys() == slow.keys()
    for k in slow:
        assert fast[k] == pytest.approx(slow[k], rel=1e-13)


def test_deformed_couplings():
    out = strings.deformed_couplings(0b101, 0.5, 4)
    assert out.tolist() == [2.0, 0.5, 2.0, 0.5]
    with pytest.raises(ValueError):
        strings.deformed_couplings(0, 0.0, 4)


@pytest.mark.parametrize("convention", sorted(strings.CONVENTIONS))
@pytest.mark.parametrize("beta", [0.2, 0.44, 0.7])
def test_string_sum_reproduces_enumeration(convention, beta):
    q = strings.interacting_sectors(LAT, DIAG, beta, convention, method="strings", pairs=SUBSET, check=False)
    ref = oracle.brute_force_Z(LAT, DIAG, beta, pairs=SUBSET)
    assert rel(exact.combine_sectors(q), ref) < 1e-10


@pytest.mark.parametrize("convention", ["split", "winding"])
def test_twisted_route_agrees_sector_by_sector(convention):
    a = strings.interacting_sectors(LAT, DIAG, 0.5, convention, method="strings", pairs=SUBSET, check=False)
    b = strings.interacting_sectors(LAT, DIAG, 0.5, convention, method="twisted", pairs=SUBSET, check=False)
    for name in exact.SECTOR_NAMES:
        assert rel(a[name], b[name]) < 1e-10


def test_conventions_change_sectors_but_not_their_combination():
    a = strings.interacting_sectors(LAT, DIAG, 0.5, "split", method="twisted", check=False)
    b = strings.interacting_sectors(LAT, DIAG, 0.5, "winding", method="twisted", check=False)
    assert rel(exact.combine_sectors(a), exact.combine_sectors(b)) < 1e-10
    assert max(rel(a[n], b[n]) for n in ("mp", "pm")) > 1e-6


def test_zero_coupling_reduces_to_free_sectors():
    spec = InteractionSpec(1.0, 0.0, ((2, 1.0),))
    q = strings.interacting_sectors(LAT, spec, 0.4, check=False)
    free = exact.uniform_quartet(LAT, math.tanh(0.4))
    for name in exact.SECTOR_NAMES:
        assert rel(q[name], free[name]) < 1e-12


def test_full_shell_consistency_check_passes():
    q = strings.interacting_sectors(LAT, DIAG, 0.44, check=True)
    assert q.mm.sign == 1


def test_consistency_error_is_raised(monkeypatch):
    real = oracle.brute_force_Z
    monkeypatch.setattr(strings, "brute_force_Z", lambda *a, **k: real(*a, **k).scaled(1e-3))
    with pytest.raises(ConsistencyError):
        strings.interacting_sectors(LAT, DIAG, 0.44, pairs=SUBSET, check=True)


@given(st.floats(0.05, 1.0), st.floats(0.0, 0.5))
def test_lemma1_bounds(beta, lam):
    spec = InteractionSpec(1.0, lam, ((2, 1.0),))
    rep = strings.lemma1_check(LAT, spec, beta, check=False)
    assert rep.ok, rep.verdicts
    assert 1 / 3 <= rep.ratio <= 1


def test_ratio_tends_to_one_third_at_high_temperature():
    rep = strings.lemma1_check(LAT, DIAG, 1e-7, check=False)
    assert rep.ratio == pytest.approx(1 / 3, abs=1e-6)
    assert rep.verdicts == "lower=pass;upper=pass;sumpos=pass"
