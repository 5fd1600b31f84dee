from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from charge_meter.lattice import (
    InteractionSpec, TorusLattice, coupling_pairs, decode_spins, energy, interacting_pairs,
    is_even_subgraph, mask_from_bonds, shell_vectors, winding_parity,
)

even = st.sampled_from([2, 4, 6])


@pytest.mark.parametrize("ell,big_l", [(1, 2), (3, 4), (2, 0), (4, 5)])
def test_rejects_odd_or_small_periods(ell, big_l):
    with pytest.raises(ValueError):
        TorusLattice(ell, big_l)


@given(even, even)
def test_every_site_has_four_bonds(ell, big_l):
    lat = TorusLattice(ell, big_l)
    ends = lat.bond_ends
    assert ends.shape == (2 * lat.n_sites, 2)
    counts = np.bincount(ends.ravel(), minlength=lat.n_sites)
    assert np.all(counts == 4)


def test_seam_bonds_sit_on_the_last_column_and_row():
    lat = TorusLattice(4, 6)
    h_mask, v_mask = lat.seam_masks
    assert mask_from_bonds(lat.bond(3, y, 0) for y in range(6)) == h_mask
    assert mask_from_bonds(lat.bond(x, 5, 1) for x in range(4)) == v_mask


def test_shell_vectors_diagonal():
    assert sorted(shell_vectors(2)) == [(-1, -1), (-1, 1), (1, -1), (1, 1)]
    assert shell_vectors(3) == []


def test_spec_validation():
    with pytest.raises(ValueError):
        InteractionSpec(1.0, 0.1, ((1, 1.0),))
    with pytest.raises(ValueError):
        InteractionSpec(1.0, 0.1, ((2, -1.0),))


def test_interacting_pairs_on_4x4_diagonal_shell():
    lat = TorusLattice(4, 4)
    pairs = interacting_pairs(lat, InteractionSpec(1.0, 0.2, ((2, 1.0),)))
    # each site has 4 diagonal neighbours, each pair counted once
    assert len(pairs) == 32
    assert all(a < b for a, b, _ in pairs)
    assert len({(a, b) for a, b, _ in pairs}) == 32


def test_interacting_pairs_need_room_on_the_torus():
    with pytest.raises(ValueError):
        interacting_pairs(TorusLattice(2, 2), InteractionSpec(1.0, 0.2, ((2, 1.0),)))


def _energy_by_hand(spins, lat, spec):
    e = 0.0
    for x, y in itertools.product(range(lat.ell), range(lat.big_l)):
        s = spins[lat.site(x, y)]
        e -= spec.j_coupling * s * (spins[lat.site(x + 1, y)] + spins[lat.site(x, y + 1)])
        for r2, v in spec.v_shells:
            for dx, dy in shell_vectors(r2):
                if (dx, dy) > (0, 0):
                    e -= spec.lam * v * s * spins[lat.site(x + dx, y + dy)]
    return e


@given(st.integers(0, 2 ** 16 - 1), st.floats(0.0, 1.0))
def test_energy_matches_direct_sum(config, lam):
    lat = TorusLattice(4, 4)
    spec = InteractionSpec(0.7, lam, ((2, 1.0),))
    spins = decode_spins(config, lat.n_sites)
    assert energy(config, lat, spec) == pytest.approx(_energy_by_hand(spins, lat, spec), abs=1e-12)


@given(st.integers(0, 2 ** 16 - 1))
def test_energy_is_flip_symmetric(config):
    lat = TorusLattice(4, 4)
    spec = InteractionSpec(1.0, 0.3, ((2, 1.0),))
    assert energy(config, lat, spec) == pytest.approx(energy(config ^ 0xFFFF, lat, spec))


def test_coupling_pairs_keep_periodic_images():
    # on a 2x2 torus both diagonal displacements join the same two sites
    lat = TorusLattice(2, 2)
    pairs = coupling_pairs(lat, InteractionSpec(1.0, 0.5, ((2, 1.0),)))
    assert len(pairs) == 2 * lat.n_sites


def test_winding_parity():
    lat = TorusLattice(4, 4)
    row = mask_from_bonds(lat.bond(x, 0, 0) for x in range(4))
    col = mask_from_bonds(lat.bond(0, y, 1) for y in range(4))
    face = mask_from_bonds([lat.bond(0, 0, 0), lat.bond(0, 0, 1), lat.bond(1, 0, 1), lat.bond(0, 1, 0)])
    assert winding_parity(row, lat) == (1, 0)
    assert winding_parity(col, lat) == (0, 1)
    assert winding_parity(row ^ col, lat) == (1, 1)
    assert winding_parity(face, lat) == (0, 0)
    assert is_even_subgraph(face, lat)
    with pytest.raises(ValueError):
        winding_parity(1, lat)
