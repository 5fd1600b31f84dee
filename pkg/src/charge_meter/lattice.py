"""Periodic square lattice, pair interaction, spin and bond-subset encodings.

Sites are indexed row-major, ``site = x + ell * y`` with ``x`` the column
(horizontal, period ``ell``) and ``y`` the row (vertical, period ``big_l``).
Bond ``2 * site + d`` joins ``site`` to its right neighbour (``d = 0``) or to
its upper neighbour (``d = 1``).  Horizontal bonds leaving column ``ell - 1``
and vertical bonds leaving row ``big_l - 1`` are the seam bonds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

SpinConfig = int
"""Bit-packed spin configuration: bit ``i`` set means spin ``+1`` at site ``i``."""

EvenSubgraph = int
"""Bit-packed bond subset: bit ``b`` set means bond ``b`` is occupied."""


@dataclass(frozen=True)
class TorusLattice:
    """An ``ell`` by ``big_l`` torus with both periods even."""

    ell: int
    big_l: int

    def __post_init__(self):
        for name in ("ell", "big_l"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise TypeError(f"{name} must be an integer, got {value!r}")
            if value < 2 or value % 2:
                raise ValueError(f"{name} must be even and >= 2, got {value}")

    @property
    def n_sites(self) -> int:
        return self.ell * self.big_l

    @property
    def n_bonds(self) -> int:
        return 2 * self.n_sites

    def site(self, x: int, y: int) -> int:
        return (x % self.ell) + self.ell * (y % self.big_l)

    def coords(self, site: int) -> tuple[int, int]:
        return site % self.ell, site // self.ell

    def bond(self, x: int, y: int, direction: int) -> int:
        return 2 * self.site(x, y) + direction

    @cached_property
    def bond_ends(self) -> np.ndarray:
        """Array of shape ``(n_bonds, 2)`` with the two sites of each bond."""
        ends = np.empty((self.n_bonds, 2), dtype=np.int64)
        for s in range(self.n_sites):
            x, y = self.coords(s)
            ends[2 * s] = (s, self.site(x + 1, y))
            ends[2 * s + 1] = (s, self.site(x, y + 1))
        return ends

    @cached_property
    def seam_masks(self) -> tuple[int, int]:
        """Bit masks of the horizontal and vertical seam bonds."""
        horiz = 0
        vert = 0
        for y in range(self.big_l):
            horiz |= 1 << self.bond(self.ell - 1, y, 0)
        for x in range(self.ell):
            vert |= 1 << self.bond(x, self.big_l - 1, 1)
        return horiz, vert

    @cached_property
    def seam_flags(self) -> np.ndarray:
        """Boolean array ``(n_bonds, 2)``: column 0 horizontal seam, column 1 vertical seam."""
        flags = np.zeros((self.n_bonds, 2), dtype=bool)
        horiz, vert = self.seam_masks
        for b in range(self.n_bonds):
            flags[b, 0] = bool(horiz >> b & 1)
            flags[b, 1] = bool(vert >> b & 1)
        return flags

    def min_image(self, dx: int, dy: int) -> tuple[int, int]:
        dx %= self.ell
        dy %= self.big_l
        if dx > self.ell // 2:
            dx -= self.ell
        if dy > self.big_l // 2:
            dy -= self.big_l
        return dx, dy


@dataclass(frozen=True)
class InteractionSpec:
    """Nearest-neighbour coupling plus a finite-range isotropic pair potential.

    ``v_shells`` maps squared distances ``r2`` to potential values; the
    potential depends on ``|x|`` only, so each shell contributes every
    integer vector of that squared length.
    """

    j_coupling: float = 1.0
    lam: float = 0.0
    v_shells: tuple[tuple[int, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        shells = tuple(sorted((int(r2), float(v)) for r2, v in dict(self.v_shells).items()))
        object.__setattr__(self, "v_shells", shells)
        if not math.isfinite(self.j_coupling) or self.j_coupling <= 0:
            raise ValueError("j_coupling must be positive")
        if not math.isfinite(self.lam) or self.lam < 0:
            raise ValueError("lambda must be non-negative")
        for r2, v in shells:
            if r2 < 2:
                raise ValueError(f"shell r2={r2}: the potential must vanish at 0 and at nearest neighbours")
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"shell r2={r2}: potential must be finite and non-negative")
            if not shell_vectors(r2):
                raise ValueError(f"no integer vector has squared length {r2}")

    @property
    def range(self) -> float:
        if not self.v_shells:
            return 0.0
        return math.sqrt(max(r2 for r2, _ in self.v_shells))

    @property
    def interacting(self) -> bool:
        return self.lam > 0 and any(v > 0 for _, v in self.v_shells)

    def half_shell(self) -> list[tuple[int, int, float]]:
        """One representative of each ``{d, -d}`` pair over all active shells."""
        out = []
        for r2, v in self.v_shells:
            if v == 0:
                continue
            for dx, dy in shell_vectors(r2):
                if dy > 0 or (dy == 0 and dx > 0):
                    out.append((dx, dy, v))
        return out


def shell_vectors(r2: int) -> list[tuple[int, int]]:
    """All integer vectors with ``dx**2 + dy**2 == r2``."""
    r = math.isqrt(r2)
    out = []
    for dx in range(-r, r + 1):
        rest = r2 - dx * dx
        dy = math.isqrt(rest)
        if dy * dy == rest:
            out.append((dx, dy))
            if dy:
                out.append((dx, -dy))
    return sorted(out)


def decode_spins(config: SpinConfig | Sequence[int], n_sites: int) -> np.ndarray:
    """Return a ``+-1`` array from a bit-packed or explicit configuration."""
    if isinstance(config, (int, np.integer)):
        if config < 0 or config >> n_sites:
            raise ValueError("spin configuration has bits outside the lattice")
        bits = (int(config) >> np.arange(n_sites)) & 1
        return (2 * bits - 1).astype(np.int8)
    spins = np.asarray(config)
    if spins.shape != (n_sites,) or not np.all(np.abs(spins) == 1):
        raise ValueError("explicit spin configuration must be a +-1 vector of length n_sites")
    return spins.astype(np.int8)


def coupling_pairs(lat: TorusLattice, spec: InteractionSpec) -> list[tuple[int, int, float]]:
    """Site pairs ``(a, b, v)`` reached by one representative of each shell vector.

    Periodic images are kept as separate terms, the same way the two bonds
    joining the sites of a period-2 direction are both kept.  This agrees
    with the unordered-pair sum whenever minimal images are unambiguous.
    """
    out = []
    for dx, dy, v in spec.half_shell():
        for s in range(lat.n_sites):
            x, y = lat.coords(s)
            out.append((s, lat.site(x + dx, y + dy), v))
    return out


def interacting_pairs(lat: TorusLattice, spec: InteractionSpec) -> list[tuple[int, int, float]]:
    """Unordered interacting pairs ``(a, b, v)`` with ``a < b`` and ``v > 0``.

    Raises:
        ValueError: if the range is not below half the shorter period, so
            minimal-image displacements would be ambiguous.
    """
    if spec.v_shells and not spec.range < min(lat.ell, lat.big_l) / 2:
        raise ValueError(
            f"interaction range {spec.range:.6g} must be below min(ell, L)/2 = {min(lat.ell, lat.big_l) / 2}"
        )
    seen = {}
    for a, b, v in coupling_pairs(lat, spec):
        key = (min(a, b), max(a, b))
        if key in seen:
            raise ValueError(f"pair {key} reached twice; minimal image is ambiguous")
        seen[key] = v
    return sorted((a, b, v) for (a, b), v in seen.items())


def energy(config: SpinConfig | Sequence[int], lat: TorusLattice, spec: InteractionSpec) -> float:
    """Hamiltonian value ``-J sum_nn s s - lambda sum_pairs v s s``."""
    s = decode_spins(config, lat.n_sites).astype(np.int64)
    ends = lat.bond_ends
    nn = int(np.sum(s[ends[:, 0]] * s[ends[:, 1]]))
    e = -spec.j_coupling * nn
    if spec.lam:
        e -= spec.lam * math.fsum(v * int(s[a] * s[b]) for a, b, v in coupling_pairs(lat, spec))
    return float(e)


def is_even_subgraph(mask: EvenSubgraph, lat: TorusLattice) -> bool:
    if mask < 0 or mask >> lat.n_bonds:
        return False
    degree = np.zeros(lat.n_sites, dtype=np.int64)
    for b in iter_bits(mask):
        a, c = lat.bond_ends[b]
        degree[a] += 1
        degree[c] += 1
    return bool(np.all(degree % 2 == 0))


def winding_parity(mask: EvenSubgraph, lat: TorusLattice) -> tuple[int, int]:
    """Horizontal and vertical winding parities of an even bond subset.

    Raises:
        ValueError: if some site has odd degree in ``mask``.
    """
    if not is_even_subgraph(mask, lat):
        raise ValueError("bond subset is not an even subgraph")
    horiz, vert = lat.seam_masks
    return (mask & horiz).bit_count() % 2, (mask & vert).bit_count() % 2


def iter_bits(mask: int) -> Iterable[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_from_bonds(bonds: Iterable[int]) -> int:
    mask = 0
    for b in bonds:
        mask ^= 1 << int(b)
    return mask
