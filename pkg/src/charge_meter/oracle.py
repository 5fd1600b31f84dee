"""Exhaustive reference computations for small tori."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exact import (SECTOR_ORDER, grassmann_pfaffian, parse_sector, sector_name,
                    sector_sum_from_classes)
from .lattice import InteractionSpec, TorusLattice, coupling_pairs
from .lognum import LogNumber, log_sum, signed_logsumexp

MAX_BRUTE_SITES = 24
MAX_CYCLE_SITES = 20

# Literal transcription of the sign table; rows are sectors, columns the
# classes ee, eo, oe, oo.
SIGN_TABLE: dict[str, tuple[int, int, int, int]] = {
    "pp": (1, -1, -1, -1),
    "pm": (1, 1, -1, 1),
    "mp": (1, -1, 1, 1),
    "mm": (1, 1, 1, -1),
}


def log_spin_sum(lat: TorusLattice, bond_k, pairs=(), pair_k=None, pair_offsets=None,
                 chunk_bits: int = 16) -> LogNumber:
    """``log sum_sigma exp(sum_b K_b s s + sum_p (c_p + K_p s s))`` over all spin configurations.

    ``bond_k`` holds one coupling per bond; ``pairs`` lists extra site pairs
    ``(a, b)`` with couplings ``pair_k`` and optional constants ``pair_offsets``.
    """
    n = lat.n_sites
    if n > MAX_BRUTE_SITES:
        raise ValueError(f"exhaustive sum limited to {MAX_BRUTE_SITES} sites, got {n}")
    bond_k = np.broadcast_to(np.asarray(bond_k, dtype=float), (lat.n_bonds,))
    ends = lat.bond_ends
    pa = np.array([p[0] for p in pairs], dtype=np.int64)
    pb = np.array([p[1] for p in pairs], dtype=np.int64)
    pk = np.zeros(len(pa)) if pair_k is None else np.asarray(pair_k, dtype=float)
    offset = 0.0 if pair_offsets is None else math.fsum(pair_offsets)
    chunk = 1 << min(chunk_bits, n)
    base = np.arange(chunk, dtype=np.int64)
    shifts = np.arange(n, dtype=np.int64)
    partial_logs = []
    for start in range(0, 1 << n, chunk):
        s = (((start + base)[:, None] >> shifts) & 1).astype(np.int8) * 2 - 1
        expo = (s[:, ends[:, 0]] * s[:, ends[:, 1]]) @ bond_k
        if len(pa):
            expo = expo + (s[:, pa] * s[:, pb]) @ pk
        top = float(np.max(expo))
        partial_logs.append(top + math.log(float(np.sum(np.exp(expo - top)))))
    return signed_logsumexp(np.ones(len(partial_logs)), partial_logs).scaled(offset)


def brute_force_Z(lat: TorusLattice, spec: InteractionSpec, beta: float, pairs=None) -> LogNumber:
    """Partition function by summing over all ``2**N`` spin configurations.

    ``pairs`` optionally replaces the interacting pairs with an explicit
    list of ``(a, b, v)`` triples.
    """
    if pairs is None:
        pairs = coupling_pairs(lat, spec) if spec.lam else []
    pair_k = [beta * spec.lam * v for _, _, v in pairs]
    return log_spin_sum(lat, beta * spec.j_coupling, [(a, b) for a, b, _ in pairs], pair_k)


def _face_mask(lat: TorusLattice, x: int, y: int) -> int:
    bonds = (lat.bond(x, y, 0), lat.bond(x, y + 1, 0), lat.bond(x, y, 1), lat.bond(x + 1, y, 1))
    mask = 0
    for b in bonds:
        mask ^= 1 << b
    return mask


def cycle_space_generators(lat: TorusLattice) -> list[tuple[int, int, int]]:
    """``(mask, h, v)`` for ``N - 1`` plaquettes and two non-contractible loops."""
    gens = []
    for s in range(lat.n_sites - 1):
        gens.append((_face_mask(lat, *lat.coords(s)), 0, 0))
    row = sum(1 << lat.bond(x, 0, 0) for x in range(lat.ell))
    col = sum(1 << lat.bond(0, y, 1) for y in range(lat.big_l))
    gens.append((row, 1, 0))
    gens.append((col, 0, 1))
    return gens


def enumerate_even_subgraphs(lat: TorusLattice, check_distinct: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """All even subgraphs as bond masks with their winding class index ``2 h + v``."""
    if lat.n_sites > MAX_CYCLE_SITES:
        raise ValueError(f"cycle-space enumeration limited to {MAX_CYCLE_SITES} sites")
    masks = np.zeros(1, dtype=np.uint64)
    cls = np.zeros(1, dtype=np.int8)
    for mask, h, v in cycle_space_generators(lat):
        masks = np.concatenate([masks, masks ^ np.uint64(mask)])
        cls = np.concatenate([cls, cls ^ np.int8(2 * h + v)])
    expected = 1 << (lat.n_sites + 1)
    assert masks.size == expected
    if check_distinct:
        assert np.unique(masks).size == expected, "cycle-space generators are dependent"
    return masks, cls


@dataclass(frozen=True)
class WindingClassSums:
    """Polygon sums ``sum prod t_b`` restricted to each winding class."""

    ee: LogNumber
    eo: LogNumber
    oe: LogNumber
    oo: LogNumber

    def as_tuple(self) -> tuple[LogNumber, LogNumber, LogNumber, LogNumber]:
        return self.ee, self.eo, self.oe, self.oo

    def total(self) -> LogNumber:
        return log_sum(self.as_tuple())

    def sector(self, alpha) -> LogNumber:
        return sector_sum_from_classes(alpha, self.as_tuple())


def cycle_space_sector_sums(lat: TorusLattice, t_map) -> WindingClassSums:
    """Class-resolved polygon sums by enumerating the whole cycle space."""
    t = np.asarray(t_map, dtype=float)
    if t.ndim == 0:
        t = np.full(lat.n_bonds, float(t))
    if t.shape != (lat.n_bonds,):
        raise ValueError(f"need one weight per bond ({lat.n_bonds})")
    masks, cls = enumerate_even_subgraphs(lat)
    logw = np.zeros(masks.size)
    alive = np.ones(masks.size, dtype=bool)
    sgn = np.ones(masks.size)
    for b in range(lat.n_bonds):
        on = ((masks >> np.uint64(b)) & np.uint64(1)).astype(bool)
        if t[b] == 0:
            alive &= ~on
            continue
        logw[on] += math.log(abs(t[b]))
        if t[b] < 0:
            sgn[on] *= -1
    sums = []
    for c in range(4):
        sel = alive & (cls == c)
        sums.append(signed_logsumexp(sgn[sel], logw[sel]))
    return WindingClassSums(*sums)


@dataclass(frozen=True)
class SignCheck:
    residuals: dict[str, float]
    failing_cells: list[tuple[str, str]]
    max_residual: float

    @property
    def ok(self) -> bool:
        return not self.failing_cells


def verify_sign_table(lat: TorusLattice, t_map, tol: float = 1e-9) -> SignCheck:
    """Compare class sums recombined with the sign table against each sector Pfaffian."""
    sums = cycle_space_sector_sums(lat, t_map)
    z = [s.to_float() for s in sums.as_tuple()]
    scale = sum(abs(x) for x in z)
    class_names = ("ee", "eo", "oe", "oo")
    residuals = {}
    failing = []
    for alpha in SECTOR_ORDER:
        name = sector_name(alpha)
        signs = SIGN_TABLE[name]
        pf = grassmann_pfaffian(lat, t_map, alpha, strict=False).to_float()
        recombined = math.fsum(s * x for s, x in zip(signs, z))
        res = abs(pf - recombined) / scale
        residuals[name] = res
        if res > tol:
            for c, (s, x) in enumerate(zip(signs, z)):
                if abs(pf - (recombined - 2 * s * x)) / scale <= tol:
                    failing.append((name, class_names[c]))
            if not any(f[0] == name for f in failing):
                failing.append((name, "?"))
    return SignCheck(residuals, failing, max(residuals.values()))


@dataclass(frozen=True)
class FreeInequalities:
    ratio: float
    lower_margin: float
    upper_margin: float
    sumpos: float

    @property
    def ok(self) -> bool:
        return self.lower_margin >= 0 and self.upper_margin >= 0 and self.sumpos >= 0


def lambda0_inequalities(lat: TorusLattice, t_map) -> FreeInequalities:
    """Bounds ``1/3 <= Z / (Z_mm + Z_mp + Z_pm) <= 1`` and ``Z_mp + Z_pm >= 0`` from class sums."""
    sums = cycle_space_sector_sums(lat, t_map)
    z = sums.total()
    three = log_sum([sums.sector(a) for a in ("mm", "mp", "pm")])
    ratio = z.ratio_to(three)
    sumpos = (sums.sector("mp") + sums.sector("pm")) / z
    return FreeInequalities(ratio, ratio - 1 / 3, 1 - ratio, sumpos.to_float())


__all__ = [
    "SIGN_TABLE", "FreeInequalities", "SignCheck", "WindingClassSums", "brute_force_Z",
    "cycle_space_generators", "cycle_space_sector_sums", "enumerate_even_subgraphs",
    "lambda0_inequalities", "log_spin_sum", "parse_sector", "verify_sign_table",
]
