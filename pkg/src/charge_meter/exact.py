"""Exact boundary-condition sectors of the nearest-neighbour model.

A sector is labelled by ``alpha = (a1, a2)`` with entries in ``{+1, -1}``;
``-1`` is the antiperiodic choice in that direction.  Short names are
``"mm"``, ``"mp"``, ``"pm"``, ``"pp"`` with ``m`` for ``-1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .lattice import TorusLattice
from .lognum import LogNumber, log_sum, signed_logsumexp
from .pfaffian import pfaffian, pfaffian_batch

Sector = tuple[int, int]
SectorLike = Union[Sector, str]

T_CRITICAL = math.sqrt(2.0) - 1.0
BETA_CRITICAL = 0.5 * math.log1p(math.sqrt(2.0))

SECTOR_NAMES: dict[str, Sector] = {"mm": (-1, -1), "mp": (-1, 1), "pm": (1, -1), "pp": (1, 1)}
SECTOR_ORDER: tuple[Sector, ...] = ((-1, -1), (-1, 1), (1, -1), (1, 1))

# winding classes, in order ee, eo, oe, oo (horizontal parity first)
CLASSES: tuple[tuple[int, int], ...] = ((0, 0), (0, 1), (1, 0), (1, 1))


def parse_sector(alpha: SectorLike) -> Sector:
    if isinstance(alpha, str):
        try:
            return SECTOR_NAMES[alpha]
        except KeyError:
            raise ValueError(f"unknown sector {alpha!r}; expected one of {sorted(SECTOR_NAMES)}") from None
    a1, a2 = alpha
    if a1 not in (-1, 1) or a2 not in (-1, 1):
        raise ValueError(f"sector entries must be +1 or -1, got {alpha!r}")
    return int(a1), int(a2)


def sector_name(alpha: SectorLike) -> str:
    a1, a2 = parse_sector(alpha)
    return ("p" if a1 > 0 else "m") + ("p" if a2 > 0 else "m")


def sector_sign(alpha: SectorLike, h: int, v: int) -> int:
    """Sign picked up in sector ``alpha`` by a subgraph with winding parities ``(h, v)``."""
    a1, a2 = parse_sector(alpha)
    h, v = h % 2, v % 2
    return (-a1) ** h * (-a2) ** v * (-1) ** (h * v)


@dataclass(frozen=True)
class SectorQuartet:
    mm: LogNumber
    mp: LogNumber
    pm: LogNumber
    pp: LogNumber

    def __getitem__(self, alpha: SectorLike) -> LogNumber:
        return getattr(self, sector_name(alpha))

    def as_dict(self) -> dict[str, LogNumber]:
        return {"mm": self.mm, "mp": self.mp, "pm": self.pm, "pp": self.pp}


def combine_sectors(q: SectorQuartet, cancellation_tol: float = 1e-8) -> LogNumber:
    """``(Z_mm + Z_mp + Z_pm - Z_pp) / 2``.

    Raises:
        CancellationError: when the result is below ``cancellation_tol``
            times the largest of the four terms.
    """
    total = log_sum([q.mm, q.mp, q.pm, -q.pp], check_cancellation=cancellation_tol)
    return total.scaled(-math.log(2.0))


def momentum_grid(lat: TorusLattice, alpha: SectorLike) -> tuple[np.ndarray, np.ndarray]:
    """Momenta ``k1`` (length ell) and ``k2`` (length L) of the sector grid."""
    a1, a2 = parse_sector(alpha)
    k1 = 2 * np.pi * (np.arange(lat.ell) + (1 - a1) / 4) / lat.ell
    k2 = 2 * np.pi * (np.arange(lat.big_l) + (1 - a2) / 4) / lat.big_l
    return k1, k2


def _check_t(t: float) -> float:
    t = float(t)
    if not 0.0 < t < 1.0:
        raise ValueError(f"t = tanh(beta J) must lie in (0, 1), got {t}")
    return t


def sector_partition_uniform(lat: TorusLattice, t: float, alpha: SectorLike) -> LogNumber:
    """Sector partition function at uniform ``t = tanh(beta J)`` as a momentum product.

    In the fully periodic sector the zero mode makes the result vanish
    exactly at ``t = T_CRITICAL`` and turn negative above it.
    """
    t = _check_t(t)
    alpha = parse_sector(alpha)
    k1, k2 = momentum_grid(lat, alpha)
    cos_sum = np.cos(k1)[:, None] + np.cos(k2)[None, :]
    factors = (1 + t * t) ** 2 - 2 * t * (1 - t * t) * cos_sum
    sign = 1
    log_extra = 0.0
    if alpha == (1, 1):
        keep = np.ones_like(factors, dtype=bool)
        keep[0, 0] = False
        keep[lat.ell // 2, lat.big_l // 2] = False
        factors = factors[keep]
        if t == T_CRITICAL:
            return LogNumber.zero()
        zero_mode = 1 - 2 * t - t * t
        corner_mode = 1 + 2 * t - t * t
        sign = 1 if zero_mode > 0 else -1
        log_extra = math.log(abs(zero_mode)) + math.log(corner_mode)
    prefactor = lat.n_sites * (math.log(2.0) - math.log1p(-t * t))
    log_abs = math.fsum([prefactor, 0.5 * math.fsum(np.log(factors).ravel()), log_extra])
    return LogNumber(sign, log_abs)


def uniform_quartet(lat: TorusLattice, t: float) -> SectorQuartet:
    return SectorQuartet(*(sector_partition_uniform(lat, t, a) for a in SECTOR_ORDER))


def gamma(k):
    """``arccosh(2 - cos k)``, evaluated without cancellation near ``k = 0``."""
    k = np.asarray(k, dtype=float)
    x = 2.0 * np.sin(0.5 * k) ** 2
    out = np.log1p(x + np.sqrt(x * (x + 2.0)))
    return out if out.ndim else float(out)


def gamma_prime(k):
    """Derivative of :func:`gamma` on ``[0, 2 pi]``; the right limit 1 at ``k = 0``."""
    k = np.asarray(k, dtype=float)
    out = np.sqrt(2.0) * np.cos(0.5 * k) / np.sqrt(3.0 - np.cos(k))
    return out if out.ndim else float(out)


def _log_2cosh(x: np.ndarray) -> np.ndarray:
    x = np.abs(x)
    return x + np.log1p(np.exp(-2 * x))


def _log_2sinh(x: np.ndarray) -> np.ndarray:
    return x + np.log1p(-np.exp(-2 * x))


def critical_sector_ff(lat: TorusLattice, alpha: SectorLike, exchanged: bool = False) -> LogNumber:
    """Critical sector partition function as a product over one momentum direction.

    ``exchanged`` selects the form with the roles of the two periods
    swapped.  Only the three sectors other than ``"pp"`` have such a form.
    """
    name = sector_name(alpha)
    if name == "pp":
        raise ValueError("the fully periodic sector has no single-direction product form")
    ell, big_l = lat.ell, lat.big_l
    if exchanged:
        ell, big_l = big_l, ell
        name = {"mm": "mm", "mp": "pm", "pm": "mp"}[name]
    odd = gamma((2 * np.arange(ell) + 1) * np.pi / ell)
    even = gamma(2 * np.arange(ell) * np.pi / ell)
    if name == "mm":
        logs = _log_2cosh(big_l * odd / 2)
    elif name == "mp":
        logs = _log_2sinh(big_l * odd / 2)
    else:
        logs = _log_2cosh(big_l * even / 2)
    prefactor = 0.5 * lat.n_sites * math.log(2.0)
    return LogNumber(1, math.fsum([prefactor, math.fsum(logs)]))


def ratio_term(ell: int, big_l: int) -> float:
    """``Z / Z_mm`` at criticality, from the three non-periodic sectors.

    Uses ``Z_pp = 0`` at the critical point, so the ratio is
    ``(1 + prod tanh + prod tanh) / 2``.
    """
    odd = gamma((2 * np.arange(ell) + 1) * np.pi / ell) * big_l / 2
    odd_t = gamma((2 * np.arange(big_l) + 1) * np.pi / big_l) * ell / 2
    return 0.5 * (1.0 + math.exp(_log_tanh_sum(odd)) + math.exp(_log_tanh_sum(odd_t)))


def _log_tanh_sum(x: np.ndarray) -> float:
    e = np.exp(-2 * x)
    return math.fsum(np.log1p(-e) - np.log1p(e))


# Grassmann action, four variables per site in the order Hbar, H, Vbar, V.
_SITE_TERMS = ((0, 1), (2, 3), (2, 0), (3, 0), (1, 2), (3, 1))


def kasteleyn_matrix(lat: TorusLattice, t_map, alpha: SectorLike) -> np.ndarray:
    """Antisymmetric ``4N x 4N`` coefficient matrix of the quadratic Grassmann action.

    ``t_map`` gives one bond weight per bond (or a scalar).  Seam bonds get
    the boundary factor of the sector, ``+1`` periodic and ``-1``
    antiperiodic.
    """
    return kasteleyn_matrices(lat, np.atleast_2d(_bond_weights(lat, t_map)), alpha)[0]


def kasteleyn_matrices(lat: TorusLattice, t_maps: np.ndarray, alpha: SectorLike) -> np.ndarray:
    a1, a2 = parse_sector(alpha)
    t_maps = np.asarray(t_maps, dtype=float)
    nb, n = t_maps.shape[0], 4 * lat.n_sites
    mats = np.zeros((nb, n, n))
    for s in range(lat.n_sites):
        for i, j in _SITE_TERMS:
            mats[:, 4 * s + i, 4 * s + j] += 1.0
            mats[:, 4 * s + j, 4 * s + i] -= 1.0
    flags = lat.seam_flags
    ends = lat.bond_ends
    for b in range(lat.n_bonds):
        a, c = ends[b]
        if b % 2 == 0:
            i, j = 4 * a + 0, 4 * c + 1
            bc = a1 if flags[b, 0] else 1
        else:
            i, j = 4 * a + 2, 4 * c + 3
            bc = a2 if flags[b, 1] else 1
        mats[:, i, j] += bc * t_maps[:, b]
        mats[:, j, i] -= bc * t_maps[:, b]
    return mats


def _bond_weights(lat: TorusLattice, t_map) -> np.ndarray:
    arr = np.asarray(t_map, dtype=float)
    if arr.ndim == 0:
        arr = np.full(lat.n_bonds, float(arr))
    if arr.shape != (lat.n_bonds,):
        raise ValueError(f"need one weight per bond ({lat.n_bonds}), got shape {arr.shape}")
    return arr


def grassmann_pfaffian(lat: TorusLattice, t_map, alpha: SectorLike, strict: bool = True) -> LogNumber:
    """Signed polygon sum of sector ``alpha`` for bond weights ``t_map``.

    Equals ``sum_G sign_alpha(G) prod_{b in G} t_b`` over even subgraphs.
    """
    return pfaffian(kasteleyn_matrix(lat, t_map, alpha), strict=strict) * PFAFFIAN_SIGN


def grassmann_pfaffians(lat: TorusLattice, t_maps: np.ndarray, alpha: SectorLike,
                        chunk: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """Batched :func:`grassmann_pfaffian`; returns ``(signs, log_abs)``."""
    t_maps = np.atleast_2d(np.asarray(t_maps, dtype=float))
    signs = np.empty(len(t_maps))
    logs = np.empty(len(t_maps))
    for start in range(0, len(t_maps), chunk):
        sl = slice(start, start + chunk)
        s, lg = pfaffian_batch(kasteleyn_matrices(lat, t_maps[sl], alpha))
        signs[sl] = s * PFAFFIAN_SIGN
        logs[sl] = lg
    return signs, logs


# Global sign of the Grassmann integral relative to the polygon sum, fixed
# by comparison with explicit even-subgraph enumeration on the 2x2 torus.
PFAFFIAN_SIGN = 1


def kasteleyn_pfaffian(lat: TorusLattice, couplings, beta: float, alpha: SectorLike) -> LogNumber:
    """Sector partition function for bond couplings ``J_b`` at inverse temperature ``beta``.

    Raises:
        SingularPivotError: if elimination meets a pivot below 1e-300.
    """
    j = _bond_weights(lat, couplings)
    k = beta * j
    pf = grassmann_pfaffian(lat, np.tanh(k), alpha)
    log_pref = lat.n_sites * math.log(2.0) + math.fsum(np.log(np.cosh(k)))
    return pf.scaled(log_pref)


def sector_sum_from_classes(alpha: SectorLike, class_sums: Iterable[LogNumber]) -> LogNumber:
    terms = []
    for (h, v), z in zip(CLASSES, class_sums):
        terms.append(z if sector_sign(alpha, h, v) > 0 else -z)
    return log_sum(terms)


__all__ = [
    "BETA_CRITICAL", "CLASSES", "LogNumber", "SECTOR_NAMES", "SECTOR_ORDER", "SectorQuartet",
    "T_CRITICAL", "combine_sectors", "critical_sector_ff", "gamma", "gamma_prime",
    "grassmann_pfaffian", "grassmann_pfaffians", "kasteleyn_matrix", "kasteleyn_pfaffian",
    "momentum_grid", "parse_sector", "ratio_term", "sector_name", "sector_partition_uniform",
    "sector_sign", "sector_sum_from_classes", "signed_logsumexp", "uniform_quartet",
]
