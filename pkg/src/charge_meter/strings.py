"""Sector partition functions of the interacting model through string expansion.

Every interacting pair ``(x, y)`` contributes
``cosh^2(K/2) (1 + tanh(K/2) s_x s_y)^2`` with ``K = beta lambda v``.  Each
of the two factors is a channel: absent, or present with ``s_x s_y``
written as the product of bond variables along a lattice path.  The bonds
covered an odd number of times (the blackened set) act on the free model as
derivatives in the bond couplings, which replaces their weight ``t`` by
``1/t`` and multiplies by ``t`` once per blackened bond.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConsistencyError
from .exact import (CLASSES, SECTOR_ORDER, SectorQuartet, combine_sectors, grassmann_pfaffians,
                    sector_name, sector_sign)
from .lattice import InteractionSpec, TorusLattice, interacting_pairs, iter_bits
from .lognum import LogNumber, log_sum, signed_logsumexp
from .oracle import brute_force_Z, log_spin_sum

DEFAULT_CATALOG_CAP = 16
MAX_STRING_CHANNELS = 16


@dataclass(frozen=True)
class StringPath:
    """A lattice path joining the two sites of an interacting pair."""

    pair: tuple[int, int]
    bonds: tuple[int, ...]
    shape: str
    winds: bool

    @property
    def mask(self) -> int:
        m = 0
        for b in self.bonds:
            m ^= 1 << b
        return m

    def __len__(self) -> int:
        return len(self.bonds)


def _walk(lat: TorusLattice, x: int, y: int, legs) -> tuple[list[int], int, int]:
    bonds = []
    for axis, step, count in legs:
        for _ in range(count):
            if axis == 0:
                if step > 0:
                    bonds.append(lat.bond(x, y, 0))
                    x += 1
                else:
                    x -= 1
                    bonds.append(lat.bond(x, y, 0))
            else:
                if step > 0:
                    bonds.append(lat.bond(x, y, 1))
                    y += 1
                else:
                    y -= 1
                    bonds.append(lat.bond(x, y, 1))
    return bonds, x, y


def _leg_options(d: int, period: int, allow_winding: bool):
    if d == 0:
        return [(0, 0, False)]
    sgn = 1 if d > 0 else -1
    opts = [(sgn, abs(d), False)]
    if allow_winding:
        opts.append((-sgn, period - abs(d), True))
    return opts


def pair_paths(lat: TorusLattice, a: int, b: int, allow_winding: bool = True) -> list[StringPath]:
    """Straight or one-corner paths from site ``a`` to site ``b``.

    Each straight leg goes the short way round or, with ``allow_winding``,
    the long way.  Minimal paths come first, then by bond list.
    """
    xa, ya = lat.coords(a)
    xb, yb = lat.coords(b)
    dx, dy = lat.min_image(xb - xa, yb - ya)
    found = {}
    for hs, hn, hw in _leg_options(dx, lat.ell, allow_winding):
        for vs, vn, vw in _leg_options(dy, lat.big_l, allow_winding):
            orders = [("hv", [(0, hs, hn), (1, vs, vn)]), ("vh", [(1, vs, vn), (0, hs, hn)])]
            if dx == 0 or dy == 0:
                orders = orders[:1]
            for shape, legs in orders:
                bonds, xe, ye = _walk(lat, xa, ya, legs)
                assert lat.site(xe, ye) == b
                if len(set(bonds)) != len(bonds):
                    continue
                key = tuple(sorted(bonds))
                if key not in found:
                    name = "axial" if dx == 0 or dy == 0 else "corner-" + shape
                    found[key] = StringPath((a, b), key, name, hw or vw)
    return sorted(found.values(), key=lambda p: (p.winds, len(p.bonds), p.bonds))


def string_catalog(lat: TorusLattice, spec: InteractionSpec, allow_winding: bool = True,
                   cap: int = DEFAULT_CATALOG_CAP, pairs=None) -> dict[tuple[int, int], list[StringPath]]:
    """Admissible paths for every interacting pair.

    Raises:
        ValueError: if a pair has more than ``cap`` paths.
    """
    if pairs is None:
        pairs = interacting_pairs(lat, spec)
    out = {}
    for a, b, _ in pairs:
        paths = pair_paths(lat, a, b, allow_winding)
        if len(paths) > cap:
            raise ValueError(f"pair {(a, b)} has {len(paths)} paths, above the cap {cap}")
        out[(a, b)] = paths
    return out


Convention = Callable[[Sequence[StringPath]], tuple[StringPath, StringPath]]


def _first(paths):
    return paths[0], paths[0]


def _second(paths):
    minimal = [p for p in paths if not p.winds]
    p = minimal[1] if len(minimal) > 1 else minimal[0]
    return p, p


def _split(paths):
    minimal = [p for p in paths if not p.winds]
    return minimal[0], minimal[1] if len(minimal) > 1 else minimal[0]


def _winding(paths):
    longs = [p for p in paths if p.winds]
    return paths[0], longs[0] if longs else paths[0]


CONVENTIONS: dict[str, Convention] = {
    "first": _first,
    "second": _second,
    "split": _split,
    "winding": _winding,
}


def resolve_convention(convention: str | Convention) -> Convention:
    if callable(convention):
        return convention
    try:
        return CONVENTIONS[convention]
    except KeyError:
        raise ValueError(f"unknown path convention {convention!r}; expected one of {sorted(CONVENTIONS)}") from None


@dataclass(frozen=True)
class Channel:
    pair: tuple[int, int]
    tau: float
    path: StringPath


def channels(lat: TorusLattice, spec: InteractionSpec, beta: float, convention="split",
             allow_winding: bool = True, pairs=None) -> list[Channel]:
    if pairs is None:
        pairs = interacting_pairs(lat, spec)
    conv = resolve_convention(convention)
    needs_long = conv is _winding
    catalog = string_catalog(lat, spec, allow_winding or needs_long, pairs=pairs)
    out = []
    for a, b, v in pairs:
        k = beta * spec.lam * v
        if k == 0:
            continue
        tau = math.tanh(k / 2)
        for path in conv(catalog[(a, b)]):
            out.append(Channel((a, b), tau, path))
    return out


def deformed_couplings(blackened, t: float, n_bonds: int) -> np.ndarray:
    """Bond weights with ``t`` replaced by ``1/t`` on the blackened bonds."""
    if not t > 0:
        raise ValueError("deformation needs t > 0")
    out = np.full(n_bonds, float(t))
    bonds = list(iter_bits(blackened)) if isinstance(blackened, (int, np.integer)) else list(blackened)
    out[bonds] = 1.0 / t
    return out


def _log_pair_prefactor(pairs, beta: float, spec: InteractionSpec) -> float:
    return math.fsum(2 * math.log(math.cosh(beta * spec.lam * v / 2)) for _, _, v in pairs)


def blackened_weights(chans: Sequence[Channel]) -> dict[int, float]:
    """Total string weight for each blackened bond set, summed over channel choices."""
    table = {0: 1.0}
    for ch in chans:
        if ch.tau < 0:
            raise AssertionError("negative channel weight")
        m = ch.path.mask
        nxt = dict(table)
        for mask, w in table.items():
            key = mask ^ m
            nxt[key] = nxt.get(key, 0.0) + w * ch.tau
        table = nxt
    return table


def _sectors_by_strings(lat, spec, beta, chans, pairs) -> SectorQuartet:
    if len(chans) > MAX_STRING_CHANNELS:
        raise ValueError(
            f"{len(chans)} channels exceed the enumeration cap {MAX_STRING_CHANNELS}; "
            "use method='twisted' or restrict the pairs"
        )
    t = math.tanh(beta * spec.j_coupling)
    table = blackened_weights(chans)
    masks = list(table)
    weights = np.array([table[m] for m in masks])
    sizes = np.array([m.bit_count() for m in masks])
    t_maps = np.stack([deformed_couplings(m, t, lat.n_bonds) for m in masks])
    base = (lat.n_sites * math.log(2.0) + lat.n_bonds * math.log(math.cosh(beta * spec.j_coupling))
            + _log_pair_prefactor(pairs, beta, spec))
    out = []
    for alpha in SECTOR_ORDER:
        signs, logs = grassmann_pfaffians(lat, t_maps, alpha)
        out.append(signed_logsumexp(signs, np.log(weights) + sizes * math.log(t) + logs).scaled(base))
    return SectorQuartet(*out)


def _twist_coefficients() -> dict[tuple[int, int], dict[str, float]]:
    # Z_alpha = sum_{a,b} coef[a,b][alpha] * T(a,b); T(a,b) flips the seam couplings
    coef = {}
    for a in (0, 1):
        for b in (0, 1):
            coef[(a, b)] = {
                sector_name(al): 0.25 * sum(sector_sign(al, h, v) * (-1) ** (a * h + b * v) for h, v in CLASSES)
                for al in SECTOR_ORDER
            }
    return coef


def _sectors_by_twists(lat, spec, beta, chans, pairs) -> SectorQuartet:
    flags = lat.seam_flags
    pair_index = {(a, b): i for i, (a, b, _) in enumerate(pairs)}
    twisted = {}
    for a in (0, 1):
        for b in (0, 1):
            eps = np.ones(lat.n_bonds)
            if a:
                eps[flags[:, 0]] *= -1
            if b:
                eps[flags[:, 1]] *= -1
            # per pair, product over its channels of (1 + tau eps_path s s), for s s = +1 and -1
            plus = np.ones(len(pairs))
            minus = np.ones(len(pairs))
            for ch in chans:
                e = float(np.prod(eps[list(ch.path.bonds)]))
                i = pair_index[ch.pair]
                plus[i] *= 1 + ch.tau * e
                minus[i] *= 1 - ch.tau * e
            lp, lm = np.log(plus), np.log(minus)
            twisted[(a, b)] = log_spin_sum(
                lat, beta * spec.j_coupling * eps, [(p, q) for p, q, _ in pairs],
                pair_k=(lp - lm) / 2, pair_offsets=(lp + lm) / 2,
            )
    base = _log_pair_prefactor(pairs, beta, spec)
    coef = _twist_coefficients()
    out = []
    for alpha in SECTOR_ORDER:
        name = sector_name(alpha)
        terms = [twisted[key] * coef[key][name] for key in twisted if coef[key][name] != 0]
        out.append(log_sum(terms).scaled(base))
    return SectorQuartet(*out)


def interacting_sectors(lat: TorusLattice, spec: InteractionSpec, beta: float, convention="split",
                        method: str = "auto", allow_winding: bool = True, pairs=None,
                        check: bool = True, rtol: float = 1e-8) -> SectorQuartet:
    """All four interacting sector partition functions.

    ``method="strings"`` sums over channel choices explicitly, evaluating a
    Pfaffian for each distinct blackened set (at most 16 channels).
    ``method="twisted"`` regroups the same sum by winding class: flipping the
    seam couplings turns each class combination into a spin sum in which a
    channel carries the sign of the seam bonds its path crosses.  ``auto``
    picks strings when the channel count allows it.

    With ``check`` the combination ``(Z_mm + Z_mp + Z_pm - Z_pp) / 2`` is
    compared with exhaustive enumeration.

    Raises:
        ConsistencyError: if that comparison misses ``rtol``.
    """
    if pairs is None:
        pairs = interacting_pairs(lat, spec) if spec.interacting else []
    chans = channels(lat, spec, beta, convention, allow_winding, pairs)
    if method == "auto":
        method = "strings" if len(chans) <= MAX_STRING_CHANNELS else "twisted"
    if method == "strings":
        quartet = _sectors_by_strings(lat, spec, beta, chans, pairs)
    elif method == "twisted":
        quartet = _sectors_by_twists(lat, spec, beta, chans, pairs)
    else:
        raise ValueError(f"unknown method {method!r}")
    if check:
        assembled = combine_sectors(quartet)
        brute = brute_force_Z(lat, spec, beta, pairs=pairs)
        err = abs(math.expm1(assembled.log_abs - brute.log_abs)) if assembled.sign == brute.sign else math.inf
        if err > rtol:
            raise ConsistencyError(f"assembled sectors differ from enumeration by {err:.3e}")
    return quartet


def interacting_sector(lat: TorusLattice, spec: InteractionSpec, beta: float, alpha, **kw) -> LogNumber:
    return interacting_sectors(lat, spec, beta, **kw)[alpha]


@dataclass(frozen=True)
class SectorBoundsReport:
    beta: float
    z: LogNumber
    sectors: SectorQuartet
    ratio: float
    sumpos_margin: float

    @property
    def lower_ok(self) -> bool:
        return self.ratio >= 1 / 3 - 1e-12

    @property
    def upper_ok(self) -> bool:
        return self.ratio <= 1 + 1e-12

    @property
    def sumpos_ok(self) -> bool:
        return self.sumpos_margin >= 0

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok and self.sumpos_ok

    @property
    def verdicts(self) -> str:
        return ";".join(
            f"{k}={'pass' if ok else 'fail'}"
            for k, ok in (("lower", self.lower_ok), ("upper", self.upper_ok), ("sumpos", self.sumpos_ok))
        )


def lemma1_check(lat: TorusLattice, spec: InteractionSpec, beta: float, convention="split",
                 method: str = "auto", **kw) -> SectorBoundsReport:
    """Evaluate ``Z / (Z_mm + Z_mp + Z_pm)`` and ``(Z_mp + Z_pm) / Z`` for one temperature."""
    q = interacting_sectors(lat, spec, beta, convention=convention, method=method, **kw)
    z = combine_sectors(q)
    three = log_sum([q.mm, q.mp, q.pm])
    return SectorBoundsReport(beta, z, q, z.ratio_to(three), ((q.mp + q.pm) / z).to_float())


__all__ = [
    "CONVENTIONS", "Channel", "SectorBoundsReport", "StringPath", "blackened_weights", "channels",
    "deformed_couplings", "interacting_sector", "interacting_sectors", "lemma1_check",
    "pair_paths", "string_catalog",
]
