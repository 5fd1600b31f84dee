"""Central charge from finite-width free energies."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, check_X_y, column_or_1d

from .exact import gamma

LOG2_HALF = 0.5 * math.log(2.0)


def onsager_f_inf() -> float:
    """Bulk free energy per site at criticality, ``log 2 / 2 + (1/2pi) int_0^pi gamma``."""
    val, _ = integrate.quad(gamma, 0.0, math.pi, epsabs=1e-14, epsrel=1e-13, limit=200)
    return LOG2_HALF + val / (2 * math.pi)


def catalan_constant(terms: int = 40) -> float:
    """Catalan's constant from ``pi/8 log(2 + sqrt 3) + 3/8 sum 1 / ((2n+1)^2 C(2n, n))``."""
    acc = []
    binom = 1
    for n in range(terms):
        if n:
            binom = binom * (2 * n) * (2 * n - 1) // (n * n)
        acc.append(1.0 / ((2 * n + 1) ** 2 * binom))
    return math.pi / 8 * math.log(2 + math.sqrt(3)) + 3 / 8 * math.fsum(acc)


def delta_ell(ell):
    """``ell**2 (f(ell) - f_inf)`` for the critical strip, from the exact one-direction product."""
    ells = np.atleast_1d(np.asarray(ell))
    if np.any(ells < 2) or np.any(ells % 2):
        raise ValueError("strip widths must be even and >= 2")
    bulk = onsager_f_inf() - LOG2_HALF
    out = np.empty(ells.shape, dtype=float)
    for i, n in enumerate(ells.ravel()):
        n = int(n)
        s = math.fsum(gamma((2 * np.arange(n) + 1) * np.pi / n))
        out.flat[i] = 0.5 * n * s - n * n * bulk
    return out if np.ndim(ell) else float(out[0])


def c_from_delta(ell):
    return 6.0 / math.pi * delta_ell(ell)


def c_pairwise(p1: tuple[int, float], p2: tuple[int, float]) -> float:
    """Charge implied by ``f(ell) = f_inf + (pi c / 6) / ell**2`` through two widths."""
    (l1, f1), (l2, f2) = p1, p2
    if l1 == l2:
        raise ValueError("pairwise estimate needs distinct widths")
    return 6.0 / math.pi * (f1 - f2) / (l1 ** -2.0 - l2 ** -2.0)


@dataclass(frozen=True)
class ChargeEstimate:
    c_hat: float
    spread: float
    order: int
    nodes: tuple[float, ...]
    estimates: tuple[float, ...]


def _neville(x: Sequence[float], y: Sequence[float]) -> float:
    """Value at 0 of the interpolating polynomial through ``(x, y)``."""
    p = list(map(float, y))
    x = list(map(float, x))
    n = len(p)
    for m in range(1, n):
        for i in range(n - m):
            p[i] = (x[i + m] * p[i] - x[i] * p[i + 1]) / (x[i + m] - x[i])
    return p[0]


def _richardson(x, y, order: int) -> ChargeEstimate:
    windows = [_neville(x[i:i + order + 1], y[i:i + order + 1]) for i in range(len(x) - order)]
    best = windows[-1]
    if len(windows) > 1:
        spread = max(abs(w - best) for w in windows)
    elif order > 0:
        spread = abs(best - _neville(x[-order:], y[-order:]))
    else:
        spread = math.inf
    return ChargeEstimate(best, spread, order, tuple(x), tuple(y))


def extrapolate(ells: Sequence[int], values: Sequence[float], order: int = 1, kind: str = "f") -> ChargeEstimate:
    """Richardson extrapolation of a central-charge series in ``1/ell**2``.

    ``kind="f"`` takes free energies per site: consecutive pairs give
    pairwise estimates, placed at ``1/l1**2 + 1/l2**2`` where their leading
    error is linear.  ``kind="c"`` takes charge estimates directly, placed at
    ``1/ell**2``.  ``spread`` is the largest deviation among the
    highest-order extrapolants, or the last order step when only one exists.
    """
    ells = [int(n) for n in ells]
    if order < 0:
        raise ValueError("order must be non-negative")
    if sorted(set(ells)) != ells:
        raise ValueError("widths must be strictly increasing")
    if kind == "f":
        if len(ells) < order + 2:
            raise ValueError(f"order {order} needs at least {order + 2} widths, got {len(ells)}")
        x = [a ** -2.0 + b ** -2.0 for a, b in zip(ells, ells[1:])]
        y = [c_pairwise((a, fa), (b, fb)) for a, b, fa, fb in zip(ells, ells[1:], values, values[1:])]
    elif kind == "c":
        if len(ells) < order + 1:
            raise ValueError(f"order {order} needs at least {order + 1} widths, got {len(ells)}")
        x = [n ** -2.0 for n in ells]
        y = list(map(float, values))
    else:
        raise ValueError("kind must be 'f' or 'c'")
    return _richardson(x, y, order)


def ratio_limit_check(ells: Sequence[int]) -> list[tuple[int, int, float, float]]:
    """``(ell, L, R, (ell/L) log R)`` at ``L = ell**2``."""
    from .exact import ratio_term

    out = []
    for n in ells:
        big_l = n * n
        r = ratio_term(n, big_l)
        out.append((n, big_l, r, n / big_l * math.log(r)))
    return out


def combine_crossings(crossings: Sequence[tuple[tuple[int, int], float]], power: float = 3.0) -> float:
    """Extrapolate crossing estimates assuming a shift ``~ 1/ell**power`` at the mean width."""
    if len(crossings) == 1:
        return float(crossings[0][1])
    x = [(0.5 * (a + b)) ** -power for (a, b), _ in crossings]
    y = [b for _, b in crossings]
    return _neville(x[-2:], y[-2:])


class CentralChargeEstimator(RegressorMixin, BaseEstimator):
    """Fit ``f(ell) = f_inf + (pi c / 6) / ell**2`` to strip free energies.

    ``X`` holds strip widths (one column), ``y`` the free energy per site.
    Fitted attributes: ``c_``, ``spread_``, ``f_inf_``.

    Args:
        order: Richardson order applied to the pairwise estimates.
    """

    def __init__(self, order: int = 1):
        self.order = order

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_min_samples=2, y_numeric=True)
        if X.shape[1] != 1:
            raise ValueError("X must have a single column of strip widths")
        ells = column_or_1d(X)
        if np.any(ells != np.round(ells)) or np.any(ells < 2):
            raise ValueError("strip widths must be integers >= 2")
        order = np.argsort(ells)
        ells, y = ells[order].astype(int), y[order]
        est = extrapolate(ells.tolist(), y.tolist(), self.order)
        self.c_ = est.c_hat
        self.spread_ = est.spread
        # the widest strip carries the smallest higher-order residue
        self.f_inf_ = float(y[-1] - math.pi * self.c_ / 6 / float(ells[-1]) ** 2)
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "c_")
        X = np.asarray(X, dtype=float)
        ells = column_or_1d(X.reshape(len(X), -1) if X.ndim > 1 else X)
        return self.f_inf_ + math.pi * self.c_ / 6 / ells ** 2


__all__ = [
    "CentralChargeEstimator", "ChargeEstimate", "c_from_delta", "catalan_constant", "c_pairwise", "combine_crossings",
    "delta_ell", "extrapolate", "onsager_f_inf", "ratio_limit_check",
]
