"""Momentum-space covariances, scale cutoffs and propagators of the critical fermions."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .exact import T_CRITICAL


def critical_mode_rotation() -> np.ndarray:
    """Unitary 4x4 matrix taking the site variables to the critical-mode basis."""
    p = np.exp(1j * np.pi / 4)
    m = np.conj(p)
    return 0.5 * np.array(
        [
            [p, m, 1, -1j],
            [m, p, 1, 1j],
            [-p, -m, 1, -1j],
            [-m, -p, 1, 1j],
        ],
        dtype=complex,
    )


def _bump(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def chi(t):
    """Smooth monotone step: 1 for ``t <= 1``, 0 for ``t >= 2``."""
    t = np.asarray(t, dtype=float)
    a = _bump(2.0 - t)
    b = _bump(t - 1.0)
    out = a / (a + b)
    return out if out.ndim else float(out)


def fold(k):
    """Map momenta to ``(-pi, pi]``."""
    k = np.asarray(k, dtype=float)
    return np.pi - np.mod(np.pi - k, 2 * np.pi)


def momentum_norm(k1, k2):
    return np.hypot(fold(k1), fold(k2))


def cutoff(h: int, k1, k2):
    """Scale-``h`` cutoff ``f_h(k)``; the pieces with ``h <= 0`` sum to 1 away from ``k = 0``.

    ``f_0 = 1 - chi(2|k|)`` and ``f_h = chi(2^-h |k|) - chi(2^(1-h) |k|)`` for
    ``h < 0``, so ``f_h`` is supported in ``2^(h-1) <= |k| <= 2^(h+1)``.
    """
    if h > 0:
        raise ValueError("scale index must be <= 0")
    norm = momentum_norm(k1, k2)
    if h == 0:
        return 1.0 - chi(2.0 * norm)
    return chi(2.0 ** -h * norm) - chi(2.0 ** (1 - h) * norm)


def infrared_scale(ell: int) -> int:
    return math.floor(math.log2(math.pi / ell))


def sigma_psi(k1, k2):
    return np.cos(k1) + np.cos(k2) - 2.0


def sigma_chi(k1, k2, t_c: float = T_CRITICAL):
    return np.cos(k1) + np.cos(k2) + 2.0 * (math.sqrt(2.0) + 1.0) / t_c


def _two_by_two(a, b, c, d):
    a, b, c, d = np.broadcast_arrays(a, b, c, d)
    out = np.empty(a.shape + (2, 2), dtype=complex)
    out[..., 0, 0], out[..., 0, 1], out[..., 1, 0], out[..., 1, 1] = a, b, c, d
    return out


def _massive_block(k1, k2, sigma):
    s1, s2 = np.sin(k1), np.sin(k2)
    return _two_by_two(-1j * s1 + s2, 1j * sigma, -1j * sigma, -1j * s1 - s2)


def c_chi(k1, k2, t_c: float = T_CRITICAL):
    return _massive_block(k1, k2, sigma_chi(k1, k2, t_c))


def q_matrix(k1, k2):
    s1, s2, c1, c2 = np.sin(k1), np.sin(k2), np.cos(k1), np.cos(k2)
    return _two_by_two(-1j * s1 - s2, 1j * (c1 - c2), -1j * (c1 - c2), -1j * s1 + s2)


def inv2(m: np.ndarray) -> np.ndarray:
    """Inverse of a stack of 2x2 matrices."""
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 1, 1] = m[..., 0, 0]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    return out / det[..., None, None]


def c_psi(k1, k2, t_c: float = T_CRITICAL):
    """Massless covariance after integrating out the massive pair."""
    q = q_matrix(k1, k2)
    return _massive_block(k1, k2, sigma_psi(k1, k2)) - q @ inv2(c_chi(k1, k2, t_c)) @ q


def _grid(ell: int, big_l: int):
    k1 = 2 * np.pi * (np.arange(ell) + 0.5) / ell
    k2 = 2 * np.pi * (np.arange(big_l) + 0.5) / big_l
    return np.meshgrid(k1, k2, indexing="ij")


@lru_cache(maxsize=8)
def _inverse_on_grid(ell: int, big_l: int, field: str) -> np.ndarray:
    k1, k2 = _grid(ell, big_l)
    out = inv2(c_psi(k1, k2) if field == "psi" else c_chi(k1, k2))
    out.flags.writeable = False
    return out


def _check_torus(ell, big_l):
    for n in (ell, big_l):
        if n < 2 or n % 2:
            raise ValueError("torus periods must be even and >= 2")


def single_scale_propagator(h: int | None, ell: int, big_l: int, z: float = 1.0, field: str = "psi") -> np.ndarray:
    """Propagator on the whole torus as an array ``g[x1, x2, :, :]``.

    ``field="psi"`` uses ``f_h C_psi^-1`` (``h=None`` for all scales at once);
    ``field="chi"`` uses ``C_chi^-1`` and ignores ``h``.  Momenta run over the
    antiperiodic grid, which never contains ``k = 0``.
    """
    _check_torus(ell, big_l)
    if not z > 0:
        raise ValueError("z must be positive")
    if field not in ("psi", "chi"):
        raise ValueError("field must be 'psi' or 'chi'")
    mom = _inverse_on_grid(ell, big_l, field)
    if field == "psi" and h is not None:
        mom = mom * cutoff(h, *_grid(ell, big_l))[..., None, None]
    g = np.fft.fft2(mom, axes=(0, 1))
    x1 = np.arange(ell)[:, None]
    x2 = np.arange(big_l)[None, :]
    phase = np.exp(-1j * np.pi * (x1 / ell + x2 / big_l))
    return g * phase[..., None, None] * (2 * np.pi / (z * ell * big_l))


def propagator_at(h: int | None, ell: int, big_l: int, x, z: float = 1.0) -> np.ndarray:
    """Propagator at one integer point ``x`` by the direct momentum sum (any ``x``, not reduced)."""
    _check_torus(ell, big_l)
    k1, k2 = _grid(ell, big_l)
    mom = _inverse_on_grid(ell, big_l, "psi")
    if h is not None:
        mom = mom * cutoff(h, k1, k2)[..., None, None]
    w = np.exp(-1j * (k1 * x[0] + k2 * x[1]))
    return np.einsum("ab,abij->ij", w, mom) * (2 * np.pi / (z * ell * big_l))


def sine_distance(ell: int, big_l: int) -> np.ndarray:
    """``|delta(x)|`` with ``delta = (ell/pi sin(pi x1/ell), L/pi sin(pi x2/L))``."""
    x1 = np.arange(ell)[:, None]
    x2 = np.arange(big_l)[None, :]
    d1 = ell / np.pi * np.sin(np.pi * x1 / ell)
    d2 = big_l / np.pi * np.sin(np.pi * x2 / big_l)
    return np.hypot(d1, d2)


def decay_profile(ell: int, big_l: int, h: int, power: int = 4) -> float:
    """``max_x |g_h(x)| (1 + 2^h |delta(x)|)^power``."""
    g = np.abs(single_scale_propagator(h, ell, big_l)).max(axis=(2, 3))
    return float(np.max(g * (1 + 2.0 ** h * sine_distance(ell, big_l)) ** power))


def scale_sup_norms(ell: int, big_l: int, scales) -> list[float]:
    return [float(np.abs(single_scale_propagator(h, ell, big_l)).max()) for h in scales]


def poisson_image_defect(h: int, ell: int, big_l: int, refine: int = 4) -> float:
    """Largest gap over ``|x| <= ell/2`` between the torus propagator and a ``refine``-times larger torus."""
    g = single_scale_propagator(h, ell, big_l)
    g_big = single_scale_propagator(h, refine * ell, refine * big_l)
    r = ell // 2
    worst = 0.0
    for x1 in range(-r, r + 1):
        for x2 in range(-r, r + 1):
            if x1 * x1 + x2 * x2 > r * r or abs(x2) >= big_l // 2 + 1:
                continue
            diff = g[x1 % ell, x2 % big_l] - g_big[x1 % (refine * ell), x2 % (refine * big_l)]
            worst = max(worst, float(np.abs(diff).max()))
    return worst


def localization_kernels(ell: int, big_l: int, x1, x2):
    """Finite-volume kernels ``G``, ``d1``, ``d2`` at points ``(x1, x2)``."""
    _check_torus(ell, big_l)
    a = np.pi * np.asarray(x1, dtype=float) / ell
    b = np.pi * np.asarray(x2, dtype=float) / big_l
    g = 9 / 8 * np.cos(a) * np.cos(b) - 1 / 8 * np.cos(3 * a) * np.cos(3 * b)
    d1 = (9 / 8 * np.sin(a) / np.sin(np.pi / ell) * np.cos(b)
          - 1 / 8 * np.sin(3 * a) / np.sin(3 * np.pi / ell) * np.cos(3 * b))
    d2 = (9 / 8 * np.sin(b) / np.sin(np.pi / big_l) * np.cos(a)
          - 1 / 8 * np.sin(3 * b) / np.sin(3 * np.pi / big_l) * np.cos(3 * a))
    return g, d1, d2


def loglog_slope(x, y) -> tuple[float, float]:
    """Least-squares slope of ``log y`` against ``log x`` and its R^2."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return linear_fit(lx, ly)


def linear_fit(x, y) -> tuple[float, float]:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def localization_slopes(ell: int = 1024, big_l: int | None = None) -> dict[str, float]:
    """Log-log slopes of the kernel errors against ``|x|/ell`` on the axes, ``2 <= |x| <= ell/8``.

    ``|x| = 1`` is left out because ``d_i`` is exact there.
    """
    big_l = big_l if big_l is not None else 64 * ell
    xs = np.unique(np.round(np.geomspace(2, ell // 8, 12)).astype(int))
    zero = np.zeros_like(xs)
    g, d1, _ = localization_kernels(ell, big_l, xs, zero)
    g2, _, d2 = localization_kernels(big_l, ell, zero, xs)
    out = {}
    out["G"] = loglog_slope(xs / ell, np.abs(g - 1))[0]
    out["d1"] = loglog_slope(xs / ell, np.abs(d1 / xs - 1))[0]
    out["d2"] = loglog_slope(xs / ell, np.abs(d2 / xs - 1))[0]
    out["G_vertical"] = loglog_slope(xs / ell, np.abs(g2 - 1))[0]
    return out


def chi_decay_fit(ell: int = 64, r_max: int = 6) -> tuple[float, float]:
    """Slope and R^2 of ``log |g_chi(r, 0)|`` against ``r`` for ``1 <= r <= r_max``."""
    g = single_scale_propagator(None, ell, ell, field="chi")
    r = np.arange(1, r_max + 1)
    mags = np.abs(g[r, 0]).max(axis=(1, 2))
    return linear_fit(r, np.log(mags))


__all__ = [
    "c_chi", "c_psi", "chi", "chi_decay_fit", "critical_mode_rotation", "cutoff", "decay_profile",
    "infrared_scale", "linear_fit", "localization_kernels", "localization_slopes", "loglog_slope",
    "poisson_image_defect", "propagator_at", "q_matrix", "scale_sup_norms", "sigma_chi", "sigma_psi",
    "sine_distance", "single_scale_propagator",
]
