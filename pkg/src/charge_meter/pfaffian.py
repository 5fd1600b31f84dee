"""Pfaffians of real antisymmetric matrices by skew Gaussian elimination."""
from __future__ import annotations

import numpy as np

from .errors import SingularPivotError
from .lognum import LogNumber

TINY_PIVOT = 1e-300


def pfaffian_batch(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pfaffians of a stack of antisymmetric matrices.

    Eliminates two rows and columns per step, pivoting the largest entry of
    the leading row into the ``(k, k+1)`` slot.  Returns ``(signs, log_abs)``
    arrays; a stack member whose pivot row vanishes gets sign 0.
    """
    a = np.array(mats, dtype=float, copy=True)
    if a.ndim == 2:
        a = a[None]
    b, n, m = a.shape
    if n != m or n % 2:
        raise ValueError("need square matrices of even order")
    signs = np.ones(b)
    logs = np.zeros(b)
    rows = np.arange(b)
    for k in range(0, n - 1, 2):
        lead = np.abs(a[:, k, k + 1:])
        p = np.argmax(lead, axis=1) + k + 1
        swap = p != k + 1
        if np.any(swap):
            idx = rows[swap]
            q = p[swap]
            tmp = a[idx, k + 1, :].copy()
            a[idx, k + 1, :] = a[idx, q, :]
            a[idx, q, :] = tmp
            tmp = a[idx, :, k + 1].copy()
            a[idx, :, k + 1] = a[idx, :, q]
            a[idx, :, q] = tmp
            signs[swap] *= -1.0
        piv = a[:, k, k + 1].copy()
        dead = np.abs(piv) < TINY_PIVOT
        if np.any(dead):
            signs[dead] = 0.0
            piv[dead] = 1.0
        signs *= np.sign(piv)
        logs += np.log(np.abs(piv))
        if k + 2 < n:
            u = a[:, k, k + 2:] / piv[:, None]
            v = a[:, k + 1, k + 2:]
            a[:, k + 2:, k + 2:] += v[:, :, None] * u[:, None, :] - u[:, :, None] * v[:, None, :]
    logs[signs == 0] = -np.inf
    return signs, logs


def pfaffian(mat: np.ndarray, strict: bool = True) -> LogNumber:
    """Pfaffian of one antisymmetric matrix as a LogNumber.

    Raises:
        SingularPivotError: with ``strict`` set, when a pivot falls below
            1e-300 in magnitude.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or not np.allclose(mat, -mat.T, rtol=0, atol=1e-14 * max(1.0, np.max(np.abs(mat), initial=0))):
        raise ValueError("matrix is not antisymmetric")
    if mat.shape[0] == 0:
        return LogNumber(1, 0.0)
    signs, logs = pfaffian_batch(mat)
    if signs[0] == 0:
        if strict:
            raise SingularPivotError("pivot below 1e-300 during skew elimination")
        return LogNumber.zero()
    return LogNumber(int(signs[0]), float(logs[0]))
