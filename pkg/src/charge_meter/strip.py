"""Row-to-row transfer operator on a periodic strip of width ``ell``."""
from __future__ import annotations

import math
import string
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError
from .exact import BETA_CRITICAL
from .lattice import InteractionSpec, shell_vectors

MAX_WIDTH = 16


def _row_spins(ell: int) -> np.ndarray:
    """``(2**ell, ell)`` array of spins; bit ``i`` of the state is column ``i``."""
    idx = np.arange(1 << ell)
    return (((idx[:, None] >> np.arange(ell)) & 1) * 2 - 1).astype(np.int8)


def split_couplings(ell: int, spec: InteractionSpec):
    """Split all couplings into in-row terms and row-to-row terms.

    Returns ``(intra, inter)`` lists of ``(i, j, coupling)``: ``intra`` couples
    columns ``i`` and ``j`` of the same row, ``inter`` couples column ``i`` of
    one row with column ``j`` of the next.

    Raises:
        ValueError: for a shell reaching two or more rows ahead.
    """
    intra = [(i, (i + 1) % ell, spec.j_coupling) for i in range(ell)]
    inter = [(i, i, spec.j_coupling) for i in range(ell)]
    if spec.lam:
        for r2, v in spec.v_shells:
            if v == 0:
                continue
            for dx, dy in shell_vectors(r2):
                if abs(dy) > 1:
                    raise ValueError(
                        f"shell r2={r2} reaches {abs(dy)} rows ahead; the transfer operator couples adjacent rows only"
                    )
                if dy == 1:
                    inter.extend((i, (i + dx) % ell, spec.lam * v) for i in range(ell))
                elif dy == 0 and dx > 0:
                    intra.extend((i, (i + dx) % ell, spec.lam * v) for i in range(ell))
    return intra, inter


class TransferOperator:
    """Symmetrically split transfer operator ``D^(1/2) A D^(1/2)``.

    ``D`` holds the in-row Boltzmann weights and ``A`` the row-to-row ones.
    :meth:`apply` never forms the ``2**ell``-square matrix: it introduces the
    new row one spin at a time and sums each old spin out as soon as all
    its couplings are used, costing ``O(ell 2**ell)``.  Weights are shifted
    so that every factor is at most 1; the shift is reported as
    :attr:`log_shift`.
    """

    def __init__(self, ell: int, beta: float, spec: InteractionSpec | None = None):
        if isinstance(ell, bool) or not isinstance(ell, (int, np.integer)) or ell < 2 or ell % 2:
            raise ValueError(f"strip width must be an even integer >= 2, got {ell!r}")
        if ell > MAX_WIDTH:
            raise ValueError(f"strip width {ell} above the supported maximum {MAX_WIDTH}")
        if not beta > 0:
            raise ValueError("beta must be positive")
        self.ell = int(ell)
        self.beta = float(beta)
        self.spec = spec if spec is not None else InteractionSpec()
        intra, inter = split_couplings(self.ell, self.spec)
        spins = _row_spins(self.ell).astype(float)
        e_row = np.zeros(1 << self.ell)
        for i, j, c in intra:
            e_row += c * spins[:, i] * spins[:, j]
        top = float(np.max(e_row))
        self._half_diag = np.exp(0.5 * self.beta * (e_row - top))
        # merge repeated (old, new) couplings
        merged: dict[tuple[int, int], float] = {}
        for i, j, c in inter:
            merged[(i, j)] = merged.get((i, j), 0.0) + c
        self._inter = merged
        self.log_shift = self.beta * (top + sum(abs(c) for c in merged.values()))
        self._plan = self._build_plan()

    @property
    def dim(self) -> int:
        return 1 << self.ell

    def _build_plan(self):
        ell = self.ell
        by_new: dict[int, list[tuple[int, float]]] = {j: [] for j in range(ell)}
        needs: dict[int, set[int]] = {i: set() for i in range(ell)}
        for (i, j), c in self._inter.items():
            by_new[j].append((i, c))
            needs[i].add(j)
        letters = iter(string.ascii_letters)
        label = {("o", i): next(letters) for i in range(ell)}
        for j in range(ell):
            label[("n", j)] = next(letters)
        # reshape of a state vector puts column ell-1 on axis 0
        axes = [("o", i) for i in reversed(range(ell))]
        steps = []
        introduced: set[int] = set()
        for j in range(ell):
            olds = sorted({i for i, _ in by_new[j]})
            # factor exp(beta s'_j sum_i c_i s_i - beta sum_i |c_i|)
            coup = np.zeros(len(olds))
            for i, c in by_new[j]:
                coup[olds.index(i)] += c
            grids = np.meshgrid(*([np.array([-1.0, 1.0])] * (len(olds) + 1)), indexing="ij")
            field_ = sum(coup[k] * grids[k] for k in range(len(olds)))
            factor = np.exp(self.beta * (field_ * grids[-1] - np.sum(np.abs(coup))))
            introduced.add(j)
            done = [i for i in olds if needs[i] <= introduced]
            done += [i for i in range(ell) if ("o", i) in axes and i not in olds and needs[i] <= introduced]
            in_sub = "".join(label[a] for a in axes)
            f_sub = "".join(label[("o", i)] for i in olds) + label[("n", j)]
            new_axes = [a for a in axes if not (a[0] == "o" and a[1] in done)] + [("n", j)]
            out_sub = "".join(label[a] for a in new_axes)
            steps.append((f"{in_sub},{f_sub}->{out_sub}", factor))
            axes = new_axes
        final = [("n", j) for j in reversed(range(ell))]
        perm = [axes.index(a) for a in final]
        return steps, perm

    def apply_shifted(self, vec: np.ndarray) -> np.ndarray:
        """``exp(-log_shift) T vec``."""
        steps, perm = self._plan
        psi = (self._half_diag * vec).reshape((2,) * self.ell)
        for subs, factor in steps:
            psi = np.einsum(subs, psi, factor, optimize=True)
        psi = np.transpose(psi, perm).reshape(-1)
        return self._half_diag * psi

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """``T vec`` with the true normalisation."""
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.dim,):
            raise ValueError(f"state vector must have length {self.dim}")
        return self.apply_shifted(vec) * math.exp(self.log_shift)

    def dense(self) -> np.ndarray:
        """Full matrix, for checks at small width."""
        if self.ell > 10:
            raise ValueError("dense matrix only for ell <= 10")
        return np.column_stack([self.apply(e) for e in np.eye(self.dim)])


@dataclass
class SpectralData:
    log_lambda1: float
    log_lambda2: float
    iterations: int
    vectors: tuple[np.ndarray, np.ndarray] = field(repr=False)

    @property
    def xi(self) -> float:
        return 1.0 / (self.log_lambda1 - self.log_lambda2)


def _power(op: TransferOperator, start: np.ndarray, parity: int, tol: float, max_iter: int,
           deflate: np.ndarray | None = None) -> tuple[float, np.ndarray, int]:
    v = start + parity * start[::-1]
    if deflate is not None:
        v -= deflate * (deflate @ v)
    v /= np.linalg.norm(v)
    prev = None
    for it in range(1, max_iter + 1):
        w = op.apply_shifted(v)
        w = 0.5 * (w + parity * w[::-1])
        if deflate is not None:
            w -= deflate * (deflate @ w)
        rq = float(v @ w)
        norm = float(np.linalg.norm(w))
        if rq <= 0 or norm == 0:
            raise ConvergenceError("power iteration lost positivity of the Rayleigh quotient")
        v = w / norm
        est = math.log(rq)
        if prev is not None and abs(est - prev) < tol:
            return est + op.log_shift, v, it
        prev = est
    raise ConvergenceError(f"power iteration did not converge to {tol:g} in {max_iter} steps")


def dominant_pair(op: TransferOperator, tol: float = 1e-13, max_iter: int = 20000,
                  start: tuple[np.ndarray, np.ndarray] | None = None) -> SpectralData:
    """Two largest eigenvalues by power iteration.

    The leading eigenvector is spin-flip even and the next one odd, so each
    iteration runs inside its symmetry sector; the second is also deflated
    against the first.  ``start`` warm-starts both iterations.

    Raises:
        ConvergenceError: if either iteration misses ``tol`` within ``max_iter``.
    """
    if start is None:
        rng = np.random.default_rng(12345)
        s1 = np.ones(op.dim) + 0.01 * rng.random(op.dim)
        s2 = _row_spins(op.ell)[:, 0].astype(float) + 0.01 * rng.random(op.dim)
    else:
        s1, s2 = start
    l1, v1, n1 = _power(op, s1, +1, tol, max_iter)
    if np.min(v1) * np.max(v1) < 0 and np.min(np.abs(v1)) > 0:
        raise ConvergenceError("leading eigenvector is not of one sign")
    l2, v2, n2 = _power(op, s2, -1, tol, max_iter, deflate=v1)
    return SpectralData(l1, l2, n1 + n2, (v1, v2))


def strip_free_energy(ell: int, beta: float, spec: InteractionSpec | None = None, tol: float = 1e-13) -> float:
    """``log(lambda1) / ell``: free energy per site of the infinite strip, sign as ``log Z``."""
    op = TransferOperator(ell, beta, spec)
    l1, _, _ = _power(op, np.ones(op.dim), +1, tol, 20000)
    return l1 / ell


class _WidthCache:
    def __init__(self, spec, tol):
        self.spec = spec
        self.tol = tol
        self.vectors = {}

    def xi_over_ell(self, ell: int, beta: float) -> float:
        op = TransferOperator(ell, beta, self.spec)
        data = dominant_pair(op, self.tol, start=self.vectors.get(ell))
        self.vectors[ell] = data.vectors
        return data.xi / ell


def locate_beta_c(spec: InteractionSpec | None, ell_pair: tuple[int, int], bracket: tuple[float, float] | None = None,
                  tol: float = 1e-9, eig_tol: float = 1e-13) -> float:
    """Crossing of ``xi(ell)/ell`` curves for two widths.

    Raises:
        ValueError: for equal widths or a bracket without a sign change.
    """
    ell_a, ell_b = ell_pair
    if ell_a == ell_b:
        raise ValueError("crossing needs two different widths")
    if bracket is None:
        bracket = (0.8 * BETA_CRITICAL, 1.1 * BETA_CRITICAL)
    cache = _WidthCache(spec, eig_tol)

    def gap(beta):
        return cache.xi_over_ell(ell_a, beta) - cache.xi_over_ell(ell_b, beta)

    lo, hi = bracket
    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo * g_hi > 0:
        raise ValueError(f"xi/ell curves for widths {ell_pair} do not cross in [{lo}, {hi}]")
    return float(brentq(gap, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps))


__all__ = [
    "MAX_WIDTH", "SpectralData", "TransferOperator", "dominant_pair", "locate_beta_c",
    "split_couplings", "strip_free_energy",
]
