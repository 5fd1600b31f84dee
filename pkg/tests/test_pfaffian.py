from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from charge_meter.errors import SingularPivotError
from charge_meter.pfaffian import pfaffian, pfaffian_batch


def pf_by_pairings(a):
    """Expansion along the first row; the reference for small matrices."""
    n = a.shape[0]
    if n == 0:
        return 1.0
    total = 0.0
    for j in range(1, n):
        keep = [k for k in range(n) if k not in (0, j)]
        total += (-1) ** (j + 1) * a[0, j] * pf_by_pairings(a[np.ix_(keep, keep)])
    return total


def skew(rng, n):
    m = rng.normal(size=(n, n))
    return m - m.T


@given(st.integers(1, 4), st.integers(0, 10 ** 6))
def test_matches_pairing_expansion(half, seed):
    a = skew(np.random.default_rng(seed), 2 * half)
    ref = pf_by_pairings(a)
    assert pfaffian(a).to_float() == pytest.approx(ref, rel=1e-10, abs=1e-12)


@given(st.integers(1, 10), st.integers(0, 10 ** 6))
def test_square_is_determinant(half, seed):
    a = skew(np.random.default_rng(seed), 2 * half)
    sign, logdet = np.linalg.slogdet(a)
    assert sign > 0
    assert 2 * pfaffian(a).log_abs == pytest.approx(logdet, abs=1e-9)


@given(st.integers(1, 6), st.integers(0, 10 ** 6))
def test_congruence(half, seed):
    rng = np.random.default_rng(seed)
    a = skew(rng, 2 * half)
    b = rng.normal(size=a.shape)
    lhs = pfaffian(b @ a @ b.T).to_float()
    assert lhs == pytest.approx(np.linalg.det(b) * pfaffian(a).to_float(), rel=1e-8)


def test_standard_block():
    j = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert pfaffian(np.kron(np.eye(3), j)).to_float() == pytest.approx(1.0)


def test_batch_agrees_with_single():
    rng = np.random.default_rng(7)
    mats = np.stack([skew(rng, 6) for _ in range(5)])
    signs, logs = pfaffian_batch(mats)
    for m, s, lg in zip(mats, signs, logs):
        one = pfaffian(m)
        assert s == one.sign and lg == pytest.approx(one.log_abs)


def test_singular_matrix():
    a = np.zeros((4, 4))
    a[0, 1], a[1, 0] = 1.0, -1.0
    with pytest.raises(SingularPivotError):
        pfaffian(a)
    assert pfaffian(a, strict=False).sign == 0


def test_rejects_non_skew():
    with pytest.raises(ValueError):
        pfaffian(np.ones((2, 2)))
    with pytest.raises(ValueError):
        pfaffian(np.zeros((3, 3)))


def test_large_entries_do_not_overflow():
    a = np.kron(np.eye(200), np.array([[0.0, 1e10], [-1e10, 0.0]]))
    assert pfaffian(a).log_abs == pytest.approx(200 * math.log(1e10))
