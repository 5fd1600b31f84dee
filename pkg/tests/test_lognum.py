from __future__ import annotations

import math

import pytest
from hypothesis import assume, given, strategies as st

from charge_meter.errors import CancellationError
from charge_meter.lognum import LogNumber, log_sum, signed_logsumexp

vals = st.floats(-1e6, 1e6, allow_nan=False).filter(lambda v: v == 0 or abs(v) > 1e-6)


@given(vals, vals)
def test_arithmetic_matches_floats(a, b):
    x, y = LogNumber.from_value(a), LogNumber.from_value(b)
    assert (x * y).to_float() == pytest.approx(a * b, rel=1e-12, abs=1e-300)
    assert (x + y).to_float() == pytest.approx(a + b, rel=1e-9, abs=1e-9 * (abs(a) + abs(b)))
    assert (x - y).to_float() == pytest.approx(a - b, rel=1e-9, abs=1e-9 * (abs(a) + abs(b)))
    if b:
        assert (x / y).to_float() == pytest.approx(a / b, rel=1e-12)


def test_huge_magnitudes_stay_finite():
    big = LogNumber(1, 5000.0)
    total = log_sum([big, big])
    assert total.log_abs == pytest.approx(5000 + math.log(2))
    assert big.log10_abs == pytest.approx(5000 / math.log(10))


def test_zero_has_sign_zero():
    z = LogNumber.zero()
    assert z.sign == 0 and z.to_float() == 0.0
    assert (z * LogNumber.from_value(3.0)).sign == 0


def test_cancellation_is_detected():
    with pytest.raises(CancellationError):
        signed_logsumexp([1, -1], [10.0, 10.0], check_cancellation=1e-8)
    ok = signed_logsumexp([1, -1], [10.0, 9.0], check_cancellation=1e-8)
    assert ok.to_float() == pytest.approx(math.exp(10) - math.exp(9))


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=8))
def test_signed_logsumexp_of_positive_terms(logs):
    out = signed_logsumexp([1] * len(logs), logs)
    assume(out.sign)
    assert out.log_abs == pytest.approx(math.log(math.fsum(math.exp(v) for v in logs)), rel=1e-12, abs=1e-12)
